"""編碼設計服務 - 以靜態輸出回饋增益決定雙向編碼參數"""
import logging
from dataclasses import dataclass

import numpy as np

from app.errors import DomainError, NoResultError, NumericalError
from app.models.coding import SofGain, SofRole, TwoWayCoding, make_sof_gain, new_coding, sof_polynomial
from app.models.polynomial import coprime, is_hurwitz
from app.models.transfer_function import RationalTf, classify
from app.services.loop_service import loop_service

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SofGrid:
    """正負對稱的對數格點，另加 F = 0"""

    points_per_sign: int = 60
    low: float = 1e-3
    high: float = 1e3
    include_zero: bool = True

    def values(self) -> np.ndarray:
        magnitudes = np.logspace(np.log10(self.low), np.log10(self.high), self.points_per_sign)
        parts = [-magnitudes[::-1], magnitudes]
        if self.include_zero:
            parts.insert(1, np.zeros(1))
        return np.concatenate(parts)


@dataclass(frozen=True)
class DesignResult:
    coding: TwoWayCoding
    F1: SofGain
    F2: SofGain
    P_bar: RationalTf
    stable: bool
    minimum_phase: bool


class DesignService:
    """設計使等效受控體穩定且最小相位的編碼"""

    def sof_search(self, P: RationalTf, grid: SofGrid | None = None, role: SofRole = SofRole.F1_POLE_PLACER) -> list[SofGain]:
        """在格點上找出所有使 n_P + F·m_P 為 Hurwitz 的增益（空列表不代表不存在）"""
        grid = grid or SofGrid()
        self._check_plant(P)
        gains = [
            make_sof_gain(P, float(F), role)
            for F in grid.values()
            if is_hurwitz(sof_polynomial(P, float(F)))
        ]
        if not gains:
            logger.info("no stabilizing static gain found on grid")
        else:
            logger.debug(f"sof_search found {len(gains)} gains in [{gains[0].F:.4g}, {gains[-1].F:.4g}]")
        return gains

    def design_from_gains(self, P: RationalTf, F1: float, F2: float) -> DesignResult:
        """
        由兩個穩定化增益設計編碼

        b/(ad-bc) = F1 使極點穩定，c = -1/F2 使零點最小相位；固定 a = 1、ad-bc = 1。
        """
        self._check_plant(P)
        if F2 == 0:
            raise DomainError("c undefined: F2 must be nonzero")
        if F1 == F2:
            raise DomainError("ad would vanish: F1 must differ from F2")

        if F1 == 0 and not is_hurwitz(P.den):
            logger.warning("F1 = 0 keeps the unstable poles of P in the equivalent plant")

        checks = {}
        for name, F, role in (("F1", F1, SofRole.F1_POLE_PLACER), ("F2", F2, SofRole.F2_ZERO_PLACER)):
            poly = sof_polynomial(P, F)
            if not is_hurwitz(poly):
                raise DomainError(f"gain not stabilizing: {name}={F:.6g} leaves {poly} non-Hurwitz")
            checks[name] = make_sof_gain(P, F, role)

        b = float(F1)
        c = -1.0 / float(F2)
        ad = 1.0 + b * c
        coding = new_coding(1.0, b, c, ad)

        view = loop_service.attacker_view(P, RationalTf.constant(1.0), coding)
        cls = classify(view.P_bar)
        if not (cls.stable and cls.minimum_phase):
            logger.error(f"Designed coding failed certification: stable={cls.stable} minimum_phase={cls.minimum_phase}")
            raise NumericalError(
                f"designed equivalent plant failed certification (stable={cls.stable}, minimum_phase={cls.minimum_phase})"
            )
        logger.info(f"Designed coding {coding} from F1={F1:.6g}, F2={F2:.6g}")
        return DesignResult(
            coding=coding,
            F1=checks["F1"],
            F2=checks["F2"],
            P_bar=view.P_bar,
            stable=cls.stable,
            minimum_phase=cls.minimum_phase,
        )

    def default_pair(self, gains: list[SofGain]) -> tuple[float, float]:
        """取格點中位數附近的兩個增益：F1 為中位數，F2 為最接近且非零、不等於 F1 者"""
        if not gains:
            raise NoResultError("no stabilizing static gain found on grid")
        values = sorted(g.F for g in gains)
        F1 = values[len(values) // 2]
        candidates = [F for F in values if F != F1 and F != 0.0]
        if not candidates:
            raise NoResultError("only one usable stabilizing gain found on grid")
        F2 = min(candidates, key=lambda F: abs(F - F1))
        return F1, F2

    def _check_plant(self, P: RationalTf):
        if not P.is_proper:
            raise DomainError("plant must be proper")
        if P.num.degree >= 1 and P.den.degree >= 1 and not coprime(P.num, P.den):
            raise DomainError("numerator and denominator of P must be coprime")


# 單例實例
design_service = DesignService()
