"""閉迴路代數 - 九個閉迴路轉移函數與攻擊者視角的等效系統"""
import logging
from dataclasses import dataclass
from typing import Optional

from app.errors import DomainError
from app.models.coding import TwoWayCoding
from app.models.polynomial import Polynomial, coprime, is_hurwitz
from app.models.transfer_function import RationalTf

logger = logging.getLogger(__name__)

SOURCES = ("r", "w", "z")
OUTPUTS = ("ybar", "y", "ubar")


@dataclass(frozen=True)
class ClosedLoopMaps:
    """所有通道共用特徵多項式 n_K·n_P + m_K·m_P 作為分母（不約分）"""

    r_to_ybar: RationalTf
    w_to_ybar: RationalTf
    z_to_ybar: RationalTf
    r_to_y: RationalTf
    w_to_y: RationalTf
    z_to_y: RationalTf
    r_to_ubar: RationalTf
    w_to_ubar: RationalTf
    z_to_ubar: RationalTf
    char_poly: Polynomial
    nominal_stable: bool

    def channel(self, source: str, output: str) -> RationalTf:
        if source not in SOURCES or output not in OUTPUTS:
            raise DomainError(f"unknown channel {source}->{output}")
        return getattr(self, f"{source}_to_{output}")

    def items(self):
        for source in SOURCES:
            for output in OUTPUTS:
                yield source, output, self.channel(source, output)


@dataclass(frozen=True)
class AttackerView:
    P_bar: RationalTf
    K_bar: RationalTf
    ref_factor: Optional[RationalTf]

    @property
    def ref_factor_defined(self) -> bool:
        return self.ref_factor is not None


@dataclass(frozen=True)
class RelocationPolynomials:
    zero_poly: Polynomial
    pole_poly: Polynomial


@dataclass(frozen=True)
class DegreeAudit:
    zero_poly_degree: int
    zero_poly_expected: int
    pole_poly_degree: int
    pole_poly_expected: int
    P_bar_relative_degree: int
    K_bar_relative_degree: int
    one_way: bool
    flags: tuple[str, ...]

    @property
    def changed(self) -> bool:
        return bool(self.flags)


class LoopService:
    """閉迴路與攻擊者視角的代數運算"""

    def closed_loop_maps(self, P: RationalTf, K: RationalTf, M: TwoWayCoding) -> ClosedLoopMaps:
        """
        由 P、K、M 組出九個閉迴路轉移函數

        分母統一為 a·(n_K n_P + m_K m_P)；攻擊通道以 1 + cK、b - (ad-bc)K、
        P - c、(ad-bc) + bP 的多項式形式組成。
        """
        m_P, n_P = P.num, P.den
        m_K, n_K = K.num, K.den
        chi = n_K * n_P + m_K * m_P
        if chi.is_zero:
            raise DomainError("1 + K P is identically zero")

        stable = is_hurwitz(chi)
        if not stable:
            logger.warning(f"Nominal closed loop is unstable: characteristic polynomial {chi}")

        a, b, c = M.a, M.b, M.c
        delta = M.delta
        a_chi = chi * a

        forward = n_K + m_K * c  # n_K·(1 + cK)
        feedback = n_K * b - m_K * delta  # n_K·(b - δK)
        zero_poly = m_P - n_P * c
        pole_poly = n_P * delta + m_P * b

        return ClosedLoopMaps(
            r_to_ybar=RationalTf(m_K * m_P, chi),
            w_to_ybar=RationalTf(forward * m_P, a_chi),
            z_to_ybar=RationalTf(feedback * m_P, a_chi),
            r_to_y=RationalTf(m_K * m_P, chi),
            w_to_y=RationalTf(n_K * zero_poly, a_chi),
            z_to_y=RationalTf(n_K * pole_poly, a_chi),
            r_to_ubar=RationalTf(m_K * n_P, chi),
            w_to_ubar=RationalTf(forward * n_P, a_chi),
            z_to_ubar=RationalTf(feedback * n_P, a_chi),
            char_poly=chi,
            nominal_stable=stable,
        )

    def attacker_view(self, P: RationalTf, K: RationalTf, M: TwoWayCoding) -> AttackerView:
        """攻擊者看到的等效受控體、等效控制器與參考訊號係數"""
        rel = self.relocation_polynomials(P, M, check_coprime=False)
        P_bar = RationalTf(rel.zero_poly, rel.pole_poly)

        m_K, n_K = K.num, K.den
        feedback = n_K * M.b - m_K * M.delta
        K_bar = RationalTf(feedback, n_K + m_K * M.c)

        if feedback.is_zero:
            ref_factor = None
            logger.info("Reference factor undefined: b - (ad-bc)K vanishes identically")
        else:
            ref_factor = RationalTf(m_K * M.a, feedback)
        return AttackerView(P_bar=P_bar, K_bar=K_bar, ref_factor=ref_factor)

    def relocation_polynomials(
        self, P: RationalTf, M: TwoWayCoding, check_coprime: bool = True
    ) -> RelocationPolynomials:
        """等效受控體的零點多項式 m_P - c·n_P 與極點多項式 (ad-bc)·n_P + b·m_P"""
        m_P, n_P = P.num, P.den
        if check_coprime and m_P.degree >= 1 and n_P.degree >= 1 and not coprime(m_P, n_P):
            raise DomainError("numerator and denominator of P must be coprime for zero/pole relocation")
        return RelocationPolynomials(
            zero_poly=m_P - n_P * M.c,
            pole_poly=n_P * M.delta + m_P * M.b,
        )

    def controller_relocation_polynomials(self, K: RationalTf, M: TwoWayCoding) -> RelocationPolynomials:
        """等效控制器的零點多項式 b·n_K - (ad-bc)·m_K 與極點多項式 n_K + c·m_K"""
        m_K, n_K = K.num, K.den
        return RelocationPolynomials(
            zero_poly=n_K * M.b - m_K * M.delta,
            pole_poly=n_K + m_K * M.c,
        )

    def degree_audit(self, P: RationalTf, M: TwoWayCoding, view: AttackerView) -> DegreeAudit:
        """檢查零點/極點多項式的次數是否因首項係數相消而下降"""
        deg_m, deg_n = P.num.degree, P.den.degree
        zero_expected = deg_m if M.c == 0.0 else max(deg_m, deg_n)
        pole_expected = deg_n if M.b == 0.0 else max(deg_m, deg_n)
        zero_deg = view.P_bar.num.degree
        pole_deg = view.P_bar.den.degree

        flags = []
        if zero_deg < zero_expected:
            flags.append(f"zero_poly degree drop {zero_expected}->{zero_deg}")
        if pole_deg < pole_expected:
            flags.append(f"pole_poly degree drop {pole_expected}->{pole_deg}")
        if view.P_bar.num.degree == 0:
            flags.append("P_bar has no finite zeros")
        if not view.P_bar.is_proper:
            flags.append("P_bar improper")
        if view.P_bar.num.degree == 0 and view.P_bar.den.degree == 0:
            flags.append("P_bar constant")
        if not view.K_bar.is_proper:
            flags.append("K_bar improper")

        # P 本身沒有零點時，零點消失不算變化
        if deg_m == 0:
            flags = [f for f in flags if f != "P_bar has no finite zeros"]

        return DegreeAudit(
            zero_poly_degree=zero_deg,
            zero_poly_expected=zero_expected,
            pole_poly_degree=pole_deg,
            pole_poly_expected=pole_expected,
            P_bar_relative_degree=view.P_bar.relative_degree,
            K_bar_relative_degree=view.K_bar.relative_degree,
            one_way=M.is_one_way,
            flags=tuple(flags),
        )


# 單例實例
loop_service = LoopService()
