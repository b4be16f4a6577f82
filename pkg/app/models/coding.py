"""雙向編碼矩陣 M = [[a, b], [c, d]] 與特殊編碼目錄"""
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

from app.errors import DomainError
from app.models.polynomial import Polynomial, is_hurwitz, max_real_root
from app.models.transfer_function import RationalTf

VALIDITY_MARGIN = 1e-12


@dataclass(frozen=True)
class TwoWayCoding:
    a: float
    b: float
    c: float
    d: float
    delta: float = field(init=False)

    def __post_init__(self):
        entries = (self.a, self.b, self.c, self.d)
        if not all(math.isfinite(x) for x in entries):
            raise DomainError(f"invalid coding: entries must be finite, got {entries}")
        ad = self.a * self.d
        delta = ad - self.b * self.c
        if abs(ad) <= VALIDITY_MARGIN:
            raise DomainError(f"invalid coding: ad = 0 (condition ad != 0 violated, ad={ad:.3g})")
        if abs(delta) <= VALIDITY_MARGIN:
            raise DomainError(f"invalid coding: ad-bc = 0 (condition ad - bc != 0 violated, ad-bc={delta:.3g})")
        object.__setattr__(self, "delta", delta)

    @property
    def ad(self) -> float:
        return self.a * self.d

    @property
    def is_one_way(self) -> bool:
        return self.b == 0.0 and self.c == 0.0

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.a, self.b, self.c, self.d)

    def __str__(self):
        return f"M=[[{self.a:.6g}, {self.b:.6g}], [{self.c:.6g}, {self.d:.6g}]] (ad-bc={self.delta:.6g})"


def new_coding(a: float, b: float, c: float, d: float) -> TwoWayCoding:
    return TwoWayCoding(float(a), float(b), float(c), float(d))


def inverse(M: TwoWayCoding) -> TwoWayCoding:
    """M^-1 = (d, -b, -c, a) / (ad - bc)"""
    delta = M.delta
    return TwoWayCoding(M.d / delta, -M.b / delta, -M.c / delta, M.a / delta)


def apply_coding(M: TwoWayCoding, x1: float, x2: float) -> tuple[float, float]:
    return (M.a * x1 + M.b * x2, M.c * x1 + M.d * x2)


def compose(M: TwoWayCoding, N: TwoWayCoding) -> tuple[float, float, float, float]:
    """矩陣乘積 M·N 的四個元素（不要求結果為有效編碼）"""
    return (
        M.a * N.a + M.b * N.c,
        M.a * N.b + M.b * N.d,
        M.c * N.a + M.d * N.c,
        M.c * N.b + M.d * N.d,
    )


# ==================== 特殊編碼目錄 ====================

def _require(condition: bool, message: str):
    if not condition:
        raise DomainError(message)


def _nonzero(name: str, value: float):
    _require(abs(value) > VALIDITY_MARGIN and math.isfinite(value), f"{name} must be finite and nonzero")


def _check_angle(theta: float):
    # theta 不可為 pi/2 的奇數倍
    _require(abs(math.cos(theta)) > VALIDITY_MARGIN, "theta must not be an odd multiple of pi/2")


def _check_gamma(gamma: float):
    _require(0.0 < gamma < math.inf, "gamma must satisfy 0 < gamma < inf")


def _identity() -> TwoWayCoding:
    return new_coding(1.0, 0.0, 0.0, 1.0)


def _stretching1(a: float) -> TwoWayCoding:
    _nonzero("a", a)
    return new_coding(a, 0.0, 0.0, 1.0)


def _stretching2(d: float) -> TwoWayCoding:
    _nonzero("d", d)
    return new_coding(1.0, 0.0, 0.0, d)


def _stretching3(a: float, d: float) -> TwoWayCoding:
    _nonzero("a", a)
    _nonzero("d", d)
    return new_coding(a, 0.0, 0.0, d)


def _squeezing(a: float) -> TwoWayCoding:
    """ad = 1 的伸縮矩陣"""
    _nonzero("a", a)
    return new_coding(a, 0.0, 0.0, 1.0 / a)


def _shearing1(c: float) -> TwoWayCoding:
    return new_coding(1.0, 0.0, c, 1.0)


def _shearing2(b: float) -> TwoWayCoding:
    return new_coding(1.0, b, 0.0, 1.0)


def _shearing3(b: float, c: float) -> TwoWayCoding:
    _require(abs(b * c - 1.0) > VALIDITY_MARGIN, "shearing3 requires bc != 1")
    return new_coding(1.0, b, c, 1.0)


def _rotation(theta: float) -> TwoWayCoding:
    _check_angle(theta)
    return new_coding(math.cos(theta), math.sin(theta), -math.sin(theta), math.cos(theta))


def _scattering(gamma: float) -> TwoWayCoding:
    _check_gamma(gamma)
    root = math.sqrt(2.0 * gamma)
    return new_coding(root, 1.0, gamma, root)


def _general_scattering(gamma: float, theta: float) -> TwoWayCoding:
    _check_gamma(gamma)
    _check_angle(theta)
    diag = math.sqrt(gamma) / math.cos(theta)
    return new_coding(diag, math.tan(theta), gamma * math.tan(theta), diag)


def _one_way(alpha: float, beta: float) -> TwoWayCoding:
    """兩個獨立的單向縮放（b = c = 0）"""
    _nonzero("alpha", alpha)
    _nonzero("beta", beta)
    return new_coding(alpha, 0.0, 0.0, beta)


CATALOG: dict[str, Callable[..., TwoWayCoding]] = {
    "identity": _identity,
    "stretching1": _stretching1,
    "stretching2": _stretching2,
    "stretching3": _stretching3,
    "squeezing": _squeezing,
    "shearing1": _shearing1,
    "shearing2": _shearing2,
    "shearing3": _shearing3,
    "rotation": _rotation,
    "scattering": _scattering,
    "general_scattering": _general_scattering,
    "one_way": _one_way,
}


def catalog(kind: str, **params: float) -> TwoWayCoding:
    """依名稱建立特殊編碼，例如 catalog("scattering", gamma=2)"""
    builder = CATALOG.get(kind)
    if builder is None:
        raise DomainError(f"unknown coding kind '{kind}'; expected one of {sorted(CATALOG)}")
    try:
        return builder(**{k: float(v) for k, v in params.items()})
    except TypeError as e:
        raise DomainError(f"bad parameters for coding kind '{kind}': {e}") from e


# ==================== 靜態輸出回饋增益 ====================

class SofRole(str, Enum):
    F1_POLE_PLACER = "F1_pole_placer"
    F2_ZERO_PLACER = "F2_zero_placer"


@dataclass(frozen=True)
class SofGain:
    """n_P + F·m_P 為 Hurwitz 的靜態增益（建立時驗證）"""

    F: float
    role: SofRole
    closed_poly: Polynomial
    max_real_part: float

    def __post_init__(self):
        if not is_hurwitz(self.closed_poly):
            raise DomainError(f"gain not stabilizing: {self.role.value} F={self.F:.6g}")


def sof_polynomial(P: RationalTf, F: float) -> Polynomial:
    return P.den + P.num * F


def make_sof_gain(P: RationalTf, F: float, role: SofRole) -> SofGain:
    closed = sof_polynomial(P, F)
    return SofGain(F=float(F), role=role, closed_poly=closed, max_real_part=max_real_root(closed))
