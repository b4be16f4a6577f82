"""實係數多項式 - 係數以升冪排列（coeffs[k] 乘以 s^k）"""
import logging
import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from numpy.polynomial import polynomial as npoly

from app.errors import DomainError

logger = logging.getLogger(__name__)

# 正規化時捨棄 |c| <= TRIM_RTOL * max|c| 的最高次係數
TRIM_RTOL = 1e-12
ROOT_RESIDUAL_TOL = 1e-8
COPRIME_TOL = 1e-7


def _normalize(coeffs: Iterable[float]) -> tuple[float, ...]:
    values = [float(c) for c in coeffs]
    if not values:
        return (0.0,)
    if not all(math.isfinite(c) for c in values):
        raise DomainError(f"polynomial coefficients must be finite: {values}")
    scale = max(abs(c) for c in values)
    if scale == 0.0:
        return (0.0,)
    cutoff = TRIM_RTOL * scale
    end = len(values)
    while end > 1 and abs(values[end - 1]) <= cutoff:
        end -= 1
    return tuple(values[:end])


@dataclass(frozen=True)
class Polynomial:
    coeffs: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _normalize(self.coeffs))

    @classmethod
    def constant(cls, value: float) -> "Polynomial":
        return cls((value,))

    @classmethod
    def s(cls) -> "Polynomial":
        """多項式變數 s"""
        return cls((0.0, 1.0))

    @classmethod
    def from_roots(cls, rts: Iterable[complex], gain: float = 1.0) -> "Polynomial":
        """由根建立多項式（複數根需成對出現）"""
        coeffs = npoly.polyfromroots(list(rts)) * gain
        return cls(tuple(np.real_if_close(coeffs, tol=1e6).real))

    @property
    def degree(self) -> int:
        return 0 if self.is_zero else len(self.coeffs) - 1

    @property
    def is_zero(self) -> bool:
        return len(self.coeffs) == 1 and self.coeffs[0] == 0.0

    @property
    def leading(self) -> float:
        return self.coeffs[-1]

    def as_array(self) -> np.ndarray:
        return np.asarray(self.coeffs, dtype=float)

    def norm(self) -> float:
        return float(np.linalg.norm(self.as_array()))

    def __add__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return poly_add(self, other)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(tuple(-c for c in self.coeffs))

    def __sub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return poly_add(self, -other)

    def __rsub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return poly_add(other, -self)

    def __mul__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return poly_mul(self, other)

    __rmul__ = __mul__

    def __call__(self, s0):
        return poly_eval(self, s0)

    def __str__(self):
        return format_polynomial(self)


def _coerce(value) -> Polynomial:
    if isinstance(value, Polynomial):
        return value
    if isinstance(value, (int, float, np.floating, np.integer)):
        return Polynomial.constant(float(value))
    return NotImplemented


def format_polynomial(p: Polynomial, var: str = "s") -> str:
    """以降冪格式輸出，例如 s^2 + 3 s + 2"""
    if p.is_zero:
        return "0"
    terms = []
    for k in range(len(p.coeffs) - 1, -1, -1):
        c = p.coeffs[k]
        if c == 0.0:
            continue
        mag = abs(c)
        if k == 0:
            body = f"{mag:.6g}"
        else:
            power = var if k == 1 else f"{var}^{k}"
            body = power if math.isclose(mag, 1.0) else f"{mag:.6g} {power}"
        sign = "-" if c < 0 else "+"
        terms.append((sign, body))
    first_sign, first_body = terms[0]
    text = ("-" if first_sign == "-" else "") + first_body
    for sign, body in terms[1:]:
        text += f" {sign} {body}"
    return text


def poly_add(p: Polynomial, q: Polynomial) -> Polynomial:
    return Polynomial(tuple(npoly.polyadd(p.as_array(), q.as_array())))


def poly_mul(p: Polynomial, q: Polynomial) -> Polynomial:
    return Polynomial(tuple(npoly.polymul(p.as_array(), q.as_array())))


def poly_eval(p: Polynomial, s0: complex) -> complex:
    """Horner 法求值"""
    acc = 0j
    for c in reversed(p.coeffs):
        acc = acc * s0 + c
    return acc


def poly_derivative(p: Polynomial) -> Polynomial:
    return Polynomial(tuple(npoly.polyder(p.as_array()))) if p.degree >= 1 else Polynomial.constant(0.0)


def roots(p: Polynomial) -> list[complex]:
    """
    求所有根（含重根）

    以平衡後伴隨矩陣的特徵值求得（LAPACK 平移 QR），再以 Newton 法修飾，
    最後強制複數根以共軛成對出現。
    """
    if p.degree < 1:
        raise DomainError("no roots defined")

    companion = npoly.polycompanion(p.as_array())
    raw = np.linalg.eigvals(companion).astype(complex)

    dp = poly_derivative(p)
    polished = [_polish(p, dp, complex(r)) for r in raw]
    paired = _pair_conjugates(polished)

    bound = ROOT_RESIDUAL_TOL * max(1.0, p.norm())
    worst = max(abs(poly_eval(p, r)) for r in paired)
    if worst > bound:
        logger.warning(f"Root residual {worst:.3e} exceeds bound {bound:.3e} for degree {p.degree}")
    return sorted(paired, key=lambda r: (r.real, r.imag))


def _polish(p: Polynomial, dp: Polynomial, r: complex, iterations: int = 3) -> complex:
    best = r
    best_res = abs(poly_eval(p, r))
    for _ in range(iterations):
        slope = poly_eval(dp, best)
        if slope == 0:
            break
        candidate = best - poly_eval(p, best) / slope
        res = abs(poly_eval(p, candidate))
        if not res < best_res:
            break
        best, best_res = candidate, res
    return best


def _pair_conjugates(rts: list[complex]) -> list[complex]:
    # 虛部可忽略者視為實根；其餘上下半平面逐一配對取平均
    real_tol = 1e-10
    upper, lower, result = [], [], []
    for r in rts:
        if abs(r.imag) <= real_tol * max(1.0, abs(r)):
            result.append(complex(r.real, 0.0))
        elif r.imag > 0:
            upper.append(r)
        else:
            lower.append(r)

    while upper and lower:
        z = upper.pop()
        j = min(range(len(lower)), key=lambda i: abs(lower[i] - z.conjugate()))
        w = lower.pop(j)
        mean = (z + w.conjugate()) / 2
        result.extend([mean, mean.conjugate()])
    for r in upper + lower:
        result.append(complex(r.real, 0.0))
    return result


@dataclass(frozen=True)
class RouthResult:
    first_column: tuple[float, ...]
    epsilon_substituted: bool
    zero_row: bool

    @property
    def sign_changes(self) -> int:
        col = self.first_column
        return sum(1 for x, y in zip(col, col[1:]) if (x > 0) != (y > 0))


def routh_table(p: Polynomial, epsilon: float = 1e-9) -> RouthResult:
    """
    Routh 表第一欄

    第一欄出現零但整列非零時以 +epsilon 取代；整列為零時改用輔助多項式的導數。
    """
    if p.is_zero:
        raise DomainError("Routh table undefined for the zero polynomial")

    desc = list(reversed(p.coeffs))
    if desc[0] < 0:
        desc = [-c for c in desc]
    n = len(desc) - 1
    width = n // 2 + 1
    row0 = desc[0::2] + [0.0] * (width - len(desc[0::2]))
    row1 = desc[1::2] + [0.0] * (width - len(desc[1::2]))

    scale = max(abs(c) for c in desc)
    column = [row0[0]]
    substituted = False
    zero_row = False

    if n == 0:
        return RouthResult(tuple(column), False, False)

    prev, cur = row0, row1
    for i in range(1, n + 1):
        row_scale = max(scale, max(abs(x) for x in prev))
        if all(abs(x) <= TRIM_RTOL * row_scale for x in cur):
            # 輔助多項式：上一列對應 s^(n-i+1), s^(n-i-1), ...
            zero_row = True
            order = n - i + 1
            cur = [prev[j] * (order - 2 * j) for j in range(width)]
            if all(x == 0.0 for x in cur):
                cur = [0.0] * width
                cur[0] = epsilon
        if abs(cur[0]) <= TRIM_RTOL * row_scale:
            substituted = True
            cur = [epsilon * row_scale] + cur[1:]
        column.append(cur[0])
        if i == n:
            break
        nxt = [
            (cur[0] * prev[j + 1] - prev[0] * cur[j + 1]) / cur[0] if j + 1 < width else 0.0
            for j in range(width)
        ]
        prev, cur = cur, nxt

    return RouthResult(tuple(column), substituted, zero_row)


def is_hurwitz(p: Polynomial) -> bool:
    """所有根實部皆為負（Routh-Hurwitz 準則，不求根）"""
    if p.is_zero:
        raise DomainError("is_hurwitz undefined for the zero polynomial")
    if p.degree == 0:
        return True
    table = routh_table(p)
    if table.epsilon_substituted or table.zero_row:
        return False
    return all(x > 0 for x in table.first_column)


def coprime(p: Polynomial, q: Polynomial, tol: float = COPRIME_TOL) -> bool:
    """p 與 q 沒有距離在 tol 以內的根"""
    if p.is_zero or q.is_zero:
        raise DomainError("coprime requires nonzero polynomials")
    if p.degree == 0 or q.degree == 0:
        return True
    q_roots = roots(q)
    return all(abs(r - w) > tol for r in roots(p) for w in q_roots)


def max_real_root(p: Polynomial) -> float:
    """最大根實部（常數多項式回傳 -inf）"""
    if p.degree < 1:
        return -math.inf
    return max(r.real for r in roots(p))
