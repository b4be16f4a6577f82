"""有理轉移函數與狀態空間實現"""
import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from numpy.polynomial import polynomial as npoly

from app.errors import DomainError
from app.models.polynomial import (
    Polynomial,
    format_polynomial,
    is_hurwitz,
    poly_eval,
    roots,
)

logger = logging.getLogger(__name__)

POLE_EVAL_RTOL = 1e-12
REDUCE_TOL = 1e-8
AXIS_POLE_TOL = 1e-9


@dataclass(frozen=True)
class RationalTf:
    """m(s)/n(s)，不自動約分"""

    num: Polynomial
    den: Polynomial

    def __post_init__(self):
        if not isinstance(self.num, Polynomial):
            object.__setattr__(self, "num", Polynomial(tuple(self.num)))
        if not isinstance(self.den, Polynomial):
            object.__setattr__(self, "den", Polynomial(tuple(self.den)))
        if self.den.is_zero:
            raise DomainError("transfer function denominator is the zero polynomial")

    @classmethod
    def from_coeffs(cls, num, den) -> "RationalTf":
        return cls(Polynomial(tuple(num)), Polynomial(tuple(den)))

    @classmethod
    def constant(cls, k: float) -> "RationalTf":
        return cls(Polynomial.constant(k), Polynomial.constant(1.0))

    @property
    def relative_degree(self) -> int:
        return self.den.degree - self.num.degree

    @property
    def is_proper(self) -> bool:
        return self.num.is_zero or self.num.degree <= self.den.degree

    @property
    def is_strictly_proper(self) -> bool:
        return self.num.is_zero or self.num.degree < self.den.degree

    def zeros(self) -> list[complex]:
        return roots(self.num) if self.num.degree >= 1 else []

    def poles(self) -> list[complex]:
        return roots(self.den) if self.den.degree >= 1 else []

    def __call__(self, s0: complex) -> complex:
        return tf_eval(self, s0)

    def __add__(self, other):
        other = _coerce(other)
        return NotImplemented if other is NotImplemented else tf_arith(self, other, TfOp.ADD)

    __radd__ = __add__

    def __sub__(self, other):
        other = _coerce(other)
        return NotImplemented if other is NotImplemented else tf_arith(self, other, TfOp.SUB)

    def __rsub__(self, other):
        other = _coerce(other)
        return NotImplemented if other is NotImplemented else tf_arith(other, self, TfOp.SUB)

    def __mul__(self, other):
        other = _coerce(other)
        return NotImplemented if other is NotImplemented else tf_arith(self, other, TfOp.MUL)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _coerce(other)
        return NotImplemented if other is NotImplemented else tf_arith(self, other, TfOp.DIV)

    def __rtruediv__(self, other):
        other = _coerce(other)
        return NotImplemented if other is NotImplemented else tf_arith(other, self, TfOp.DIV)

    def __neg__(self):
        return RationalTf(-self.num, self.den)

    def __str__(self):
        return f"({format_polynomial(self.num)}) / ({format_polynomial(self.den)})"


def _coerce(value):
    if isinstance(value, RationalTf):
        return value
    if isinstance(value, Polynomial):
        return RationalTf(value, Polynomial.constant(1.0))
    if isinstance(value, (int, float, np.floating, np.integer)):
        return RationalTf.constant(float(value))
    return NotImplemented


class TfOp(str, Enum):
    ADD = "add"
    SUB = "sub"
    MUL = "mul"
    DIV = "div"


def tf_eval(g: RationalTf, s0: complex) -> complex:
    den_val = poly_eval(g.den, s0)
    # 以 |s0| 的冪次估計分母量級
    scale = sum(abs(c) * abs(s0) ** k for k, c in enumerate(g.den.coeffs))
    if abs(den_val) <= POLE_EVAL_RTOL * max(scale, 1e-300):
        raise DomainError(f"pole at evaluation point s={s0}")
    return poly_eval(g.num, s0) / den_val


def tf_arith(g: RationalTf, h: RationalTf, op: TfOp | str) -> RationalTf:
    """有理函數四則運算（不約分）"""
    op = TfOp(op)
    if op is TfOp.ADD:
        return RationalTf(g.num * h.den + h.num * g.den, g.den * h.den)
    if op is TfOp.SUB:
        return RationalTf(g.num * h.den - h.num * g.den, g.den * h.den)
    if op is TfOp.MUL:
        return RationalTf(g.num * h.num, g.den * h.den)
    if h.num.is_zero:
        raise DomainError("division by the zero transfer function")
    return RationalTf(g.num * h.den, g.den * h.num)


@dataclass(frozen=True)
class Cancellation:
    zero: complex
    pole: complex

    @property
    def unstable(self) -> bool:
        return self.pole.real >= 0

    @property
    def flag(self) -> str:
        return "UNSTABLE_CANCELLATION" if self.unstable else "STABLE_CANCELLATION"


@dataclass(frozen=True)
class ReductionReport:
    cancelled: tuple[Cancellation, ...] = ()

    @property
    def has_unstable_cancellation(self) -> bool:
        return any(c.unstable for c in self.cancelled)


def reduce(g: RationalTf, tol: float = REDUCE_TOL) -> tuple[RationalTf, ReductionReport]:
    """
    約分分子分母的公因式

    分母的根若與分子根的距離在 tol 以內，或分子在該點的相對殘差小於 tol，
    即視為公因式並除去；實部 >= 0 的消去會標記為 UNSTABLE_CANCELLATION。
    """
    num, den = g.num, g.den
    cancelled: list[Cancellation] = []

    while num.degree >= 1 and den.degree >= 1:
        hit = _find_common_root(num, den, tol)
        if hit is None:
            break
        zero, pole = hit
        if abs(pole.imag) > 0:
            factor = Polynomial((abs(pole) ** 2, -2.0 * pole.real, 1.0))
            cancelled.append(Cancellation(zero, pole))
            cancelled.append(Cancellation(zero.conjugate(), pole.conjugate()))
        else:
            factor = Polynomial((-pole.real, 1.0))
            cancelled.append(Cancellation(complex(zero.real, 0.0), complex(pole.real, 0.0)))
        num = _divide_out(num, factor)
        den = _divide_out(den, factor)

    report = ReductionReport(tuple(cancelled))
    for c in report.cancelled:
        if c.unstable:
            logger.warning(f"Unstable pole/zero cancellation at s={c.pole:.6g}")
    return RationalTf(num, den), report


def _find_common_root(num: Polynomial, den: Polynomial, tol: float):
    num_roots = roots(num)
    for p in roots(den):
        if p.imag < 0:
            continue
        nearest = min(num_roots, key=lambda z: abs(z - p))
        magnitude = sum(abs(c) * abs(p) ** k for k, c in enumerate(num.coeffs))
        if abs(nearest - p) <= tol or abs(poly_eval(num, p)) <= tol * max(magnitude, 1e-300):
            return nearest, p
    return None


def _divide_out(p: Polynomial, factor: Polynomial) -> Polynomial:
    quotient, _ = npoly.polydiv(p.as_array(), factor.as_array())
    return Polynomial(tuple(quotient))


@dataclass(frozen=True)
class Classification:
    stable: bool
    minimum_phase: bool
    proper: bool
    relative_degree: int


def classify(g: RationalTf) -> Classification:
    stable = is_hurwitz(g.den)
    minimum_phase = g.num.degree == 0 or is_hurwitz(g.num)
    return Classification(
        stable=stable,
        minimum_phase=minimum_phase,
        proper=g.is_proper,
        relative_degree=g.relative_degree,
    )


@dataclass(frozen=True, eq=False)
class StateSpace:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: float = 0.0
    order: int = field(init=False)

    def __post_init__(self):
        n = self.A.shape[0]
        if self.A.shape != (n, n) or self.B.shape != (n, 1) or self.C.shape != (1, n):
            raise DomainError(
                f"inconsistent state-space dimensions A{self.A.shape} B{self.B.shape} C{self.C.shape}"
            )
        for name in ("A", "B", "C"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise DomainError(f"state-space matrix {name} has non-finite entries")
        object.__setattr__(self, "order", n)

    def evaluate(self, s0: complex) -> complex:
        """C (sI - A)^-1 B + D"""
        if self.order == 0:
            return complex(self.D)
        resolvent = np.linalg.solve(s0 * np.eye(self.order) - self.A, self.B)
        return complex((self.C @ resolvent)[0, 0] + self.D)


def realize(g: RationalTf) -> StateSpace:
    """可控標準型實現"""
    if not g.is_proper:
        raise DomainError("not realizable as proper state space")

    lead = g.den.leading
    den = np.asarray(g.den.coeffs) / lead
    n = g.den.degree
    num = np.zeros(n + 1)
    num[: len(g.num.coeffs)] = np.asarray(g.num.coeffs) / lead

    D = float(num[n]) if n >= 0 else 0.0
    if n == 0:
        return StateSpace(np.zeros((0, 0)), np.zeros((0, 1)), np.zeros((1, 0)), float(num[0]))

    A = np.zeros((n, n))
    A[:-1, 1:] = np.eye(n - 1)
    A[-1, :] = -den[:n]
    B = np.zeros((n, 1))
    B[-1, 0] = 1.0
    C = (num[:n] - D * den[:n]).reshape(1, n)
    return StateSpace(A, B, C, D)


def freq_response(g: RationalTf, omegas) -> list[complex]:
    omegas = [float(w) for w in omegas]
    if any(w < 0 for w in omegas):
        raise DomainError("frequencies must be non-negative")
    poles = g.poles()
    response = []
    for w in omegas:
        point = complex(0.0, float(w))
        if any(abs(p - point) <= AXIS_POLE_TOL for p in poles):
            raise DomainError(f"pole on the imaginary axis at omega={w}")
        response.append(tf_eval(g, point))
    return response
