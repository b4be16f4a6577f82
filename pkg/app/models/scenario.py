"""模擬情境與訊號紀錄"""
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional

import numpy as np
import pandas as pd

from app.errors import DomainError
from app.models.attack import InjectionPoint, ZeroDynAttack, signal_of
from app.models.coding import TwoWayCoding
from app.models.transfer_function import RationalTf

# CSV 欄位順序固定
CHANNELS = ("r", "u", "q", "qbar", "ubar", "ybar", "vbar", "v", "y", "w", "z")
CSV_COLUMNS = ("t",) + CHANNELS + ("plant_state_norm",)


class ReferenceKind(str, Enum):
    ZERO = "zero"
    STEP = "step"
    SINE = "sine"


class InitialState(str, Enum):
    ZERO = "zero"
    ATTACK_ALIGNED = "attack_aligned"


@dataclass(frozen=True)
class ReferenceSpec:
    kind: ReferenceKind = ReferenceKind.ZERO
    amplitude: float = 1.0
    t_on: float = 0.0
    omega: float = 1.0
    phase: float = 0.0

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind is ReferenceKind.STEP:
            value = np.where(t >= self.t_on, self.amplitude, 0.0)
        elif self.kind is ReferenceKind.SINE:
            value = self.amplitude * np.sin(self.omega * t + self.phase)
        else:
            value = np.zeros_like(t)
        return float(value) if value.ndim == 0 else value


@dataclass(frozen=True)
class ScheduledAttack:
    attack: ZeroDynAttack
    start: float = 0.0

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        value = np.where(t >= self.start, signal_of(self.attack, np.maximum(t - self.start, 0.0)), 0.0)
        return float(value) if value.ndim == 0 else value


@dataclass(frozen=True)
class ExcitationSignal:
    """頻率響應交叉驗證用的正弦注入"""

    point: InjectionPoint
    omega: float
    amplitude: float = 1.0
    phase: float = 0.0

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        value = self.amplitude * np.sin(self.omega * t + self.phase)
        return float(value) if value.ndim == 0 else value


@dataclass(frozen=True)
class Scenario:
    P: RationalTf
    K: RationalTf
    M: TwoWayCoding
    reference: ReferenceSpec = field(default_factory=ReferenceSpec)
    attacks: tuple[ScheduledAttack, ...] = ()
    excitations: tuple[ExcitationSignal, ...] = ()
    horizon: float = 10.0
    dt: float = 1e-3
    detector_eps: float = 1e-3
    initial_state: InitialState = InitialState.ZERO
    plant_x0: Optional[tuple[float, ...]] = None

    def __post_init__(self):
        object.__setattr__(self, "attacks", tuple(self.attacks))
        object.__setattr__(self, "excitations", tuple(self.excitations))
        if not self.P.is_strictly_proper:
            raise DomainError("algebraic loop through plant unsupported: P must be strictly proper")
        if not self.K.is_proper:
            raise DomainError("controller K must be proper")
        if not (self.horizon > 0 and self.dt > 0):
            raise DomainError("horizon and dt must be positive")
        if self.dt > self.horizon / 100:
            raise DomainError(f"dt={self.dt} exceeds horizon/100={self.horizon / 100}")

    @property
    def steps(self) -> int:
        return int(round(self.horizon / self.dt))

    def exogenous(self, t) -> np.ndarray:
        """外部輸入 [r, w, z]，t 為一維陣列時回傳 (len(t), 3)"""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.zeros((t.size, 3))
        out[:, 0] = self.reference(t)
        for item in self.attacks:
            column = 1 if item.attack.point is InjectionPoint.FORWARD_W else 2
            out[:, column] += item(t)
        for excitation in self.excitations:
            column = 1 if excitation.point is InjectionPoint.FORWARD_W else 2
            out[:, column] += excitation(t)
        return out

    def with_changes(self, **changes) -> "Scenario":
        return replace(self, **changes)


@dataclass(frozen=True, eq=False)
class SignalLog:
    t: np.ndarray
    r: np.ndarray
    u: np.ndarray
    q: np.ndarray
    qbar: np.ndarray
    ubar: np.ndarray
    ybar: np.ndarray
    vbar: np.ndarray
    v: np.ndarray
    y: np.ndarray
    w: np.ndarray
    z: np.ndarray
    plant_state_norm: np.ndarray
    diverged_at: Optional[float] = None

    @property
    def diverged(self) -> bool:
        return self.diverged_at is not None

    def channel(self, name: str) -> np.ndarray:
        if name not in CSV_COLUMNS:
            raise DomainError(f"unknown channel '{name}'")
        return getattr(self, name)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({name: getattr(self, name) for name in CSV_COLUMNS})
