"""零動態注入攻擊與偵測判定"""
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from app.errors import DomainError


class InjectionPoint(str, Enum):
    FORWARD_W = "forward_w"
    FEEDBACK_Z = "feedback_z"


class AttackTarget(str, Enum):
    ORIGINAL_P = "original_P"
    ATTACKER_VIEW_P_BAR = "attacker_view_P_bar"


class Verdict(str, Enum):
    DETECTED = "DETECTED"
    STEALTHY = "STEALTHY"
    CORRECTED = "CORRECTED"


@dataclass(frozen=True)
class ZeroDynAttack:
    """
    W(s) = w0/(s - zeta) 或 Z(s) = z0/(s - lambda)

    mode 為複數時，實際注入的訊號為 amplitude·e^(σt)·cos(ωt + phase)，
    conjugate 記錄共軛根。
    """

    point: InjectionPoint
    mode: complex
    amplitude: float
    phase: float = 0.0
    target: AttackTarget = AttackTarget.ORIGINAL_P
    conjugate: Optional[complex] = None

    def __post_init__(self):
        if not math.isfinite(self.amplitude) or self.amplitude == 0.0:
            raise DomainError("attack amplitude must be finite and nonzero")
        object.__setattr__(self, "mode", complex(self.mode))

    @property
    def sigma(self) -> float:
        return self.mode.real

    @property
    def omega(self) -> float:
        return self.mode.imag


def signal_of(atk: ZeroDynAttack, t):
    """攻擊訊號在時間 t 的值（t 可為純量或陣列）"""
    t = np.asarray(t, dtype=float)
    value = atk.amplitude * np.exp(atk.sigma * t) * np.cos(atk.omega * t + atk.phase)
    return float(value) if value.ndim == 0 else value


@dataclass(frozen=True)
class DetectionVerdict:
    verdict: Verdict
    detect_time: Optional[float]
    peak_residual: float
    steady_state_deviation: float

    def __post_init__(self):
        if (self.verdict is Verdict.DETECTED) != (self.detect_time is not None):
            raise DomainError("detect_time must be present exactly when the verdict is DETECTED")

    @property
    def detected(self) -> bool:
        return self.verdict is Verdict.DETECTED
