from .polynomial import Polynomial
from .transfer_function import RationalTf, StateSpace
from .coding import TwoWayCoding, SofGain
from .attack import ZeroDynAttack, DetectionVerdict, InjectionPoint, AttackTarget, Verdict
from .scenario import Scenario, SignalLog, ReferenceSpec, ScheduledAttack, ExcitationSignal
from .schemas import ScenarioFile

__all__ = [
    "Polynomial",
    "RationalTf",
    "StateSpace",
    "TwoWayCoding",
    "SofGain",
    "ZeroDynAttack",
    "DetectionVerdict",
    "InjectionPoint",
    "AttackTarget",
    "Verdict",
    "Scenario",
    "SignalLog",
    "ReferenceSpec",
    "ScheduledAttack",
    "ExcitationSignal",
    "ScenarioFile",
]
