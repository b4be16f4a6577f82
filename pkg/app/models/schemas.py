"""情境檔（JSON）的 pydantic 模型"""
from typing import Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app import config
from app.models.attack import AttackTarget, InjectionPoint
from app.models.coding import TwoWayCoding, catalog, new_coding
from app.models.scenario import InitialState, ReferenceKind, ReferenceSpec
from app.models.transfer_function import RationalTf

DESIGNED = "designed"


class TransferFunctionSpec(BaseModel):
    """分子/分母係數，由低次到高次"""

    model_config = ConfigDict(extra="forbid")

    num: list[float] = Field(min_length=1)
    den: list[float] = Field(min_length=1)

    @model_validator(mode="after")
    def check_denominator(self):
        self.build()
        return self

    def build(self) -> RationalTf:
        return RationalTf.from_coeffs(self.num, self.den)


class CodingSpec(BaseModel):
    """
    目錄編碼 {"kind": "shearing1", "params": {"c": 1}}、
    原始元素 {"a": 1, "b": 0, "c": 0, "d": 1}，
    或 {"kind": "designed"} 表示由 design 區段決定
    """

    model_config = ConfigDict(extra="forbid")

    kind: Optional[str] = None
    params: dict[str, float] = Field(default_factory=dict)
    a: Optional[float] = None
    b: Optional[float] = None
    c: Optional[float] = None
    d: Optional[float] = None

    @model_validator(mode="after")
    def check_coding(self):
        raw = (self.a, self.b, self.c, self.d)
        if self.kind is None:
            if any(x is None for x in raw):
                raise ValueError("coding needs either 'kind' or all of a, b, c, d")
        elif any(x is not None for x in raw):
            raise ValueError("coding takes either 'kind' or raw a, b, c, d, not both")
        if not self.is_designed:
            # 無效編碼（ad = 0 或 ad-bc = 0）在此即成為結構錯誤
            self.build()
        return self

    @property
    def is_designed(self) -> bool:
        return self.kind == DESIGNED

    def build(self) -> TwoWayCoding:
        if self.is_designed:
            raise ValueError("designed coding must be resolved by the design pipeline")
        if self.kind is None:
            return new_coding(self.a, self.b, self.c, self.d)
        return catalog(self.kind, **self.params)


class DesignSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    F1: Optional[float] = None
    F2: Optional[float] = None
    points_per_sign: int = Field(default=60, ge=1)
    low: float = Field(default=1e-3, gt=0)
    high: float = Field(default=1e3, gt=0)

    @model_validator(mode="after")
    def check_pair(self):
        if (self.F1 is None) != (self.F2 is None):
            raise ValueError("give both F1 and F2, or neither")
        if self.low >= self.high:
            raise ValueError("grid requires low < high")
        return self


class ReferenceSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: ReferenceKind = ReferenceKind.ZERO
    amplitude: float = 1.0
    t_on: float = Field(default=0.0, ge=0)
    omega: float = Field(default=1.0, gt=0)
    phase: float = 0.0

    def build(self) -> ReferenceSpec:
        return ReferenceSpec(
            kind=self.kind,
            amplitude=self.amplitude,
            t_on=self.t_on,
            omega=self.omega,
            phase=self.phase,
        )


class AttackSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    point: InjectionPoint
    target: AttackTarget = AttackTarget.ORIGINAL_P
    mode: Union[Literal["rightmost"], int] = "rightmost"
    amplitude: float = 0.1
    phase: float = 0.0
    start: float = Field(default=0.0, ge=0)


class SimulationSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    horizon: float = Field(default=10.0, gt=0)
    dt: float = Field(default_factory=lambda: config.DEFAULT_DT, gt=0)
    detector_eps: float = Field(default_factory=lambda: config.DEFAULT_DETECTOR_EPS, gt=0)
    initial_state: InitialState = InitialState.ZERO
    plant_x0: Optional[list[float]] = None
    crossvalidate: bool = False
    check_round_trip: bool = False


class OutputSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    dir: Optional[str] = None
    csv: Optional[str] = None
    report: Optional[str] = None


class ScenarioFile(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str = "scenario"
    plant: TransferFunctionSpec
    controller: TransferFunctionSpec = Field(default_factory=lambda: TransferFunctionSpec(num=[1.0], den=[1.0]))
    coding: CodingSpec = Field(default_factory=lambda: CodingSpec(kind="identity"))
    design: Optional[DesignSection] = None
    reference: ReferenceSection = Field(default_factory=ReferenceSection)
    attacks: list[AttackSection] = Field(default_factory=list)
    simulation: SimulationSection = Field(default_factory=SimulationSection)
    output: OutputSection = Field(default_factory=OutputSection)
