"""報告服務 - analyze / design / attack / simulate 四條流程與輸出格式"""
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from app.errors import DomainError
from app.models.attack import AttackTarget, DetectionVerdict, InjectionPoint, Verdict
from app.models.coding import TwoWayCoding
from app.models.polynomial import Polynomial, format_polynomial, roots, routh_table
from app.models.scenario import Scenario, ScheduledAttack, SignalLog
from app.models.schemas import ScenarioFile
from app.models.transfer_function import RationalTf, classify, reduce
from app.services.attack_service import attack_service
from app.services.design_service import DesignResult, SofGrid, design_service
from app.services.loop_service import ClosedLoopMaps, loop_service
from app.services.simulation_service import simulation_service

logger = logging.getLogger(__name__)

CSV_FLOAT_FORMAT = "%.9g"


@dataclass
class PipelineResult:
    """報告內容，以及需要寫出 CSV 時的訊號紀錄"""

    report: dict
    log: Optional[SignalLog] = None


def _complex(z: complex) -> dict:
    return {"re": float(z.real), "im": float(z.imag)}


def _roots_or_empty(p: Polynomial) -> list[complex]:
    if p.is_zero or p.degree < 1:
        return []
    return roots(p)


def _root_table(rts: list[complex]) -> list[dict]:
    return [{**_complex(r), "left_half_plane": r.real < 0} for r in rts]


def _tf_table(g: RationalTf) -> dict:
    cls = classify(g)
    return {
        "tf": str(g),
        "zeros": _root_table(_roots_or_empty(g.num)),
        "poles": _root_table(_roots_or_empty(g.den)),
        "stable": cls.stable,
        "minimum-phase": cls.minimum_phase,
        "proper": cls.proper,
        "relative_degree": cls.relative_degree,
    }


def _same_roots(a: list[complex], b: list[complex], tol: float = 1e-8) -> bool:
    if len(a) != len(b):
        return False
    remaining = list(b)
    for r in a:
        best = min(range(len(remaining)), key=lambda i: abs(remaining[i] - r))
        if abs(remaining[best] - r) > tol * max(1.0, abs(r)):
            return False
        remaining.pop(best)
    return True


def _coding_dict(M: TwoWayCoding) -> dict:
    return {"a": M.a, "b": M.b, "c": M.c, "d": M.d, "ad-bc": M.delta}


def _verdict_dict(v: DetectionVerdict) -> dict:
    return {
        "verdict": v.verdict.value,
        "detect_time": v.detect_time,
        "peak_residual": v.peak_residual,
        "steady_state_deviation": v.steady_state_deviation,
    }


def _overall_verdict(verdicts: list[DetectionVerdict], combined: DetectionVerdict) -> DetectionVerdict:
    """全部 CORRECTED 才算 CORRECTED；合併殘差或任一單獨攻擊觸發即為 DETECTED"""
    peak, steady = combined.peak_residual, combined.steady_state_deviation
    if all(v.verdict is Verdict.CORRECTED for v in verdicts):
        return DetectionVerdict(Verdict.CORRECTED, None, peak, steady)
    if combined.detected:
        return DetectionVerdict(Verdict.DETECTED, combined.detect_time, peak, steady)
    times = [v.detect_time for v in verdicts if v.detected]
    if times:
        return DetectionVerdict(Verdict.DETECTED, min(times), peak, steady)
    return DetectionVerdict(Verdict.STEALTHY, None, peak, steady)


class ReportService:
    """串接各服務並產生報告"""

    # ==================== 建立領域物件 ====================

    def resolve_coding(self, doc: ScenarioFile) -> tuple[TwoWayCoding, Optional[DesignResult]]:
        """kind = designed 時先跑設計流程"""
        if not doc.coding.is_designed:
            return doc.coding.build(), None
        design = self._run_design(doc)
        return design.coding, design

    def build_scenario(self, doc: ScenarioFile, M: TwoWayCoding, attacks: tuple[ScheduledAttack, ...] = ()) -> Scenario:
        sim = doc.simulation
        return Scenario(
            P=doc.plant.build(),
            K=doc.controller.build(),
            M=M,
            reference=doc.reference.build(),
            attacks=attacks,
            horizon=sim.horizon,
            dt=sim.dt,
            detector_eps=sim.detector_eps,
            initial_state=sim.initial_state,
            plant_x0=tuple(sim.plant_x0) if sim.plant_x0 is not None else None,
        )

    def synth_scheduled_attacks(self, doc: ScenarioFile, M: TwoWayCoding) -> tuple[ScheduledAttack, ...]:
        """依 attacks 區段逐一合成；前向與回授攻擊可同時存在"""
        if not doc.attacks:
            raise DomainError("scenario has no attacks")
        P, K = doc.plant.build(), doc.controller.build()
        P_bar = None
        scheduled = []
        for section in doc.attacks:
            if section.target is AttackTarget.ATTACKER_VIEW_P_BAR:
                if P_bar is None:
                    P_bar, _ = reduce(loop_service.attacker_view(P, K, M).P_bar)
                target = P_bar
            else:
                target = P
            atk = attack_service.synth_attack(
                target,
                section.point,
                mode_selector=section.mode,
                amplitude=section.amplitude,
                phase=section.phase,
                target_kind=section.target,
            )
            scheduled.append(ScheduledAttack(atk, section.start))
        return tuple(scheduled)

    # ==================== 流程 ====================

    def analyze(self, doc: ScenarioFile) -> PipelineResult:
        """等效系統、零極點重新配置與次數檢查"""
        P, K = doc.plant.build(), doc.controller.build()
        M, _ = self.resolve_coding(doc)
        maps = loop_service.closed_loop_maps(P, K, M)
        view = loop_service.attacker_view(P, K, M)
        audit = loop_service.degree_audit(P, M, view)
        plant_rel = loop_service.relocation_polynomials(P, M, check_coprime=P.num.degree >= 1)
        ctrl_rel = loop_service.controller_relocation_polynomials(K, M)

        P_table = _tf_table(P)
        P_bar_table = _tf_table(view.P_bar)
        zeros_unchanged = _same_roots(_roots_or_empty(P.num), _roots_or_empty(view.P_bar.num))
        poles_unchanged = _same_roots(_roots_or_empty(P.den), _roots_or_empty(view.P_bar.den))

        report = {
            "command": "analyze",
            "scenario": doc.name,
            "coding": _coding_dict(M),
            "one_way": M.is_one_way,
            "nominal": {
                "char_poly": format_polynomial(maps.char_poly),
                "stable": maps.nominal_stable,
            },
            "P": P_table,
            "K": _tf_table(K),
            "P_bar": P_bar_table,
            "K_bar": _tf_table(view.K_bar),
            "ref_factor": str(view.ref_factor) if view.ref_factor_defined else "undefined",
            "relocation": {
                "zero_poly": format_polynomial(plant_rel.zero_poly),
                "pole_poly": format_polynomial(plant_rel.pole_poly),
                "controller_zero_poly": format_polynomial(ctrl_rel.zero_poly),
                "controller_pole_poly": format_polynomial(ctrl_rel.pole_poly),
                "zeros_unchanged": zeros_unchanged,
                "poles_unchanged": poles_unchanged,
            },
            "degree_audit": {
                "zero_poly_degree": audit.zero_poly_degree,
                "zero_poly_expected": audit.zero_poly_expected,
                "pole_poly_degree": audit.pole_poly_degree,
                "pole_poly_expected": audit.pole_poly_expected,
                "P_bar_relative_degree": audit.P_bar_relative_degree,
                "K_bar_relative_degree": audit.K_bar_relative_degree,
                "flags": list(audit.flags),
            },
            "maps": {f"{src}->{out}": str(g) for src, out, g in maps.items()},
        }
        if zeros_unchanged and poles_unchanged:
            report["summary"] = "zeros and poles unchanged"
        else:
            report["summary"] = "zeros/poles relocated"
        logger.info(f"Analyzed scenario '{doc.name}' with {M}")
        return PipelineResult(report)

    def design(self, doc: ScenarioFile) -> PipelineResult:
        """設計編碼並附上 Hurwitz 證明"""
        result = self._run_design(doc)
        P_bar, _ = reduce(result.P_bar)
        report = {
            "command": "design",
            "scenario": doc.name,
            "coding": _coding_dict(result.coding),
            "F1": self._certificate(result.F1),
            "F2": self._certificate(result.F2),
            "P_bar": _tf_table(P_bar),
            "stable": result.stable,
            "minimum-phase": result.minimum_phase,
        }
        return PipelineResult(report)

    def attack(self, doc: ScenarioFile) -> PipelineResult:
        """
        合成攻擊、模擬、殘差偵測與判定

        每個攻擊以單獨注入的模擬各自判定；整體判定與 CSV 取自全部攻擊同時注入的模擬。
        """
        M, _ = self.resolve_coding(doc)
        scheduled = self.synth_scheduled_attacks(doc, M)
        sc = self.build_scenario(doc, M, scheduled)
        maps = loop_service.closed_loop_maps(sc.P, sc.K, M)

        log = simulation_service.simulate(sc)
        combined = self._detect(sc, maps, log)

        entries, verdicts = [], []
        for item in scheduled:
            if len(scheduled) == 1:
                observed = combined
            else:
                alone = sc.with_changes(attacks=(item,))
                observed = self._detect(alone, maps, simulation_service.simulate(alone))
            atk = item.attack
            verdict = attack_service.classify_attack(maps, atk, sc.detector_eps, observed, item.start)
            gain = attack_service.blocking_gain(maps, atk)
            verdicts.append(verdict)
            entries.append(
                {
                    "point": atk.point.value,
                    "target": atk.target.value,
                    "mode": _complex(atk.mode),
                    "amplitude": atk.amplitude,
                    "phase": atk.phase,
                    "start": item.start,
                    "monitored_channel": "w->y" if atk.point is InjectionPoint.FORWARD_W else "z->y",
                    "blocking_gain": abs(gain),
                    "blocked": attack_service.is_blocked(maps, atk, gain),
                    **_verdict_dict(verdict),
                    "simulated": _verdict_dict(observed),
                }
            )

        overall = _overall_verdict(verdicts, combined)
        norm = log.plant_state_norm
        report = {
            "command": "attack",
            "scenario": doc.name,
            "coding": _coding_dict(M),
            "attacks": entries,
            **_verdict_dict(overall),
            "simulated": _verdict_dict(combined),
            "plant_state_norm": {
                "initial": float(norm[0]),
                "final": float(norm[-1]),
                "max": float(np.max(norm)),
            },
            "diverged_at": log.diverged_at,
        }
        logger.info(f"Attack on '{doc.name}': {overall.verdict.value} ({len(scheduled)} attack(s))")
        return PipelineResult(report, log)

    def simulate(self, doc: ScenarioFile, check_round_trip: bool = False) -> PipelineResult:
        M, _ = self.resolve_coding(doc)
        attacks = self.synth_scheduled_attacks(doc, M) if doc.attacks else ()
        sc = self.build_scenario(doc, M, attacks)
        log = simulation_service.simulate(sc)

        report = {
            "command": "simulate",
            "scenario": doc.name,
            "coding": _coding_dict(M),
            "samples": int(log.t.size),
            "diverged_at": log.diverged_at,
        }
        if log.diverged:
            report["message"] = f"divergence at t={log.diverged_at:.6g}"
        if check_round_trip or doc.simulation.check_round_trip:
            report["round_trip"] = simulation_service.round_trip_error(log)
        if doc.simulation.crossvalidate:
            maps = loop_service.closed_loop_maps(sc.P, sc.K, M)
            cv = simulation_service.crossvalidate(sc, maps)
            report["crossvalidate"] = {
                "omega": cv.omega,
                "max_relative_error": cv.max_relative_error,
                "result": "PASS" if cv.passed else "FAIL",
                "channels": {
                    f"{c.source}->{c.output}": {
                        "relative_error": c.relative_error,
                        "amplitude_error": c.amplitude_error,
                        "phase_error": c.phase_error,
                    }
                    for c in cv.checks
                },
            }
        return PipelineResult(report, log)

    # ==================== 輸出 ====================

    def write_csv(self, log: SignalLog, path: Path) -> Path:
        """固定欄位順序、9 位有效數字、LF 換行"""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        log.to_frame().to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
        logger.info(f"Wrote {log.t.size} samples to {path}")
        return path

    def render_text(self, report: dict) -> str:
        lines: list[str] = []
        _render(report, lines, 0)
        return "\n".join(lines) + "\n"

    def write_report(self, report: dict, path: Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.render_text(report), encoding="utf-8")
        return path

    # ==================== 內部 ====================

    def _detect(self, sc: Scenario, maps: ClosedLoopMaps, log: SignalLog) -> DetectionVerdict:
        return attack_service.residual_detector(
            log.t, log.y, log.r, maps.r_to_y, sc.detector_eps, reference=sc.reference
        )

    def _run_design(self, doc: ScenarioFile) -> DesignResult:
        P = doc.plant.build()
        section = doc.design
        if section is not None and section.F1 is not None:
            return design_service.design_from_gains(P, section.F1, section.F2)
        grid = SofGrid() if section is None else SofGrid(section.points_per_sign, section.low, section.high)
        gains = design_service.sof_search(P, grid)
        F1, F2 = design_service.default_pair(gains)
        logger.info(f"Default gain pair from {len(gains)} grid hits: F1={F1:.6g}, F2={F2:.6g}")
        return design_service.design_from_gains(P, F1, F2)

    def _certificate(self, gain) -> dict:
        table = routh_table(gain.closed_poly)
        return {
            "F": gain.F,
            "role": gain.role.value,
            "closed_poly": format_polynomial(gain.closed_poly),
            "routh_first_column": list(table.first_column),
            "sign_changes": table.sign_changes,
            "max_real_part": gain.max_real_part if np.isfinite(gain.max_real_part) else None,
            "hurwitz": True,
        }


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "yes" if value else "no"
    if value is None:
        return "-"
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def _render(node, lines: list[str], depth: int):
    pad = "  " * depth
    for key, value in node.items():
        if isinstance(value, dict):
            if {"re", "im"} <= set(value) and len(value) <= 3:
                lines.append(f"{pad}{key}: {_format_root(value)}")
                continue
            lines.append(f"{pad}{key}:")
            _render(value, lines, depth + 1)
        elif isinstance(value, list):
            if value and isinstance(value[0], dict):
                lines.append(f"{pad}{key}:")
                for index, item in enumerate(value):
                    if {"re", "im"} <= set(item):
                        lines.append(f"{pad}  - {_format_root(item)}")
                    else:
                        lines.append(f"{pad}  - [{index}]")
                        _render(item, lines, depth + 2)
            else:
                lines.append(f"{pad}{key}: [{', '.join(_format_value(v) for v in value)}]")
        else:
            lines.append(f"{pad}{key}: {_format_value(value)}")


def _format_root(item: dict) -> str:
    text = f"{item['re']:.6g}{item['im']:+.6g}j"
    if "left_half_plane" in item:
        text += " (LHP)" if item["left_half_plane"] else " (RHP/axis)"
    return text


# 單例實例
report_service = ReportService()
