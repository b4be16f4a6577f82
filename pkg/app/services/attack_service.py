"""攻擊服務 - 零動態攻擊合成、阻斷測試、判定與殘差偵測"""
import logging
import math
from typing import Optional, Union

import numpy as np

from app.errors import DomainError, NumericalError
from app.models.attack import (
    AttackTarget,
    DetectionVerdict,
    InjectionPoint,
    Verdict,
    ZeroDynAttack,
)
from app.models.polynomial import coprime, poly_eval
from app.models.transfer_function import RationalTf, classify, realize, reduce
from app.services.loop_service import ClosedLoopMaps

logger = logging.getLogger(__name__)

MODE_TOL = 1e-7
BLOCKING_RTOL = 1e-6
DEFAULT_EPS = 1e-3

ModeSelector = Union[int, str]


class AttackService:
    """零動態攻擊的合成與判定"""

    def synth_attack(
        self,
        target: RationalTf,
        point: InjectionPoint | str,
        mode_selector: ModeSelector = "rightmost",
        amplitude: float = 0.1,
        phase: float = 0.0,
        target_kind: AttackTarget | str = AttackTarget.ORIGINAL_P,
    ) -> ZeroDynAttack:
        """
        依目標模型合成攻擊

        前向注入 w 選目標的零點，回授注入 z 選目標的極點；
        mode_selector 可為 "rightmost" 或根的索引（依實部由大到小排序）。
        """
        point = InjectionPoint(point)
        target_kind = AttackTarget(target_kind)
        if target.num.degree >= 1 and target.den.degree >= 1 and not coprime(target.num, target.den):
            raise DomainError("attack target must be coprime")

        if point is InjectionPoint.FORWARD_W:
            candidates = target.zeros()
        else:
            candidates = target.poles()
        if not candidates:
            raise DomainError(f"no admissible mode: target has no finite {'zero' if point is InjectionPoint.FORWARD_W else 'pole'}")

        # 複數根只保留上半平面的代表
        ordered = sorted(
            (r for r in candidates if r.imag >= 0),
            key=lambda r: (-r.real, -r.imag),
        )
        if mode_selector == "rightmost":
            mode = ordered[0]
        else:
            index = int(mode_selector)
            if not 0 <= index < len(ordered):
                raise DomainError(f"no admissible mode: index {index} out of range 0..{len(ordered) - 1}")
            mode = ordered[index]

        conjugate = mode.conjugate() if mode.imag != 0 else None
        attack = ZeroDynAttack(
            point=point,
            mode=mode,
            amplitude=float(amplitude),
            phase=float(phase),
            target=target_kind,
            conjugate=conjugate,
        )
        self.validate(attack, target)
        logger.info(f"Synthesized {point.value} attack at s0={mode:.6g} against {target_kind.value}")
        return attack

    def validate(self, atk: ZeroDynAttack, target: RationalTf):
        """攻擊模態必須是目標的零點（前向）或極點（回授）"""
        pool = target.zeros() if atk.point is InjectionPoint.FORWARD_W else target.poles()
        if not any(abs(atk.mode - r) <= MODE_TOL for r in pool):
            kind = "zero" if atk.point is InjectionPoint.FORWARD_W else "pole"
            raise DomainError(f"attack mode {atk.mode} is not a {kind} of the target model")

    def channel_for(self, maps: ClosedLoopMaps, atk: ZeroDynAttack) -> RationalTf:
        return maps.w_to_y if atk.point is InjectionPoint.FORWARD_W else maps.z_to_y

    def blocking_gain(self, maps: ClosedLoopMaps, atk: ZeroDynAttack) -> complex:
        """監測通道在攻擊模態的增益 G(s0)"""
        channel, _ = reduce(self.channel_for(maps, atk))
        if any(abs(atk.mode - p) <= MODE_TOL for p in channel.poles()):
            raise NumericalError(f"resonant injection: s0={atk.mode} is a pole of the monitored channel")
        return poly_eval(channel.num, atk.mode) / poly_eval(channel.den, atk.mode)

    def is_blocked(self, maps: ClosedLoopMaps, atk: ZeroDynAttack, gain: Optional[complex] = None) -> bool:
        channel, _ = reduce(self.channel_for(maps, atk))
        if gain is None:
            gain = self.blocking_gain(maps, atk)
        return abs(gain) <= BLOCKING_RTOL * _gain_scale(channel)

    def classify_attack(
        self,
        maps: ClosedLoopMaps,
        atk: ZeroDynAttack,
        eps: float = DEFAULT_EPS,
        observed: Optional[DetectionVerdict] = None,
        start: float = 0.0,
    ) -> DetectionVerdict:
        """
        判定攻擊結果

        Re(s0) < 0 時攻擊訊號與效果都會衰減，判為 CORRECTED。
        有模擬結果時，STEALTHY / DETECTED 與偵測時間完全取自殘差偵測；
        沒有時以阻斷增益解析估計，偵測時間自攻擊開始時間 start 起算。
        """
        if observed is not None:
            peak, steady = observed.peak_residual, observed.steady_state_deviation
            if atk.sigma < 0:
                return DetectionVerdict(Verdict.CORRECTED, None, peak, steady)
            if observed.detected:
                if self.is_blocked(maps, atk):
                    logger.warning(
                        f"Blocked mode s0={atk.mode:.6g} still tripped the residual at t={observed.detect_time:.4g}s"
                    )
                return DetectionVerdict(Verdict.DETECTED, observed.detect_time, peak, steady)
            return DetectionVerdict(Verdict.STEALTHY, None, peak, steady)

        if atk.sigma < 0:
            return DetectionVerdict(Verdict.CORRECTED, None, 0.0, 0.0)
        gain = self.blocking_gain(maps, atk)
        if self.is_blocked(maps, atk, gain):
            return DetectionVerdict(Verdict.STEALTHY, None, 0.0, 0.0)

        visible = abs(gain) * abs(atk.amplitude)
        if visible > eps:
            delay = 0.0
        elif atk.sigma > 0:
            delay = math.log(eps / visible) / atk.sigma
        else:
            # 持續但振幅低於門檻
            return DetectionVerdict(Verdict.STEALTHY, None, visible, visible)
        peak = visible * math.exp(atk.sigma * delay)
        return DetectionVerdict(Verdict.DETECTED, start + delay, peak, 0.0)

    def residual_detector(
        self,
        t: np.ndarray,
        y_observed: np.ndarray,
        r: np.ndarray,
        nominal: RationalTf,
        eps: float = DEFAULT_EPS,
        reference=None,
    ) -> DetectionVerdict:
        """
        控制器端殘差偵測

        以名目模型 G_r->y 模擬 y_nom，殘差 e = y - y_nom；
        第一次 |e| > eps·(1 + max|y_nom|) 即判為 DETECTED。
        reference 為可呼叫的參考訊號時，中間點直接取值，否則線性內插。
        """
        t = np.asarray(t, dtype=float)
        y_observed = np.asarray(y_observed, dtype=float)
        r = np.asarray(r, dtype=float)
        if not (t.shape == y_observed.shape == r.shape):
            raise DomainError("series must share the time grid")

        nominal, _ = reduce(nominal)
        cls = classify(nominal)
        if not cls.proper:
            raise DomainError("nominal model must be proper")
        if not cls.stable:
            raise NumericalError("unstable nominal model")

        y_nom = self.simulate_nominal(t, r, nominal, reference)
        residual = np.abs(y_observed - y_nom)
        envelope = eps * (1.0 + np.maximum.accumulate(np.abs(y_nom)))
        crossing = np.flatnonzero(residual > envelope)

        tail = max(1, int(np.ceil(0.1 * t.size)))
        steady = float(np.max(residual[-tail:])) if t.size else 0.0
        peak = float(np.max(residual)) if t.size else 0.0

        if crossing.size:
            detect_time = float(t[crossing[0]])
            logger.info(f"Residual detector fired at t={detect_time:.4f}s (peak residual {peak:.3e})")
            return DetectionVerdict(Verdict.DETECTED, detect_time, peak, steady)
        return DetectionVerdict(Verdict.STEALTHY, None, peak, steady)

    def simulate_nominal(self, t: np.ndarray, r: np.ndarray, nominal: RationalTf, reference=None) -> np.ndarray:
        """以與主模擬相同的 RK4 積分名目模型（零初始條件）"""
        from app.services.simulation_service import rk4_integrate

        ss = realize(nominal)
        if t.size < 2:
            return ss.D * r
        dt = float(t[1] - t[0])
        if reference is not None:
            mid = np.asarray(reference(t[:-1] + dt / 2), dtype=float)
        else:
            mid = 0.5 * (r[:-1] + r[1:])
        if ss.order == 0:
            return ss.D * r
        states, _ = rk4_integrate(ss.A, ss.B, r[:, None], mid[:, None], np.zeros(ss.order), dt)
        return states @ ss.C[0] + ss.D * r


def _gain_scale(g: RationalTf) -> float:
    return max(1.0, max(abs(c) for c in g.num.coeffs) / max(abs(c) for c in g.den.coeffs))


# 單例實例
attack_service = AttackService()
