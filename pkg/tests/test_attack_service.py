import math

import numpy as np
import pytest

from app.errors import DomainError, NumericalError
from app.models.attack import (
    AttackTarget,
    DetectionVerdict,
    InjectionPoint,
    Verdict,
    ZeroDynAttack,
    signal_of,
)
from app.models.coding import catalog
from app.models.polynomial import poly_derivative, poly_eval
from app.models.scenario import InitialState, Scenario, ScheduledAttack
from app.models.transfer_function import realize, reduce, tf_eval
from app.services.attack_service import attack_service
from app.services.loop_service import loop_service
from app.services.simulation_service import rk4_integrate, simulation_service


def run_attack(P, K, M, atk, horizon=10.0, initial_state=InitialState.ATTACK_ALIGNED, eps=1e-3):
    sc = Scenario(
        P=P,
        K=K,
        M=M,
        attacks=(ScheduledAttack(atk),),
        horizon=horizon,
        dt=1e-3,
        detector_eps=eps,
        initial_state=initial_state,
    )
    maps = loop_service.closed_loop_maps(P, K, M)
    log = simulation_service.simulate(sc)
    observed = attack_service.residual_detector(log.t, log.y, log.r, maps.r_to_y, eps)
    return attack_service.classify_attack(maps, atk, eps, observed), observed, log


class TestModel:
    def test_signal(self):
        atk = ZeroDynAttack(InjectionPoint.FORWARD_W, complex(-1, 2), 0.5, phase=0.3)
        t = np.array([0.0, 1.0])
        expected = 0.5 * np.exp(-t) * np.cos(2 * t + 0.3)
        np.testing.assert_allclose(signal_of(atk, t), expected)
        assert signal_of(atk, 0.0) == pytest.approx(0.5 * math.cos(0.3))

    def test_zero_amplitude_rejected(self):
        with pytest.raises(DomainError):
            ZeroDynAttack(InjectionPoint.FORWARD_W, 1.0, 0.0)

    def test_verdict_consistency(self):
        with pytest.raises(DomainError):
            DetectionVerdict(Verdict.DETECTED, None, 1.0, 0.0)
        with pytest.raises(DomainError):
            DetectionVerdict(Verdict.STEALTHY, 1.0, 1.0, 0.0)


class TestSynthAttack:
    def test_forward_picks_plant_zero(self, P1):
        atk = attack_service.synth_attack(P1, InjectionPoint.FORWARD_W, amplitude=0.1)
        assert atk.mode == pytest.approx(1.0)
        assert atk.conjugate is None
        assert atk.target is AttackTarget.ORIGINAL_P

    def test_feedback_orders_poles_by_real_part(self, P1):
        rightmost = attack_service.synth_attack(P1, "feedback_z")
        second = attack_service.synth_attack(P1, "feedback_z", mode_selector=1)
        assert rightmost.mode == pytest.approx(-1.0)
        assert second.mode == pytest.approx(-2.0)

    def test_complex_mode_keeps_conjugate(self, P1, K1, shear):
        view = loop_service.attacker_view(P1, K1, shear)
        atk = attack_service.synth_attack(view.P_bar, InjectionPoint.FORWARD_W, target_kind="attacker_view_P_bar")
        assert atk.mode == pytest.approx(complex(-1, math.sqrt(2)))
        assert atk.conjugate == pytest.approx(complex(-1, -math.sqrt(2)))

    def test_no_finite_zero(self, P2):
        with pytest.raises(DomainError, match="no admissible mode"):
            attack_service.synth_attack(P2, InjectionPoint.FORWARD_W)

    def test_index_out_of_range(self, P1):
        with pytest.raises(DomainError, match="no admissible mode"):
            attack_service.synth_attack(P1, InjectionPoint.FEEDBACK_Z, mode_selector=5)

    def test_validate_rejects_foreign_mode(self, P1):
        atk = ZeroDynAttack(InjectionPoint.FORWARD_W, 2.0, 0.1)
        with pytest.raises(DomainError, match="not a zero"):
            attack_service.validate(atk, P1)


class TestAnalyticClassification:
    def test_identity_blocks_plant_zero(self, P1, K1, identity):
        maps = loop_service.closed_loop_maps(P1, K1, identity)
        atk = attack_service.synth_attack(P1, InjectionPoint.FORWARD_W)
        assert attack_service.is_blocked(maps, atk)
        assert attack_service.classify_attack(maps, atk).verdict is Verdict.STEALTHY

    def test_shearing_exposes_plant_zero(self, P1, K1, shear):
        maps = loop_service.closed_loop_maps(P1, K1, shear)
        atk = attack_service.synth_attack(P1, InjectionPoint.FORWARD_W)
        assert abs(attack_service.blocking_gain(maps, atk)) == pytest.approx(1.0)
        verdict = attack_service.classify_attack(maps, atk)
        assert verdict.verdict is Verdict.DETECTED
        assert verdict.detect_time == 0.0

    def test_detect_time_for_small_amplitude(self, P1, K1, shear):
        maps = loop_service.closed_loop_maps(P1, K1, shear)
        atk = attack_service.synth_attack(P1, InjectionPoint.FORWARD_W, amplitude=1e-5)
        verdict = attack_service.classify_attack(maps, atk, eps=1e-3)
        assert verdict.detect_time == pytest.approx(math.log(100.0))

    def test_detect_time_counts_from_attack_start(self, P1, K1, shear):
        maps = loop_service.closed_loop_maps(P1, K1, shear)
        atk = attack_service.synth_attack(P1, InjectionPoint.FORWARD_W, amplitude=1e-5)
        verdict = attack_service.classify_attack(maps, atk, eps=1e-3, start=2.5)
        assert verdict.detect_time == pytest.approx(2.5 + math.log(100.0))

    def test_decaying_mode_is_corrected(self, P1, K1, shear):
        maps = loop_service.closed_loop_maps(P1, K1, shear)
        view = loop_service.attacker_view(P1, K1, shear)
        atk = attack_service.synth_attack(view.P_bar, InjectionPoint.FORWARD_W, target_kind="attacker_view_P_bar")
        assert attack_service.classify_attack(maps, atk).verdict is Verdict.CORRECTED

    def test_resonant_injection(self, P1, K1, identity):
        maps = loop_service.closed_loop_maps(P1, K1, identity)
        atk = ZeroDynAttack(InjectionPoint.FORWARD_W, -2.0 + math.sqrt(3.0), 0.1)
        with pytest.raises(NumericalError, match="resonant injection"):
            attack_service.blocking_gain(maps, atk)

    def test_feedback_mirror(self, P2, K2, identity, p2_coding):
        atk = attack_service.synth_attack(P2, InjectionPoint.FEEDBACK_Z)
        assert atk.mode == pytest.approx(1.0)
        plain = loop_service.closed_loop_maps(P2, K2, identity)
        coded = loop_service.closed_loop_maps(P2, K2, p2_coding)
        assert attack_service.classify_attack(plain, atk).verdict is Verdict.STEALTHY
        assert attack_service.classify_attack(coded, atk).verdict is Verdict.DETECTED


class TestResidualDetector:
    def test_matching_output_is_quiet(self, P1, K1, identity):
        maps = loop_service.closed_loop_maps(P1, K1, identity)
        t = np.linspace(0.0, 5.0, 501)
        r = np.ones_like(t)
        y_nom = attack_service.simulate_nominal(t, r, maps.r_to_y)
        verdict = attack_service.residual_detector(t, y_nom, r, maps.r_to_y)
        assert verdict.verdict is Verdict.STEALTHY
        assert verdict.peak_residual == 0.0

    def test_offset_is_detected(self, P1, K1, identity):
        maps = loop_service.closed_loop_maps(P1, K1, identity)
        t = np.linspace(0.0, 5.0, 501)
        r = np.zeros_like(t)
        y = np.where(t >= 2.0, 0.01, 0.0)
        verdict = attack_service.residual_detector(t, y, r, maps.r_to_y, eps=1e-3)
        assert verdict.detected
        assert verdict.detect_time == pytest.approx(2.0)
        assert verdict.steady_state_deviation == pytest.approx(0.01)

    def test_unstable_nominal_rejected(self, P2):
        t = np.linspace(0.0, 1.0, 11)
        with pytest.raises(NumericalError, match="unstable nominal model"):
            attack_service.residual_detector(t, t, t, P2)

    def test_shape_mismatch(self, P1):
        with pytest.raises(DomainError):
            attack_service.residual_detector(np.zeros(3), np.zeros(4), np.zeros(3), P1)


class TestSimulatedTrichotomy:
    def test_stealthy_identity(self, P1, K1, identity):
        atk = attack_service.synth_attack(P1, InjectionPoint.FORWARD_W, amplitude=0.1)
        verdict, observed, log = run_attack(P1, K1, identity, atk)
        assert verdict.verdict is Verdict.STEALTHY
        assert not observed.detected
        assert log.plant_state_norm[-1] >= 100.0 * log.plant_state_norm[0]

    def test_detected_with_shearing(self, P1, K1, shear):
        atk = attack_service.synth_attack(P1, InjectionPoint.FORWARD_W, amplitude=0.1)
        verdict, observed, _ = run_attack(P1, K1, shear, atk)
        assert verdict.verdict is Verdict.DETECTED
        assert observed.detected
        assert verdict.detect_time < 2.0

    def test_corrected_with_designed_coding(self, P1, K1, shear):
        # F1 = 0、F2 = -1 的設計結果即 shearing1(c=1)
        view = loop_service.attacker_view(P1, K1, shear)
        target, _ = reduce(view.P_bar)
        atk = attack_service.synth_attack(target, InjectionPoint.FORWARD_W, 0, 0.1, target_kind="attacker_view_P_bar")
        verdict, _, _ = run_attack(P1, K1, shear, atk, horizon=20.0)
        assert verdict.verdict is Verdict.CORRECTED
        assert verdict.steady_state_deviation <= 1e-4

    def test_feedback_mirror(self, P2, K2, identity, p2_coding):
        atk = attack_service.synth_attack(P2, InjectionPoint.FEEDBACK_Z, amplitude=0.1)
        stealthy, observed, _ = run_attack(P2, K2, identity, atk)
        assert stealthy.verdict is Verdict.STEALTHY
        assert not observed.detected

        detected, _, _ = run_attack(P2, K2, p2_coding, atk)
        assert detected.verdict is Verdict.DETECTED
        assert detected.detect_time < 2.0

        view = loop_service.attacker_view(P2, K2, p2_coding)
        retargeted = attack_service.synth_attack(
            view.P_bar, InjectionPoint.FEEDBACK_Z, amplitude=0.1, target_kind=AttackTarget.ATTACKER_VIEW_P_BAR
        )
        assert retargeted.mode == pytest.approx(-1.0)
        corrected, _, _ = run_attack(P2, K2, p2_coding, retargeted, horizon=20.0, initial_state=InitialState.ZERO)
        assert corrected.verdict is Verdict.CORRECTED
        assert corrected.steady_state_deviation <= 1e-4

    def test_zero_initial_state_follows_residual(self, P1, K1, identity):
        # 零初始條件下被阻斷的通道仍有暫態，判定以殘差為準
        atk = attack_service.synth_attack(P1, InjectionPoint.FORWARD_W, amplitude=0.1)
        verdict, observed, _ = run_attack(P1, K1, identity, atk, initial_state=InitialState.ZERO)
        assert observed.detected
        assert verdict.verdict is Verdict.DETECTED
        assert verdict.detect_time == observed.detect_time

    def test_stretching_only_coding_hides_both_attacks(self, P1, K1, P2, K2):
        M = catalog("stretching3", a=2.0, d=0.5)
        forward = attack_service.synth_attack(P1, InjectionPoint.FORWARD_W, amplitude=0.1)
        verdict, observed, _ = run_attack(P1, K1, M, forward)
        assert verdict.verdict is Verdict.STEALTHY
        assert not observed.detected

        feedback = attack_service.synth_attack(P2, InjectionPoint.FEEDBACK_Z, amplitude=0.1)
        verdict, observed, _ = run_attack(P2, K2, M, feedback)
        assert verdict.verdict is Verdict.STEALTHY
        assert not observed.detected


class TestSimulatedVerdictGoverns:
    def test_quiet_residual_overrides_visible_gain(self, P1, K1, shear):
        maps = loop_service.closed_loop_maps(P1, K1, shear)
        atk = attack_service.synth_attack(P1, InjectionPoint.FORWARD_W, amplitude=0.1)
        quiet = DetectionVerdict(Verdict.STEALTHY, None, 0.0, 0.0)
        verdict = attack_service.classify_attack(maps, atk, 1e-3, quiet)
        assert verdict.verdict is Verdict.STEALTHY
        assert verdict.detect_time is None

    def test_fired_residual_overrides_blocked_channel(self, P1, K1, identity, caplog):
        maps = loop_service.closed_loop_maps(P1, K1, identity)
        atk = attack_service.synth_attack(P1, InjectionPoint.FORWARD_W, amplitude=0.1)
        assert attack_service.is_blocked(maps, atk)
        fired = DetectionVerdict(Verdict.DETECTED, 0.011, 0.02, 0.0)
        verdict = attack_service.classify_attack(maps, atk, 1e-3, fired)
        assert verdict.verdict is Verdict.DETECTED
        assert verdict.detect_time == pytest.approx(0.011)
        assert "still tripped the residual" in caplog.text

    def test_decaying_mode_stays_corrected(self, P1, K1, shear):
        maps = loop_service.closed_loop_maps(P1, K1, shear)
        view = loop_service.attacker_view(P1, K1, shear)
        atk = attack_service.synth_attack(view.P_bar, InjectionPoint.FORWARD_W, target_kind="attacker_view_P_bar")
        fired = DetectionVerdict(Verdict.DETECTED, 0.5, 0.01, 1e-6)
        verdict = attack_service.classify_attack(maps, atk, 1e-3, fired)
        assert verdict.verdict is Verdict.CORRECTED
        assert verdict.steady_state_deviation == pytest.approx(1e-6)

    def test_attack_after_horizon_is_not_detected(self, P1, K1, shear):
        atk = attack_service.synth_attack(P1, InjectionPoint.FORWARD_W, amplitude=0.1)
        sc = Scenario(P=P1, K=K1, M=shear, attacks=(ScheduledAttack(atk, start=50.0),), horizon=5.0, dt=1e-3)
        maps = loop_service.closed_loop_maps(P1, K1, shear)
        log = simulation_service.simulate(sc)
        observed = attack_service.residual_detector(log.t, log.y, log.r, maps.r_to_y, sc.detector_eps)
        verdict = attack_service.classify_attack(maps, atk, sc.detector_eps, observed, start=50.0)
        assert not observed.detected
        assert verdict.verdict is Verdict.STEALTHY
        assert verdict.detect_time is None


class TestSignalOracle:
    def test_forced_response_matches_partial_fractions(self, P1, K1, shear):
        maps = loop_service.closed_loop_maps(P1, K1, shear)
        channel, _ = reduce(maps.w_to_y)
        atk = attack_service.synth_attack(P1, InjectionPoint.FORWARD_W, amplitude=0.1)
        horizon, dt = 5.0, 1e-3
        t = np.arange(int(round(horizon / dt)) + 1) * dt
        w_grid = signal_of(atk, t)
        w_mid = signal_of(atk, t[:-1] + dt / 2)

        ss = realize(channel)
        states, diverged = rk4_integrate(ss.A, ss.B, w_grid[:, None], w_mid[:, None], np.zeros(ss.order), dt)
        assert diverged is None
        y_end = states[-1] @ ss.C[0] + ss.D * w_grid[-1]

        # Y(s) = G(s)·w0/(s - s0)：強迫項加上每個通道極點的留數
        s0 = atk.mode
        expected = tf_eval(channel, s0) * atk.amplitude * np.exp(s0 * horizon)
        d_den = poly_derivative(channel.den)
        for p in channel.poles():
            residue = poly_eval(channel.num, p) / (poly_eval(d_den, p) * (p - s0))
            expected += residue * atk.amplitude * np.exp(p * horizon)
        assert y_end == pytest.approx(expected.real, rel=1e-4)
