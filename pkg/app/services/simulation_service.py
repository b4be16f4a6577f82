"""時域模擬服務 - 控制器、編碼、注入點、反編碼與受控體的完整互連"""
import logging
from dataclasses import dataclass

import numpy as np

from app.errors import DomainError, NumericalError
from app.models.attack import InjectionPoint
from app.models.coding import TwoWayCoding, inverse
from app.models.scenario import (
    InitialState,
    ExcitationSignal,
    ReferenceKind,
    ReferenceSpec,
    Scenario,
    SignalLog,
)
from app.models.transfer_function import RationalTf, StateSpace, realize, tf_eval
from app.services.loop_service import OUTPUTS, ClosedLoopMaps

logger = logging.getLogger(__name__)

WELL_POSED_TOL = 1e-9
CROSSVALIDATE_TOL = 0.01

# 靜態未知量的排列順序
U, Y, Q, QBAR, V, VBAR, UBAR = range(7)


@dataclass(frozen=True, eq=False)
class Interconnection:
    """
    互連的靜態方程式已預先求解：signals = G_x·x + G_e·[r, w, z]

    狀態 x = [x_K, x_P]，A_cl、B_cl 為代入靜態解後的閉迴路狀態方程式。
    """

    plant: StateSpace
    controller: StateSpace
    coding: TwoWayCoding
    G_x: np.ndarray
    G_e: np.ndarray
    A_cl: np.ndarray
    B_cl: np.ndarray

    @property
    def n_K(self) -> int:
        return self.controller.order

    @property
    def n_P(self) -> int:
        return self.plant.order

    def signals(self, x: np.ndarray, e: np.ndarray) -> np.ndarray:
        """給定狀態與外部輸入，回傳 (u, y, q, qbar, v, vbar, ubar)"""
        return self.G_x @ x + self.G_e @ e

    def derivative(self, x: np.ndarray, e: np.ndarray) -> np.ndarray:
        return self.A_cl @ x + self.B_cl @ e


def rk4_integrate(A: np.ndarray, B: np.ndarray, e_grid: np.ndarray, e_mid: np.ndarray, x0: np.ndarray, dt: float):
    """
    固定步長 RK4：x' = A x + B e(t)

    e_grid 為格點上的輸入 (N+1, m)，e_mid 為半步點的輸入 (N, m)。
    回傳 (states, diverged_index)；出現非有限值時停在最後一個有限樣本。
    """
    steps = e_mid.shape[0]
    states = np.empty((steps + 1, x0.size))
    states[0] = x0
    if x0.size == 0:
        return states, None

    Be_grid = e_grid @ B.T
    Be_mid = e_mid @ B.T
    x = x0.astype(float)
    half = dt / 2.0
    sixth = dt / 6.0
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(steps):
            k1 = A @ x + Be_grid[k]
            k2 = A @ (x + half * k1) + Be_mid[k]
            k3 = A @ (x + half * k2) + Be_mid[k]
            k4 = A @ (x + dt * k3) + Be_grid[k + 1]
            x = x + sixth * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if not np.all(np.isfinite(x)):
                return states[: k + 1], k + 1
            states[k + 1] = x
    return states, None


@dataclass(frozen=True)
class ChannelCheck:
    source: str
    output: str
    measured: complex
    predicted: complex
    relative_error: float
    amplitude_error: float
    phase_error: float


@dataclass(frozen=True)
class CrossValidationReport:
    omega: float
    checks: tuple[ChannelCheck, ...]
    max_relative_error: float
    passed: bool


class SimulationService:
    """組裝互連並以 RK4 模擬"""

    def assemble(self, P: RationalTf, K: RationalTf, M: TwoWayCoding) -> Interconnection:
        """實現 P 與 K，並預先求解每個瞬間的靜態訊號方程式"""
        if not P.is_strictly_proper:
            raise DomainError("algebraic loop through plant unsupported: P must be strictly proper")
        plant = realize(P)
        controller = realize(K)

        if abs(1.0 + M.c * controller.D) <= WELL_POSED_TOL:
            raise NumericalError(f"ill-posed interconnection: 1 + c*D_K = {1.0 + M.c * controller.D:.3g}")

        inv = inverse(M)
        n_K, n_P = controller.order, plant.order
        n = n_K + n_P

        S = np.zeros((7, 7))
        R_x = np.zeros((7, n))
        R_e = np.zeros((7, 3))

        # u = C_K x_K + D_K (r - y)
        S[0, U], S[0, Y] = 1.0, controller.D
        R_x[0, :n_K] = controller.C[0]
        R_e[0, 0] = controller.D
        # q = a u + b v
        S[1, Q], S[1, U], S[1, V] = 1.0, -M.a, -M.b
        # qbar = q + w
        S[2, QBAR], S[2, Q] = 1.0, -1.0
        R_e[2, 1] = 1.0
        # ubar = abar qbar + bbar ybar
        S[3, UBAR], S[3, QBAR] = 1.0, -inv.a
        R_x[3, n_K:] = inv.b * plant.C[0]
        # vbar = cbar qbar + dbar ybar
        S[4, VBAR], S[4, QBAR] = 1.0, -inv.c
        R_x[4, n_K:] = inv.d * plant.C[0]
        # v = vbar + z
        S[5, V], S[5, VBAR] = 1.0, -1.0
        R_e[5, 2] = 1.0
        # y = c u + d v
        S[6, Y], S[6, U], S[6, V] = 1.0, -M.c, -M.d

        if abs(np.linalg.det(S)) <= WELL_POSED_TOL or not np.isfinite(np.linalg.cond(S)):
            raise NumericalError("ill-posed interconnection: singular static equations")
        S_inv = np.linalg.inv(S)
        G_x = S_inv @ R_x
        G_e = S_inv @ R_e

        A_cl = np.zeros((n, n))
        B_cl = np.zeros((n, 3))
        A_cl[:n_K, :n_K] = controller.A
        A_cl[n_K:, n_K:] = plant.A
        # 控制器輸入 r - y，受控體輸入 ubar
        e_r = np.array([1.0, 0.0, 0.0])
        A_cl[:n_K] += controller.B @ (-G_x[Y])[None, :]
        B_cl[:n_K] += controller.B @ (e_r - G_e[Y])[None, :]
        A_cl[n_K:] += plant.B @ G_x[UBAR][None, :]
        B_cl[n_K:] += plant.B @ G_e[UBAR][None, :]

        logger.debug(f"Assembled interconnection n_K={n_K} n_P={n_P} with {M}")
        return Interconnection(plant, controller, M, G_x, G_e, A_cl, B_cl)

    def initial_state(self, sc: Scenario, ic: Interconnection) -> np.ndarray:
        """
        零初始條件，或讓狀態落在攻擊的指數軌跡上

        attack_aligned：x0 = Re[(s0 I - A_cl)^-1 B_ch · amp·e^(jφ)]，
        只計入 t = 0 開始的攻擊。
        """
        n = ic.n_K + ic.n_P
        x0 = np.zeros(n)
        if sc.initial_state is InitialState.ATTACK_ALIGNED:
            for item in sc.attacks:
                if item.start != 0.0:
                    continue
                atk = item.attack
                column = 1 if atk.point is InjectionPoint.FORWARD_W else 2
                lhs = atk.mode * np.eye(n) - ic.A_cl
                if n and abs(np.linalg.det(lhs)) <= WELL_POSED_TOL * max(1.0, np.abs(lhs).max()) ** n:
                    raise NumericalError(f"resonant injection: s0={atk.mode} is a closed-loop pole")
                rhs = ic.B_cl[:, column] * (atk.amplitude * np.exp(1j * atk.phase))
                x0 += np.linalg.solve(lhs, rhs).real if n else 0.0
        if sc.plant_x0 is not None:
            if len(sc.plant_x0) != ic.n_P:
                raise DomainError(f"plant_x0 must have {ic.n_P} entries, got {len(sc.plant_x0)}")
            x0[ic.n_K:] += np.asarray(sc.plant_x0, dtype=float)
        return x0

    def simulate(self, sc: Scenario) -> SignalLog:
        """RK4 模擬並記錄全部訊號；發散時回傳截至發散前的紀錄"""
        ic = self.assemble(sc.P, sc.K, sc.M)
        steps = sc.steps
        t = np.arange(steps + 1) * sc.dt
        e_grid = sc.exogenous(t)
        e_mid = sc.exogenous(t[:-1] + sc.dt / 2.0)
        x0 = self.initial_state(sc, ic)

        states, diverged_index = rk4_integrate(ic.A_cl, ic.B_cl, e_grid, e_mid, x0, sc.dt)
        diverged_at = None
        if diverged_index is not None:
            diverged_at = float(t[diverged_index])
            logger.warning(f"divergence at t={diverged_at:.6g}")
            t = t[: states.shape[0]]
            e_grid = e_grid[: states.shape[0]]

        with np.errstate(over="ignore", invalid="ignore"):
            sig = states @ ic.G_x.T + e_grid @ ic.G_e.T
            x_P = states[:, ic.n_K:]
            ybar = x_P @ ic.plant.C[0]
            r, w, z = e_grid[:, 0], e_grid[:, 1], e_grid[:, 2]
            q, vbar = sig[:, Q], sig[:, VBAR]
            return SignalLog(
                t=t,
                r=r,
                u=sig[:, U],
                q=q,
                qbar=q + w,
                ubar=sig[:, UBAR],
                ybar=ybar,
                vbar=vbar,
                v=vbar + z,
                y=sig[:, Y],
                w=w,
                z=z,
                plant_state_norm=_row_norm(x_P),
                diverged_at=diverged_at,
            )

    def round_trip_error(self, log: SignalLog) -> dict[str, float]:
        """無攻擊時 y 應等於 ybar、u 應等於 ubar"""
        return {
            "max_abs_y_minus_ybar": float(np.max(np.abs(log.y - log.ybar))),
            "max_abs_u_minus_ubar": float(np.max(np.abs(log.u - log.ubar))),
        }

    def crossvalidate(self, sc: Scenario, maps: ClosedLoopMaps, tolerance: float = CROSSVALIDATE_TOL) -> CrossValidationReport:
        """
        以正弦激勵比對時域穩態振幅/相位與頻率響應

        r 通道使用情境本身的正弦參考；w、z 通道以同頻率的探測注入激勵。
        """
        if not maps.nominal_stable:
            raise NumericalError("crossvalidate requires a stable nominal loop")
        if sc.reference.kind is not ReferenceKind.SINE:
            raise DomainError("crossvalidate requires a sine reference")

        omega = sc.reference.omega
        amplitude = sc.reference.amplitude
        base = sc.with_changes(attacks=(), excitations=(), initial_state=InitialState.ZERO, plant_x0=None)
        runs = {
            "r": base,
            "w": base.with_changes(reference=ReferenceSpec(), excitations=(ExcitationSignal(InjectionPoint.FORWARD_W, omega, amplitude),)),
            "z": base.with_changes(reference=ReferenceSpec(), excitations=(ExcitationSignal(InjectionPoint.FEEDBACK_Z, omega, amplitude),)),
        }

        checks = []
        for source, scenario in runs.items():
            log = self.simulate(scenario)
            if log.diverged:
                raise NumericalError(f"divergence at t={log.diverged_at} during crossvalidate")
            window = _steady_window(log.t, omega)
            tw = log.t[window]
            phasor_in = _fit_phasor(tw, log.channel(source)[window], omega)
            for output in OUTPUTS:
                measured = _fit_phasor(tw, log.channel(output)[window], omega) / phasor_in
                predicted = tf_eval(maps.channel(source, output), complex(0.0, omega))
                denom = max(abs(predicted), 1e-12)
                checks.append(ChannelCheck(
                    source=source,
                    output=output,
                    measured=measured,
                    predicted=predicted,
                    relative_error=abs(measured - predicted) / denom,
                    amplitude_error=abs(abs(measured) - abs(predicted)) / denom,
                    phase_error=float(abs(np.angle(measured / predicted))) if abs(predicted) > 1e-12 else 0.0,
                ))

        worst = max(c.relative_error for c in checks)
        passed = worst < tolerance
        logger.info(f"Crossvalidate at omega={omega}: max relative error {worst:.3e} ({'PASS' if passed else 'FAIL'})")
        return CrossValidationReport(omega=omega, checks=tuple(checks), max_relative_error=worst, passed=passed)


def _row_norm(x: np.ndarray) -> np.ndarray:
    # 先除以列最大值，接近溢位的狀態仍有有限範數
    scale = np.max(np.abs(x), axis=1, initial=0.0)
    safe = np.where(scale > 0, scale, 1.0)
    return scale * np.sqrt(np.sum((x / safe[:, None]) ** 2, axis=1))


def _steady_window(t: np.ndarray, omega: float) -> np.ndarray:
    # 取後半段中完整週期的部分
    horizon = t[-1]
    period = 2.0 * np.pi / omega
    periods = int(np.floor((horizon / 2.0) / period))
    if periods < 1:
        raise DomainError(f"horizon {horizon} too short for omega={omega}: need at least {2 * period:.3g}s")
    return t >= horizon - periods * period


def _fit_phasor(t: np.ndarray, y: np.ndarray, omega: float) -> complex:
    """最小平方擬合 y ≈ Re(X e^(jωt))，回傳 X"""
    basis = np.column_stack([np.cos(omega * t), np.sin(omega * t)])
    (alpha, beta), *_ = np.linalg.lstsq(basis, y, rcond=None)
    return complex(alpha, -beta)


# 單例實例
simulation_service = SimulationService()
