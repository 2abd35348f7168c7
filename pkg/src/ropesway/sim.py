"""Closed-loop simulation of the reduced rope model.

Each control sample runs measure -> reconstruct -> control -> actuate, then
the plant is advanced with fixed-step RK4 while the applied damping is held
constant. The "ideal chain" bypasses noise, state reconstruction and the
actuator filter/delay, feeding the exact modal state to the controller.
"""

from __future__ import annotations

import io
import math
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable

import numpy as np

from .basis import ModalBasis, SineBasis
from .control import (ControllerConfig, command, invariant_set_membership, lyapunov_V,
                      lyapunov_Vdot_bound)
from .errors import ConfigurationError, IntegrationError, PlacementError
from .model import (STATIC, DisturbanceProfile, Forcing, ModalState, RopeParams, SystemMatrices,
                    assemble_matrices, boundary_sway)

ForcingFn = Callable[[float], "tuple[np.ndarray, np.ndarray]"]

MAX_CONDITION = 1e6
SCENARIOS = ("impulse", "sustained", "zero", "custom")


@dataclass(frozen=True)
class ActuatorModel:
    """First-order low-pass (cutoff in Hz) after a pure delay in control samples."""

    cutoff_hz: float = 10.0
    delay_steps: int = 5

    def __post_init__(self):
        if not (self.cutoff_hz > 0 and math.isfinite(self.cutoff_hz)):
            raise ConfigurationError("must be > 0", key="actuator.cutoff_hz")
        if self.delay_steps < 0:
            raise ConfigurationError("must be >= 0", key="actuator.delay_steps")


@dataclass(frozen=True)
class SensorModel:
    """Sway sensors at fixed heights with bounded measurement noise.

    ``distribution='uniform'`` draws from [-a, a]; ``'gaussian'`` uses a
    standard deviation of a/3.
    """

    noise_amplitude: float = 0.01
    positions: tuple[float, ...] = (195.0,)
    seed: int = 0
    distribution: str = "uniform"

    def __post_init__(self):
        if not self.noise_amplitude >= 0:
            raise ConfigurationError("must be >= 0", key="sensor.noise_amplitude")
        if self.distribution not in ("uniform", "gaussian"):
            raise ConfigurationError("must be 'uniform' or 'gaussian'", key="sensor.distribution")
        object.__setattr__(self, "positions", tuple(float(y) for y in self.positions))

    def validate(self, params: RopeParams, n_modes: int) -> None:
        if len(self.positions) < n_modes:
            raise ConfigurationError(
                f"{len(self.positions)} sensor(s) cannot resolve {n_modes} modes",
                key="sensor.positions")
        if any(not 0.0 < y < params.l for y in self.positions):
            raise ConfigurationError(f"positions must lie strictly inside (0, {params.l})",
                                     key="sensor.positions")

    def noise(self, rng: np.random.Generator, size: int) -> np.ndarray:
        a = self.noise_amplitude
        if self.distribution == "uniform":
            return rng.uniform(-a, a, size)
        return rng.normal(0.0, a / 3.0, size)


@dataclass(frozen=True)
class Scenario:
    """Initial modal state, boundary disturbance and run length."""

    name: str = "custom"
    q0: tuple[float, ...] = ()
    qd0: tuple[float, ...] = ()
    disturbance: DisturbanceProfile = field(default_factory=DisturbanceProfile)
    zero_damping: bool = False
    duration: float = 200.0

    def __post_init__(self):
        if self.name not in SCENARIOS:
            raise ConfigurationError(f"unknown scenario {self.name!r}", key="scenario.name")
        if not self.duration > 0:
            raise ConfigurationError("must be > 0", key="scenario.duration")
        object.__setattr__(self, "q0", tuple(float(v) for v in self.q0))
        object.__setattr__(self, "qd0", tuple(float(v) for v in self.qd0))

    def initial_state(self, n: int) -> ModalState:
        """Initial coordinates padded with zeros to ``n`` modes."""
        for key, vals in (("scenario.q0", self.q0), ("scenario.qd0", self.qd0)):
            if len(vals) > n:
                raise ConfigurationError(f"{len(vals)} values given for {n} modes", key=key)
        q = np.zeros(n)
        qd = np.zeros(n)
        q[:len(self.q0)] = self.q0
        qd[:len(self.qd0)] = self.qd0
        return ModalState(q, qd, 0.0)


def impulse_scenario() -> Scenario:
    """Free decay from q(0)=20, q'(0)=5 with the rope's own damping removed."""
    return Scenario("impulse", q0=(20.0,), qd0=(5.0,), zero_damping=True, duration=200.0)


def sustained_scenario() -> Scenario:
    """Top-end excitation 0.2 sin(2 pi 0.08 t) from rest."""
    return Scenario("sustained", disturbance=DisturbanceProfile.sinusoid(0.2, 0.08),
                    duration=600.0)


@dataclass(frozen=True)
class SimConfig:
    rope: RopeParams = field(default_factory=RopeParams)
    controller: ControllerConfig = field(default_factory=ControllerConfig)
    actuator: ActuatorModel = field(default_factory=ActuatorModel)
    sensor: SensorModel = field(default_factory=SensorModel)
    scenario: Scenario = field(default_factory=impulse_scenario)
    modes: int = 2
    dt: float = 1e-3
    control_period: float = 0.01
    probe_y: float = 195.0
    ideal_chain: bool = False
    record_every: int = 1
    steady_start: float | None = None
    basis_scale: float = 1.0

    @property
    def steps_per_control(self) -> int:
        return int(round(self.control_period / self.dt))

    @property
    def steady_window_start(self) -> float:
        if self.steady_start is not None:
            return self.steady_start
        return 2.0 * self.scenario.duration / 3.0

    def validate(self) -> None:
        if self.modes < 1:
            raise ConfigurationError("must be >= 1", key="sim.modes")
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ConfigurationError("must be > 0", key="sim.dt")
        if not self.control_period >= self.dt:
            raise ConfigurationError("control period shorter than dt", key="sim.control_period")
        k = self.control_period / self.dt
        if abs(k - round(k)) > 1e-9 * k:
            raise ConfigurationError("must be an integer multiple of sim.dt",
                                     key="sim.control_period")
        if self.record_every < 1:
            raise ConfigurationError("must be >= 1", key="sim.record_every")
        if not 0.0 <= self.probe_y <= self.rope.l:
            raise ConfigurationError(f"must lie in [0, {self.rope.l}]", key="sim.probe_y")
        if self.controller.modes > self.modes:
            raise ConfigurationError(
                f"controller uses {self.controller.modes} modes but the plant has {self.modes}",
                key="controller.modes")
        if not self.ideal_chain and self.controller.mode in ("thm1", "thm2"):
            self.sensor.validate(self.rope, self.controller.modes)
        self.scenario.initial_state(self.modes)

    def plant_params(self) -> RopeParams:
        return replace(self.rope, c_p=0.0) if self.scenario.zero_damping else self.rope

    def plant_basis(self) -> SineBasis:
        return SineBasis(self.modes, self.basis_scale)


# ---------------------------------------------------------------- integration

def rk4_step(f: Callable[[float, np.ndarray], np.ndarray], t: float, z: np.ndarray,
             h: float) -> np.ndarray:
    k1 = f(t, z)
    k2 = f(t + 0.5 * h, z + 0.5 * h * k1)
    k3 = f(t + 0.5 * h, z + 0.5 * h * k2)
    k4 = f(t + h, z + h * k3)
    return z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _make_rhs(mats: SystemMatrices, U: float, forcing: ForcingFn | None):
    """First-order form ``z' = A z + b(t)`` with ``z = (q, q')``."""
    n = mats.n
    Minv = np.linalg.inv(mats.M)
    A = np.zeros((2 * n, 2 * n))
    A[:n, n:] = np.eye(n)
    A[n:, :n] = -Minv @ (mats.K + mats.K_tilde * U)
    A[n:, n:] = -Minv @ (mats.C + mats.C_tilde * U)
    if forcing is None:
        return lambda t, z: A @ z
    b = np.zeros(2 * n)

    def rhs(t, z):
        F, Ft = forcing(t)
        b[n:] = Minv @ (F + Ft * U)
        return A @ z + b

    return rhs


def integrate_interval(mats: SystemMatrices, U: float, forcing: Forcing | None,
                       z: np.ndarray, t0: float, h: float, n_sub: int) -> np.ndarray:
    """``n_sub`` RK4 steps from ``t0`` with constant ``U``.

    The forcing is evaluated once, vectorized, at every half step of the
    interval instead of four times per step.
    """
    n = mats.n
    Minv = np.linalg.inv(mats.M)
    A = np.zeros((2 * n, 2 * n))
    A[:n, n:] = np.eye(n)
    A[n:, :n] = -Minv @ (mats.K + mats.K_tilde * U)
    A[n:, n:] = -Minv @ (mats.C + mats.C_tilde * U)
    half = 0.5 * h
    if forcing is None or forcing.dist.is_zero:
        for _ in range(n_sub):
            k1 = A @ z
            k2 = A @ (z + half * k1)
            k3 = A @ (z + half * k2)
            k4 = A @ (z + h * k3)
            z = z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        return z
    F, Ft = forcing.many(t0 + half * np.arange(2 * n_sub + 1))
    b = np.zeros((2 * n, 2 * n_sub + 1))
    b[n:] = Minv @ (F + Ft * U)
    b = b.T.copy()
    for i in range(n_sub):
        b0, bm, b1 = b[2 * i], b[2 * i + 1], b[2 * i + 2]
        k1 = A @ z + b0
        k2 = A @ (z + half * k1) + bm
        k3 = A @ (z + half * k2) + bm
        k4 = A @ (z + h * k3) + b1
        z = z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return z


def step(state: ModalState, mats: SystemMatrices, U_applied: float,
         forcing: ForcingFn | None, dt: float, index: int | None = None) -> ModalState:
    """One RK4 step of the reduced model with the damping held at ``U_applied``."""
    if not dt > 0:
        raise ConfigurationError("must be > 0", key="sim.dt")
    rhs = _make_rhs(mats, U_applied, forcing)
    with np.errstate(over="ignore", invalid="ignore"):
        z = rk4_step(rhs, state.t, state.z, dt)
    if not np.all(np.isfinite(z)):
        raise IntegrationError("non-finite modal state", step_index=index)
    return ModalState.from_z(z, state.t + dt)


# ------------------------------------------------------------ sensing & acting

def collocation_matrix(positions: Iterable[float], basis: ModalBasis,
                       params: RopeParams) -> np.ndarray:
    """``Phi[i, j] = psi_j(y_i / l) / sqrt(l)``."""
    y = np.asarray(list(positions), dtype=float)
    return (basis.psi(y / params.l) / math.sqrt(params.l)).T.reshape(y.size, basis.n)


def measure(state: ModalState, sensors: SensorModel, params: RopeParams, basis: ModalBasis,
            dist: DisturbanceProfile, rng: np.random.Generator,
            t: float | None = None) -> np.ndarray:
    """Noisy sway readings at the sensor stations."""
    t = state.t if t is None else t
    y = np.asarray(sensors.positions)
    clean = collocation_matrix(y, basis, params) @ state.q + boundary_sway(y, t, params, dist)
    if sensors.noise_amplitude == 0.0:
        return clean
    return clean + sensors.noise(rng, y.size)


class StateReconstructor:
    """Least-squares inversion of the sway samples plus a backward difference.

    The first estimate has zero velocity since no earlier sample exists.
    """

    def __init__(self, sensors: SensorModel, basis: ModalBasis, params: RopeParams,
                 dist: DisturbanceProfile):
        self.sensors, self.basis, self.params, self.dist = sensors, basis, params, dist
        self.phi = collocation_matrix(sensors.positions, basis, params)
        cond = np.linalg.cond(self.phi) if self.phi.shape[0] >= basis.n else np.inf
        if not cond <= MAX_CONDITION:
            raise PlacementError(
                f"sensor collocation matrix is ill-conditioned (cond={cond:.3g}); "
                "move sensors off the mode nodes")
        self.pinv = np.linalg.pinv(self.phi)
        self.condition_number = float(cond)

    def __call__(self, samples: np.ndarray, t: float,
                 previous: ModalState | None = None) -> ModalState:
        w = np.asarray(samples, dtype=float) - boundary_sway(
            np.asarray(self.sensors.positions), t, self.params, self.dist)
        q = self.pinv @ w
        if previous is None or t <= previous.t:
            qd = np.zeros_like(q)
        else:
            qd = (q - previous.q) / (t - previous.t)
        return ModalState(q, qd, t)


def reconstruct_state(samples: np.ndarray, basis: ModalBasis, params: RopeParams,
                      sensors: SensorModel, t: float, previous: ModalState | None = None,
                      dist: DisturbanceProfile = DisturbanceProfile()) -> ModalState:
    return StateReconstructor(sensors, basis, params, dist)(samples, t, previous)


class Actuator:
    """Delay line, discrete first-order low-pass and clamp to ``[0, u_max]``."""

    def __init__(self, model: ActuatorModel, dt: float, u_max: float):
        self.model = model
        self.u_max = u_max
        self.alpha = math.exp(-2.0 * math.pi * model.cutoff_hz * dt)
        self._line = deque([0.0] * model.delay_steps)
        self._y = 0.0

    def push(self, u_cmd: float) -> float:
        self._line.append(u_cmd)
        delayed = self._line.popleft()
        self._y = self.alpha * self._y + (1.0 - self.alpha) * delayed
        return min(max(self._y, 0.0), self.u_max)


def actuate(commands: Iterable[float], act: ActuatorModel, dt: float,
            u_max: float = math.inf) -> np.ndarray:
    """Applied damping for a whole command history sampled every ``dt``."""
    a = Actuator(act, dt, u_max)
    return np.array([a.push(u) for u in commands], dtype=float)


# --------------------------------------------------------------------- results

@dataclass
class SimResult:
    t: np.ndarray
    q: np.ndarray
    q_dot: np.ndarray
    sway: np.ndarray
    U_cmd: np.ndarray
    U_app: np.ndarray
    V: np.ndarray
    Vdot_bound: np.ndarray
    in_S1: np.ndarray
    in_S2: np.ndarray
    probe_y: float
    config: SimConfig
    metadata: dict = field(default_factory=dict)

    @property
    def n_modes(self) -> int:
        return self.q.shape[1]

    def columns(self) -> list[str]:
        n = self.n_modes
        return (["t"] + [f"q{i + 1}" for i in range(n)] + [f"qd{i + 1}" for i in range(n)]
                + [f"sway_y{self.probe_y:g}", "U_cmd", "U_app", "V", "in_S1", "in_S2"])

    def table(self) -> np.ndarray:
        return np.column_stack([self.t, self.q, self.q_dot, self.sway, self.U_cmd, self.U_app,
                                self.V, self.in_S1.astype(float), self.in_S2.astype(float)])

    def to_csv(self, fh: io.TextIOBase | None = None) -> str | None:
        """CSV with one header row and 17 significant digits; flags written as 0/1."""
        out = fh if fh is not None else io.StringIO()
        out.write(",".join(self.columns()) + "\n")
        n_float = 2 * self.n_modes + 5
        fmt = ",".join(["%.17g"] * n_float + ["%d", "%d"]) + "\n"
        for row in self.table():
            out.write(fmt % (*row[:n_float], row[n_float], row[n_float + 1]))
        return out.getvalue() if fh is None else None

    def steady_mask(self) -> np.ndarray:
        return self.t >= self.config.steady_window_start - 1e-9

    def summary(self) -> dict[str, float]:
        steady = self.steady_mask()
        V0 = self.V[0]
        return {
            "peak_sway": float(np.max(np.abs(self.sway))),
            "steady_max": float(np.max(np.abs(self.sway[steady]))) if steady.any() else math.nan,
            "peak_U_cmd": float(np.max(self.U_cmd)),
            "peak_U": float(np.max(self.U_app)),
            "V_decay_ratio": float(self.V[-1] / V0) if V0 > 0 else math.nan,
        }


# ------------------------------------------------------------------- scenarios

def run_scenario(config: SimConfig) -> SimResult:
    """Simulate one configured run and record it at every control sample."""
    config.validate()
    params = config.plant_params()
    cfg = config.controller
    basis = config.plant_basis()
    mats = assemble_matrices(params, STATIC, basis)
    dist = config.scenario.disturbance
    forcing = None if dist.is_zero else Forcing(params, STATIC, mats, dist)
    zero_forcing = (np.zeros(mats.n), np.zeros(mats.n))
    ctrl_mats = mats.truncated(cfg.modes)
    nc = cfg.modes

    ideal = config.ideal_chain
    rng = np.random.default_rng(config.sensor.seed)
    active = cfg.mode in ("thm1", "thm2")
    estimator = None
    if active and not ideal:
        estimator = StateReconstructor(config.sensor, SineBasis(nc, config.basis_scale), params,
                                       dist)
    actuator = None if ideal else Actuator(config.actuator, config.control_period, cfg.u_max)

    n_sub = config.steps_per_control
    h = config.dt
    Tc = config.control_period
    n_ctrl = int(round(config.scenario.duration / Tc))
    n_rec = n_ctrl // config.record_every + 1
    n = mats.n
    rec = {k: np.zeros(n_rec) for k in ("t", "sway", "U_cmd", "U_app", "V", "Vdot_bound")}
    rec_q = np.zeros((n_rec, n))
    rec_qd = np.zeros((n_rec, n))
    rec_s1 = np.zeros(n_rec, dtype=bool)
    rec_s2 = np.zeros(n_rec, dtype=bool)
    probe_phi = collocation_matrix([config.probe_y], basis, params)[0]

    z = config.scenario.initial_state(n).z
    previous = None
    r = 0
    for k in range(n_ctrl + 1):
        t = k * Tc
        state = ModalState.from_z(z, t)
        if active:
            if ideal:
                est = ModalState(state.q[:nc], state.q_dot[:nc], t)
            else:
                samples = measure(state, config.sensor, params, basis, dist, rng, t)
                est = estimator(samples, t, previous)
                previous = est
            U_cmd, _ = command(est, ctrl_mats, cfg)
        else:
            U_cmd, _ = command(state, mats, cfg) if cfg.mode == "passive" else (0.0, None)
        if actuator is None:
            U_app = min(max(U_cmd, 0.0), cfg.u_max)
        else:
            U_app = actuator.push(U_cmd)

        if k % config.record_every == 0:
            rec["t"][r] = t
            rec_q[r], rec_qd[r] = state.q, state.q_dot
            rec["sway"][r] = probe_phi @ state.q + float(boundary_sway(config.probe_y, t,
                                                                       params, dist))
            rec["U_cmd"][r], rec["U_app"][r] = U_cmd, U_app
            rec["V"][r] = lyapunov_V(state, mats)
            if cfg.mode in ("thm1", "thm2"):
                fv = forcing(t) if forcing is not None else zero_forcing
                rec["Vdot_bound"][r] = lyapunov_Vdot_bound(state, mats, U_app, fv, cfg)[1]
            else:
                rec["Vdot_bound"][r] = math.nan
            rec_s1[r], rec_s2[r] = invariant_set_membership(state, mats, cfg)
            r += 1
        if k == n_ctrl:
            break

        with np.errstate(over="ignore", invalid="ignore"):
            z = integrate_interval(mats, U_app, forcing, z, t, h, n_sub)
        if not np.all(np.isfinite(z)):
            raise IntegrationError(f"non-finite modal state in scenario {config.scenario.name!r}"
                                   f" at t={t + Tc:.6g} s", step_index=(k + 1) * n_sub)

    return SimResult(rec["t"][:r], rec_q[:r], rec_qd[:r], rec["sway"][:r], rec["U_cmd"][:r],
                     rec["U_app"][:r], rec["V"][:r], rec["Vdot_bound"][:r], rec_s1[:r],
                     rec_s2[:r], config.probe_y, config,
                     metadata={"seed": config.sensor.seed, "scenario": config.scenario.name})
