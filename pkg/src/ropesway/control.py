"""Lyapunov-based damping laws for the semi-active damper.

All laws act on ``x = q'^T C~ q'``, the rate at which the damper can remove
energy, and shape it with the saturation ``s(x) = x / sqrt(1 + x^2)``.
Because ``C~`` is positive semidefinite, ``x >= 0`` and every law commands a
nonnegative damping coefficient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .model import ModalState, SystemMatrices

MODES = ("none", "passive", "thm1", "thm2")


@dataclass(frozen=True)
class ControllerConfig:
    """Controller selection and bounds.

    ``thm1`` saturates at ``u_max``. ``thm2`` splits its budget into a
    nominal part ``u_max_p`` and two disturbance-rejection terms capped at
    ``v1_max`` and ``v2_max``, sized against the disturbance bounds
    ``F_max`` and ``F_tilde_max``. ``modes`` is the number of modal
    coordinates the controller is designed on.
    """

    mode: str = "none"
    k_const: float = 0.0
    u_max: float = 1e9
    u_max_p: float = 0.0
    v1_max: float = 0.0
    v2_max: float = 0.0
    F_max: float = 0.0
    F_tilde_max: float = 0.0
    modes: int = 1

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ConfigurationError(f"unknown mode {self.mode!r}; expected one of {MODES}",
                                     key="controller.mode")
        for name in ("k_const", "u_max", "u_max_p", "v1_max", "v2_max", "F_max", "F_tilde_max"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ConfigurationError("must be finite and >= 0", key=f"controller.{name}")
        if self.modes < 1:
            raise ConfigurationError("must be >= 1", key="controller.modes")
        if self.mode == "passive" and self.k_const > self.u_max:
            raise ConfigurationError("passive damping exceeds u_max", key="controller.k_const")
        if self.mode == "thm2" and self.u_max_p + self.v1_max + self.v2_max > self.u_max:
            raise ConfigurationError(
                "bounded-disturbance controller requires u_max_p + v1_max + v2_max <= u_max "
                f"(got {self.u_max_p + self.v1_max + self.v2_max:g} > {self.u_max:g})",
                key="controller.u_max")


@dataclass(frozen=True)
class ControlDiagnostics:
    x: float
    u_nom: float
    v1: float
    v2: float
    T1: float
    T2: float
    B1: float
    B2: float
    in_S1: bool
    in_S2: bool

    @property
    def U(self) -> float:
        return self.u_nom + self.v1 + self.v2


def saturation(x: float) -> float:
    return x / math.hypot(1.0, x)


def damper_power_rate(q_dot: np.ndarray, C_tilde: np.ndarray) -> float:
    """``x = q'^T C~ q'``, clipped at zero against roundoff."""
    return max(float(q_dot @ C_tilde @ q_dot), 0.0)


def _check_dims(state: ModalState, mats: SystemMatrices) -> None:
    if state.n != mats.n:
        raise ConfigurationError(f"state has {state.n} modes but matrices have {mats.n}")


def control_thm1(state: ModalState, mats: SystemMatrices, cfg: ControllerConfig,
                 u_max: float | None = None) -> float:
    """Energy-shaped damping ``u_max * s(x)`` for the undisturbed rope."""
    _check_dims(state, mats)
    u_max = cfg.u_max if u_max is None else u_max
    return u_max * saturation(damper_power_rate(state.q_dot, mats.C_tilde))


def _reconstruction_terms(x: float, qd_norm: float, cfg: ControllerConfig):
    T1 = cfg.F_tilde_max * qd_norm * (cfg.u_max_p + cfg.v1_max)
    T2 = (cfg.F_tilde_max * cfg.v2_max + cfg.F_max) * qd_norm
    r1 = math.hypot(1.0, T1 * x)
    r2 = math.hypot(1.0, T2 * x)
    return T1, T2, r1, r2


def invariant_set_membership(state: ModalState, mats: SystemMatrices,
                             cfg: ControllerConfig) -> tuple[bool, bool]:
    """Whether the state lies in the sets the disturbance-rejection law drives into.

    ``S_k = {x^2 / sqrt(1 + x^2 T_k^2) <= 1 / v_k_max}``; a zero cap makes the
    threshold infinite, so the set is the whole space.
    """
    _check_dims(state, mats)
    x = damper_power_rate(state.q_dot, mats.C_tilde)
    _, _, r1, r2 = _reconstruction_terms(x, float(np.linalg.norm(state.q_dot)), cfg)
    return cfg.v1_max * x * x / r1 <= 1.0, cfg.v2_max * x * x / r2 <= 1.0


def control_thm2(state: ModalState, mats: SystemMatrices,
                 cfg: ControllerConfig) -> tuple[float, ControlDiagnostics]:
    """Nominal law plus two Lyapunov-redesign terms for bounded disturbances."""
    _check_dims(state, mats)
    x = damper_power_rate(state.q_dot, mats.C_tilde)
    T1, T2, r1, r2 = _reconstruction_terms(x, float(np.linalg.norm(state.q_dot)), cfg)
    u_nom = cfg.u_max_p * saturation(x)
    v1 = cfg.v1_max * T1 * x / r1
    v2 = cfg.v2_max * T2 * x / r2
    B1 = T1 * (1.0 - cfg.v1_max * x * x / r1)
    B2 = T2 * (1.0 - cfg.v2_max * x * x / r2)
    diag = ControlDiagnostics(x, u_nom, v1, v2, T1, T2, B1, B2,
                              cfg.v1_max * x * x / r1 <= 1.0, cfg.v2_max * x * x / r2 <= 1.0)
    return u_nom + v1 + v2, diag


def command(state: ModalState, mats: SystemMatrices,
            cfg: ControllerConfig) -> tuple[float, ControlDiagnostics | None]:
    """Damping coefficient requested by the configured law."""
    if cfg.mode == "none":
        return 0.0, None
    if cfg.mode == "passive":
        return cfg.k_const, None
    if cfg.mode == "thm1":
        return control_thm1(state, mats, cfg), None
    return control_thm2(state, mats, cfg)


def lyapunov_V(state: ModalState, mats: SystemMatrices) -> float:
    """Mechanical energy ``q'^T M q' / 2 + q^T K q / 2``."""
    _check_dims(state, mats)
    q, qd = state.q, state.q_dot
    return 0.5 * float(qd @ mats.M @ qd) + 0.5 * float(q @ mats.K @ q)


def lyapunov_Vdot(state: ModalState, mats: SystemMatrices, U: float,
                  forcing: tuple[np.ndarray, np.ndarray]) -> float:
    """dV/dt along the reduced dynamics for constant K and damping ``U``."""
    _check_dims(state, mats)
    q, qd = state.q, state.q_dot
    F, Ft = forcing
    Mqdd = F + Ft * U - (mats.C + mats.C_tilde * U) @ qd - (mats.K + mats.K_tilde * U) @ q
    return float(qd @ Mqdd) + 0.5 * float(q @ (mats.K + mats.K.T) @ qd)


def lyapunov_Vdot_bound(state: ModalState, mats: SystemMatrices, U: float,
                        forcing: tuple[np.ndarray, np.ndarray],
                        cfg: ControllerConfig) -> tuple[float, float]:
    """Actual dV/dt and the upper bound guaranteed for ``cfg``'s law.

    ``thm1`` (no disturbance): ``-u_max x^2 / sqrt(1 + x^2)``.
    ``thm2``: ``B1 + B2`` from the redesign terms.
    """
    vdot = lyapunov_Vdot(state, mats, U, forcing)
    if cfg.mode == "thm1":
        x = damper_power_rate(state.q_dot, mats.C_tilde)
        return vdot, -cfg.u_max * x * saturation(x)
    if cfg.mode == "thm2":
        _, d = control_thm2(state, mats, cfg)
        return vdot, d.B1 + d.B2
    raise ConfigurationError(f"no Lyapunov bound is defined for mode {cfg.mode!r}",
                             key="controller.mode")
