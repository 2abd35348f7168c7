"""Self-checks run by ``ropesway verify``."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .basis import ORTHONORMAL_TOL, orthonormality_error, quadrature_integrals, sine_integrals
from .control import ControllerConfig, lyapunov_V
from .model import STATIC, ModalState, assemble_matrices
from .pde import compare_modal_vs_pde
from .sim import SimConfig, _make_rhs, impulse_scenario, rk4_step, run_scenario

ENERGY_TOL = 1e-6
ENERGY_SPAN = 100.0
LYAPUNOV_STEP_TOL = 1e-12
LYAPUNOV_DECAY = 0.1
MODAL_PDE_TOL = 0.05
INTEGRAL_TOL = 1e-12


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    value: float
    threshold: float
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name:<22} value={self.value:.4g}  limit={self.threshold:.4g}  {self.detail}"


def check_orthonormality(cfg: SimConfig) -> CheckResult:
    err = orthonormality_error(cfg.plant_basis())
    return CheckResult("orthonormality", err <= ORTHONORMAL_TOL, err, ORTHONORMAL_TOL)


def check_integrals(cfg: SimConfig) -> CheckResult:
    """Closed-form sine integrals against Gauss-Legendre quadrature (relative error)."""
    basis = cfg.plant_basis()
    a = sine_integrals(basis.n, basis.scale).as_dict()
    q = quadrature_integrals(basis).as_dict()
    err = max(float(np.max(np.abs(a[k] - q[k]))) / max(1.0, float(np.max(np.abs(a[k]))))
              for k in a)
    return CheckResult("integral dual path", err <= INTEGRAL_TOL, err, INTEGRAL_TOL)


def energy_drift(cfg: SimConfig, span: float = ENERGY_SPAN) -> float:
    """|V(span) - V(0)| / V(0) with c_p = 0, U = 0 and no forcing."""
    params = replace(cfg.rope, c_p=0.0)
    mats = assemble_matrices(params, STATIC, cfg.plant_basis())
    init = cfg.scenario.initial_state(cfg.modes)
    if not np.any(init.z):
        init = impulse_scenario().initial_state(cfg.modes)
    rhs = _make_rhs(mats, 0.0, None)
    z = init.z
    n_steps = int(round(span / cfg.dt))
    for k in range(n_steps):
        z = rk4_step(rhs, k * cfg.dt, z, cfg.dt)
    V0 = lyapunov_V(init, mats)
    V1 = lyapunov_V(ModalState.from_z(z, span), mats)
    return abs(V1 - V0) / V0


def check_energy(cfg: SimConfig) -> CheckResult:
    drift = energy_drift(cfg)
    return CheckResult("energy conservation", drift <= ENERGY_TOL, drift, ENERGY_TOL,
                       f"dt={cfg.dt:g}, {ENERGY_SPAN:g} s")


def lyapunov_run(cfg: SimConfig):
    """Impulse scenario with the exact-state energy-shaping law."""
    ctrl = ControllerConfig("thm1", u_max=cfg.controller.u_max, modes=cfg.controller.modes)
    run_cfg = replace(cfg, controller=ctrl, scenario=impulse_scenario(), ideal_chain=True,
                      record_every=1)
    return run_scenario(run_cfg)


def check_lyapunov(cfg: SimConfig) -> CheckResult:
    res = lyapunov_run(cfg)
    rise = float(np.max(np.diff(res.V))) if res.V.size > 1 else 0.0
    decay = float(np.linalg.norm(res.q[-1]) / np.linalg.norm(res.q[0]))
    ok = rise <= LYAPUNOV_STEP_TOL and decay <= LYAPUNOV_DECAY
    return CheckResult("lyapunov monotonicity", ok, decay, LYAPUNOV_DECAY,
                       f"max V rise per sample {rise:.3g} (limit {LYAPUNOV_STEP_TOL:g})")


def check_modal_vs_pde(cfg: SimConfig, n_cells: int = 400, duration: float = 60.0) -> CheckResult:
    sample = cfg.dt * math.ceil(0.05 / cfg.dt - 1e-9)
    rep = compare_modal_vs_pde(cfg.rope, impulse_scenario(), cfg.modes, n_cells, duration,
                               (cfg.probe_y,), sample=sample, dt_modal=cfg.dt)
    err = float(rep.rel_linf[0])
    return CheckResult("modal vs PDE", err <= MODAL_PDE_TOL, err, MODAL_PDE_TOL,
                       f"N={cfg.modes}, n_cells={n_cells}, {duration:g} s, y={cfg.probe_y:g}")


CHECKS = (
    ("orthonormality", check_orthonormality),
    ("integral dual path", check_integrals),
    ("energy conservation", check_energy),
    ("lyapunov monotonicity", check_lyapunov),
    ("modal vs PDE", check_modal_vs_pde),
)


def run_checks(cfg: SimConfig) -> list[CheckResult]:
    """Run every check; an exception inside a check counts as a failure."""
    results = []
    for name, check in CHECKS:
        try:
            results.append(check(cfg))
        except Exception as exc:  # noqa: BLE001 - reported, not swallowed
            results.append(CheckResult(name, False, math.nan, math.nan,
                                       f"{type(exc).__name__}: {exc}"))
    return results
