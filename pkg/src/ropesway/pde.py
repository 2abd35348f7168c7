"""Explicit finite-difference solver for the rope sway PDE (stationary car).

Leapfrog in time, conservative central differences in space with the
tension taken at cell midpoints, and centred damping so the update stays
explicit. The damper's Dirac load is spread over one cell (``dirac='cell'``)
or over a three-node hat (``dirac='hat'``).

``form='transformed'`` integrates the homogeneous-boundary variable ``w``
with the boundary-motion source terms; ``form='original'`` integrates the
sway ``u`` itself with the moving ends imposed directly. The second form
never touches the source terms and so checks them independently.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, replace

import numpy as np

from .basis import SineBasis
from .errors import ConfigurationError, ValidationError
from .model import (STATIC, DisturbanceProfile, Forcing, ModalState, RopeParams,
                    assemble_matrices, boundary_sway, s_terms, tension)
from .sim import Scenario, integrate_interval

CFL_SAFETY = 0.9


@dataclass(frozen=True)
class FdGrid:
    n_cells: int
    dy: float
    dt: float
    w: np.ndarray         # nodal values at t
    w_prev: np.ndarray    # nodal values at t - dt
    t: float = 0.0
    form: str = "transformed"

    @property
    def y(self) -> np.ndarray:
        return np.arange(self.n_cells + 1) * self.dy

    def probe(self, y) -> np.ndarray:
        return np.interp(y, self.y, self.w)


def max_wave_speed(params: RopeParams) -> float:
    return math.sqrt(tension(0.0, 0.0, params) / params.rho)


def cfl_limit(params: RopeParams, n_cells: int) -> float:
    return CFL_SAFETY * (params.l / n_cells) / max_wave_speed(params)


class FdSolver:
    """Precomputed operator for a fixed rope, grid and time step."""

    def __init__(self, params: RopeParams, n_cells: int, dt: float,
                 form: str = "transformed", dirac: str = "cell"):
        if n_cells < 4:
            raise ConfigurationError("need at least 4 cells", key="pde.n_cells")
        if form not in ("transformed", "original"):
            raise ConfigurationError(f"unknown form {form!r}", key="pde.form")
        if dirac not in ("cell", "hat"):
            raise ConfigurationError(f"unknown Dirac regularization {dirac!r}", key="pde.dirac")
        limit = cfl_limit(params, n_cells)
        if not 0 < dt <= limit * (1 + 1e-12):
            raise ConfigurationError(f"dt={dt:g} violates the CFL limit {limit:g}", key="pde.dt")
        self.params, self.n_cells, self.dt, self.form = params, n_cells, dt, form
        self.dy = params.l / n_cells
        self.y = np.arange(n_cells + 1) * self.dy
        ymid = 0.5 * (self.y[:-1] + self.y[1:])
        self.T_mid = np.array([tension(v, 0.0, params) for v in ymid])
        j = int(round((params.l - params.l_dp) / self.dy))
        self.delta = np.zeros(n_cells + 1)
        if dirac == "cell":
            self.delta[j] = 1.0 / self.dy
        else:
            self.delta[j - 1:j + 2] = np.array([0.25, 0.5, 0.25]) / self.dy
        self.damper_node = j

    def operator(self, w: np.ndarray) -> np.ndarray:
        """Tension term ``d/dy (T dw/dy)`` at interior nodes."""
        flux = self.T_mid * np.diff(w) / self.dy
        return np.diff(flux) / self.dy

    def source(self, t: float, U: float, dist: DisturbanceProfile) -> np.ndarray:
        """Boundary-motion sources on the interior nodes (transformed form)."""
        if self.form == "original" or dist.is_zero:
            return np.zeros(self.n_cells - 1)
        p = self.params
        s1, s2, s3, s4 = s_terms(t, p, STATIC, dist)
        _, f1d, f1dd, _, f2d, _ = dist.boundary(t, p)
        y = self.y[1:-1]
        h_t = f1d + y / p.l * (f2d - f1d)
        return (y * (-p.rho * s1 - p.c_p * s2) - p.rho * f1dd + s4
                - U * self.delta[1:-1] * h_t)

    def boundary(self, t: float, dist: DisturbanceProfile) -> tuple[float, float]:
        if self.form == "transformed":
            return 0.0, 0.0
        f1, _, _, f2, _, _ = dist.boundary(t, self.params)
        return f1, f2

    def acceleration(self, w: np.ndarray, w_t: np.ndarray, t: float, U: float,
                     dist: DisturbanceProfile) -> np.ndarray:
        gamma = self.params.c_p + U * self.delta[1:-1]
        return (self.operator(w) - gamma * w_t[1:-1] + self.source(t, U, dist)) / self.params.rho

    def advance(self, w: np.ndarray, w_prev: np.ndarray, t: float, U: float,
                dist: DisturbanceProfile) -> np.ndarray:
        rho, dt = self.params.rho, self.dt
        gamma = self.params.c_p + U * self.delta[1:-1]
        rhs = (rho * (2.0 * w[1:-1] - w_prev[1:-1]) / dt**2 + gamma * w_prev[1:-1] / (2.0 * dt)
               + self.operator(w) + self.source(t, U, dist))
        new = np.empty_like(w)
        new[1:-1] = rhs / (rho / dt**2 + gamma / (2.0 * dt))
        new[0], new[-1] = self.boundary(t + dt, dist)
        return new

    def initial_grid(self, w0: np.ndarray, w_t0: np.ndarray, U: float = 0.0,
                     dist: DisturbanceProfile = DisturbanceProfile(), t0: float = 0.0) -> FdGrid:
        """Grid at ``t0`` with a second-order Taylor start for the previous level."""
        w0 = np.asarray(w0, dtype=float).copy()
        w_t0 = np.asarray(w_t0, dtype=float)
        w0[0], w0[-1] = self.boundary(t0, dist)
        acc = np.zeros_like(w0)
        acc[1:-1] = self.acceleration(w0, w_t0, t0, U, dist)
        prev = w0 - self.dt * w_t0 + 0.5 * self.dt**2 * acc
        prev[0], prev[-1] = self.boundary(t0 - self.dt, dist)
        return FdGrid(self.n_cells, self.dy, self.dt, w0, prev, t0, self.form)

    def step(self, grid: FdGrid, U: float, dist: DisturbanceProfile) -> FdGrid:
        new = self.advance(grid.w, grid.w_prev, grid.t, U, dist)
        return replace(grid, w=new, w_prev=grid.w, t=grid.t + self.dt)

    def energy(self, grid: FdGrid) -> float:
        """Discrete energy conserved by the undamped, unforced scheme.

        Kinetic part from the one-sided velocity between the two stored
        levels, potential part as the cross product of their gradients.
        """
        v = (grid.w - grid.w_prev) / self.dt
        kinetic = 0.5 * self.params.rho * np.sum(v[1:-1] ** 2) * self.dy
        g1 = np.diff(grid.w) / self.dy
        g0 = np.diff(grid.w_prev) / self.dy
        potential = 0.5 * np.sum(self.T_mid * g1 * g0) * self.dy
        return float(kinetic + potential)


def pde_step(grid: FdGrid, params: RopeParams, U: float, dist: DisturbanceProfile,
             t: float | None = None, dirac: str = "cell") -> FdGrid:
    """Advance ``grid`` by one leapfrog step (``t`` defaults to ``grid.t``)."""
    solver = FdSolver(params, grid.n_cells, grid.dt, grid.form, dirac)
    if t is not None:
        grid = replace(grid, t=t)
    return solver.step(grid, U, dist)


def modal_initial_profile(y: np.ndarray, state: ModalState, params: RopeParams):
    """Nodal ``w`` and ``w_t`` for a modal state in the sine basis."""
    basis = SineBasis(state.n)
    phi = basis.psi(y / params.l) / math.sqrt(params.l)
    return state.q @ phi, state.q_dot @ phi


def fd_probe_traces(params: RopeParams, scenario: Scenario, times: np.ndarray,
                    probes, n_cells: int = 400, U: float = 0.0, form: str = "transformed",
                    dirac: str = "cell", with_solution: bool = False):
    """Sway ``u`` at ``probes`` for each of ``times`` (uniformly spaced from 0)."""
    times = np.asarray(times, dtype=float)
    sample = times[1] - times[0]
    n_sub = max(1, math.ceil(sample / cfl_limit(params, n_cells)))
    solver = FdSolver(params, n_cells, sample / n_sub, form, dirac)
    dist = scenario.disturbance
    n0 = max(len(scenario.q0), len(scenario.qd0), 1)
    w0, wt0 = modal_initial_profile(solver.y, scenario.initial_state(n0), params)
    if form == "original":
        w0 = w0 + boundary_sway(solver.y, 0.0, params, dist)
        _, f1d, _, _, f2d, _ = dist.boundary(0.0, params)
        wt0 = wt0 + f1d + solver.y / params.l * (f2d - f1d)
    grid = solver.initial_grid(w0, wt0, U, dist)
    probes = np.atleast_1d(np.asarray(probes, dtype=float))
    out = np.zeros((times.size, probes.size))
    mode1 = math.sqrt(2.0 / params.l) * np.sin(np.pi * solver.y / params.l)
    q1_sq = np.zeros(times.size)
    w_sq = np.zeros(times.size)
    for k in range(times.size):
        u = grid.w if form == "original" else grid.w + boundary_sway(solver.y, grid.t, params, dist)
        out[k] = np.interp(probes, solver.y, u)
        w = u - boundary_sway(solver.y, grid.t, params, dist) if form == "original" else grid.w
        q1_sq[k] = np.trapezoid(w * mode1, solver.y) ** 2
        w_sq[k] = np.trapezoid(w * w, solver.y)
        if k + 1 < times.size:
            for _ in range(n_sub):
                grid = solver.step(grid, U, dist)
    total = w_sq.sum()
    higher = float(1.0 - q1_sq.sum() / total) if total > 0 else 0.0
    if with_solution:
        return out, higher, grid, solver
    return out, higher


def galerkin_probe_traces(params: RopeParams, scenario: Scenario, n_modes: int,
                          times: np.ndarray, probes, U: float = 0.0,
                          dt: float = 1e-3) -> np.ndarray:
    """Sway at ``probes`` from the ``n_modes`` reduced model with constant damping ``U``."""
    times = np.asarray(times, dtype=float)
    sample = times[1] - times[0]
    n_sub = int(round(sample / dt))
    if n_sub < 1 or abs(n_sub * dt - sample) > 1e-9 * sample:
        raise ValidationError("sample spacing must be a multiple of the modal time step")
    basis = SineBasis(n_modes)
    mats = assemble_matrices(params, STATIC, basis)
    dist = scenario.disturbance
    forcing = None if dist.is_zero else Forcing(params, STATIC, mats, dist)
    probes = np.atleast_1d(np.asarray(probes, dtype=float))
    phi = (basis.psi(probes / params.l) / math.sqrt(params.l)).reshape(n_modes, probes.size)
    z = scenario.initial_state(n_modes).z
    out = np.zeros((times.size, probes.size))
    for k in range(times.size):
        t = k * sample
        out[k] = z[:n_modes] @ phi + boundary_sway(probes, t, params, dist)
        if k + 1 < times.size:
            z = integrate_interval(mats, U, forcing, z, t, dt, n_sub)
    return out


@dataclass(frozen=True)
class ComparisonReport:
    probes: tuple[float, ...]
    linf: np.ndarray          # max |u_fd - u_modal| per probe [m]
    l2: np.ndarray            # RMS difference per probe [m]
    peak: np.ndarray          # max |u_fd| per probe [m]
    higher_mode_fraction: float  # share of the FD displacement norm outside mode 1
    times: np.ndarray
    fd: np.ndarray
    modal: np.ndarray

    @property
    def rel_linf(self) -> np.ndarray:
        return np.divide(self.linf, self.peak, out=np.zeros_like(self.linf),
                         where=self.peak > 0)

    def to_csv(self, source: str = "fd") -> str:
        """Probe traces with the same ``t,sway_y...`` columns as simulation results."""
        if source not in ("fd", "modal"):
            raise ValueError(f"source must be 'fd' or 'modal', got {source!r}")
        data = self.fd if source == "fd" else self.modal
        out = io.StringIO()
        out.write(",".join(["t"] + [f"sway_y{p:g}" for p in self.probes]) + "\n")
        np.savetxt(out, np.column_stack([self.times, data]), fmt="%.17g", delimiter=",")
        return out.getvalue()

    @property
    def rel_l2(self) -> np.ndarray:
        return np.divide(self.l2, self.peak, out=np.zeros_like(self.l2), where=self.peak > 0)


def compare_modal_vs_pde(params: RopeParams, scenario: Scenario, n_modes: int,
                         n_cells: int = 400, duration: float = 60.0, probes=(195.0,),
                         U: float = 0.0, sample: float = 0.05, dt_modal: float = 1e-3,
                         form: str = "transformed", dirac: str = "cell") -> ComparisonReport:
    """Run the reduced model and the FD solver on the same data and diff the probes.

    ``scenario.zero_damping`` removes the distributed damping on both sides.
    """
    probes = tuple(float(p) for p in np.atleast_1d(probes))
    if any(not 0.0 < p < params.l for p in probes):
        raise ValidationError(f"probes must lie strictly inside (0, {params.l})")
    if max(len(scenario.q0), len(scenario.qd0)) > n_modes:
        raise ValidationError("initial condition has more modes than the reduced model")
    if duration > scenario.duration:
        raise ValidationError(f"comparison window {duration} s exceeds the scenario length")
    if scenario.zero_damping:
        params = replace(params, c_p=0.0)
    times = np.arange(int(round(duration / sample)) + 1) * sample
    fd, higher = fd_probe_traces(params, scenario, times, probes, n_cells, U, form, dirac)
    modal = galerkin_probe_traces(params, scenario, n_modes, times, probes, U, dt_modal)
    diff = fd - modal
    return ComparisonReport(
        probes, np.max(np.abs(diff), axis=0), np.sqrt(np.mean(diff**2, axis=0)),
        np.max(np.abs(fd), axis=0), higher, times, fd, modal)
