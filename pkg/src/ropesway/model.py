"""Rope parameters, boundary disturbances and the reduced N-mode model.

The lateral sway is written as ``u(y, t) = w(y, t) + h(y, t)`` with
``h = (l - y)/l f1(t) + y/l f2(t)`` carrying the boundary motion, and
``w = sum_j q_j psi_j(y/l) / sqrt(l)`` vanishing at both ends. Projection
gives

    M q'' + (C + C~ U) q' + (K + K~ U) q = F(t) + F~(t) U

with ``U`` the damping coefficient of the semi-active damper. The
coefficient formulas keep the rope-length rate and acceleration, but every
supported scenario uses a stationary car.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field, fields

import numpy as np
from scipy.interpolate import CubicSpline

from .basis import ModalBasis, SineBasis, basis_integrals, check_orthonormal
from .errors import ConfigurationError, DomainError

G_STANDARD = 9.81


@dataclass(frozen=True)
class RopeParams:
    """Main-rope, car and building constants (SI units)."""

    rho: float = 2.11        # linear mass density [kg/m]
    l: float = 390.0         # rope length [m]
    H: float = 402.8         # building height [m]
    c_p: float = 0.0315      # distributed damping [N s/m per m]
    m_e: float = 3500.0      # car mass [kg]
    M_cs: float = 0.0        # compensating-sheave mass [kg]
    g: float = G_STANDARD
    n_ropes: int = 8
    l_dp: float = 5.0        # damper attachment height above the car [m]
    car_mass_share: str = "divided_by_n"  # or "full"

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        checks = [
            ("rho", self.rho > 0, "must be > 0"),
            ("l", self.l > 0, "must be > 0"),
            ("l", self.l <= self.H, "l <= H violated"),
            ("c_p", self.c_p >= 0, "must be >= 0"),
            ("m_e", self.m_e > 0, "must be > 0"),
            ("M_cs", self.M_cs >= 0, "must be >= 0"),
            ("g", self.g > 0, "must be > 0"),
            ("n_ropes", self.n_ropes >= 1, "must be >= 1"),
            ("l_dp", 0 < self.l_dp < self.l, "0 < l_dp < l violated"),
            ("car_mass_share", self.car_mass_share in ("full", "divided_by_n"),
             "must be 'full' or 'divided_by_n'"),
        ]
        for key, ok, msg in checks:
            if not ok:
                raise ConfigurationError(msg, key=f"rope.{key}")
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, float) and not math.isfinite(v):
                raise ConfigurationError("must be finite", key=f"rope.{f.name}")

    @property
    def m_eff(self) -> float:
        """Car mass carried by the modelled rope."""
        return self.m_e / self.n_ropes if self.car_mass_share == "divided_by_n" else self.m_e

    @property
    def xi_dp(self) -> float:
        return (self.l - self.l_dp) / self.l

    @property
    def f2_factor(self) -> float:
        return math.sin(math.pi * (self.H - self.l) / (2.0 * self.H))


@dataclass(frozen=True)
class KinematicState:
    """Rope-length rate and acceleration (zero for a parked car)."""

    l_dot: float = 0.0
    l_ddot: float = 0.0

    @property
    def is_static(self) -> bool:
        return self.l_dot == 0.0 and self.l_ddot == 0.0


STATIC = KinematicState()


@dataclass(frozen=True)
class ModalState:
    q: np.ndarray
    q_dot: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float).reshape(-1)
        qd = np.asarray(self.q_dot, dtype=float).reshape(-1)
        if q.shape != qd.shape:
            raise ValueError(f"q has {q.size} entries but q_dot has {qd.size}")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "q_dot", qd)

    @classmethod
    def zeros(cls, n: int, t: float = 0.0) -> "ModalState":
        return cls(np.zeros(n), np.zeros(n), t)

    @property
    def n(self) -> int:
        return self.q.size

    @property
    def z(self) -> np.ndarray:
        return np.concatenate([self.q, self.q_dot])

    @classmethod
    def from_z(cls, z: np.ndarray, t: float) -> "ModalState":
        n = z.size // 2
        return cls(z[:n].copy(), z[n:].copy(), t)

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.q)) and np.all(np.isfinite(self.q_dot)))


@dataclass(frozen=True)
class DisturbanceProfile:
    """Top-end boundary displacement f1(t) and its first two derivatives.

    ``kind`` is ``zero``, ``sinusoid`` (``amplitude * sin(2 pi frequency t)``)
    or ``sampled``. A sampled profile is interpolated by a cubic spline whose
    derivatives supply f1' and f1''; outside the table the end values are
    held and the derivatives are zero.
    """

    kind: str = "zero"
    amplitude: float = 0.0
    frequency: float = 0.0
    times: tuple[float, ...] = ()
    values: tuple[float, ...] = ()
    _spline: CubicSpline | None = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in ("zero", "sinusoid", "sampled"):
            raise ConfigurationError(f"unknown disturbance kind {self.kind!r}", key="disturbance.kind")
        if self.kind == "sinusoid" and self.frequency < 0:
            raise ConfigurationError("must be >= 0", key="disturbance.frequency")
        if self.kind == "sampled":
            t = np.asarray(self.times, dtype=float)
            v = np.asarray(self.values, dtype=float)
            if t.size < 4 or t.size != v.size or np.any(np.diff(t) <= 0):
                raise ConfigurationError(
                    "sampled disturbance needs >= 4 strictly increasing times with matching values",
                    key="disturbance.table")
            object.__setattr__(self, "_spline", CubicSpline(t, v))

    @classmethod
    def zero(cls) -> "DisturbanceProfile":
        return cls()

    @classmethod
    def sinusoid(cls, amplitude: float, frequency: float) -> "DisturbanceProfile":
        return cls("sinusoid", amplitude=amplitude, frequency=frequency)

    @classmethod
    def sampled(cls, times, values) -> "DisturbanceProfile":
        return cls("sampled", times=tuple(map(float, times)), values=tuple(map(float, values)))

    @property
    def is_zero(self) -> bool:
        return self.kind == "zero" or (self.kind == "sinusoid" and self.amplitude == 0.0)

    def evaluate(self, t: float) -> tuple[float, float, float]:
        """Return ``(f1, f1', f1'')`` at time ``t``."""
        if self.kind == "zero":
            return 0.0, 0.0, 0.0
        if self.kind == "sinusoid":
            w = 2.0 * math.pi * self.frequency
            s, c = math.sin(w * t), math.cos(w * t)
            a = self.amplitude
            return a * s, a * w * c, -a * w * w * s
        sp = self._spline
        t0, t1 = self.times[0], self.times[-1]
        if t <= t0 or t >= t1:
            return float(sp(min(max(t, t0), t1))), 0.0, 0.0
        return float(sp(t)), float(sp(t, 1)), float(sp(t, 2))

    def evaluate_array(self, t) -> np.ndarray:
        """Vectorized :meth:`evaluate`; returns shape ``(3, len(t))``."""
        t = np.asarray(t, dtype=float)
        out = np.zeros((3, t.size))
        if self.kind == "sinusoid":
            w = 2.0 * math.pi * self.frequency
            s, c = np.sin(w * t), np.cos(w * t)
            a = self.amplitude
            out[0], out[1], out[2] = a * s, a * w * c, -a * w * w * s
        elif self.kind == "sampled":
            sp = self._spline
            t0, t1 = self.times[0], self.times[-1]
            inside = (t > t0) & (t < t1)
            out[0] = sp(np.clip(t, t0, t1))
            out[1, inside] = sp(t[inside], 1)
            out[2, inside] = sp(t[inside], 2)
        return out

    def f1(self, t: float) -> float:
        return self.evaluate(t)[0]

    def f1_dot(self, t: float) -> float:
        return self.evaluate(t)[1]

    def f1_ddot(self, t: float) -> float:
        return self.evaluate(t)[2]

    def boundary(self, t: float, params: RopeParams) -> tuple[float, float, float, float, float, float]:
        """``(f1, f1', f1'', f2, f2', f2'')``; f2 follows by the fixed height factor."""
        f1, f1d, f1dd = self.evaluate(t)
        k = params.f2_factor
        return f1, f1d, f1dd, k * f1, k * f1d, k * f1dd


def derive_f2(f1_value: float, params: RopeParams) -> float:
    """Car-end disturbance implied by the top-end one.

    The same factor scales the derivatives while the rope length is fixed.
    """
    return f1_value * params.f2_factor


def tension(y: float, t: float, params: RopeParams, kin: KinematicState = STATIC) -> float:
    """Main-rope tension at height ``y`` below the machine room."""
    if not 0.0 <= y <= params.l:
        raise DomainError(f"y={y} outside [0, {params.l}]")
    return ((params.m_eff + params.rho * (params.l - y)) * (params.g - kin.l_ddot)
            + 0.5 * params.M_cs * params.g)


def tension_gradient(params: RopeParams, kin: KinematicState = STATIC) -> float:
    """dT/dy, constant along the rope."""
    return -params.rho * (params.g - kin.l_ddot)


def s_terms(t: float, params: RopeParams, kin: KinematicState,
            dist: DisturbanceProfile) -> tuple[float, float, float, float]:
    """The four boundary-motion source scalars of the transformed rope equation."""
    return s_terms_from_boundary(dist.boundary(t, params), params, kin)


def s_terms_from_boundary(b, params: RopeParams, kin: KinematicState = STATIC):
    """:func:`s_terms` from ``(f1, f1', f1'', f2, f2', f2'')``; scalars or arrays."""
    l, v, a, rho = params.l, kin.l_dot, kin.l_ddot, params.rho
    f1, f1d, f1dd, f2, f2d, f2dd = b
    s1 = ((l * a - 2.0 * v * v) / l**3 * f1 + 2.0 * v / l**2 * f1d
          + (l**3 * f2dd - f2 * l**2 * a + 2.0 * l * v * v * f2 - 2.0 * l**2 * v * f2d) / l**4
          - f1dd / l)
    s2 = v / l**2 * f1 - f1d / l + f2d / l - f2 * v / l**2
    s3 = (f2 - f1) / l
    G = rho * a - tension_gradient(params, kin) + params.c_p * v
    s4 = -2.0 * v * rho * s2 - G * s3 - params.c_p * f1d
    return s1, s2, s3, s4


@dataclass(frozen=True)
class SystemMatrices:
    """Coefficient matrices of the reduced model plus what the forcing needs."""

    M: np.ndarray
    C: np.ndarray
    C_tilde: np.ndarray
    K: np.ndarray
    K_tilde: np.ndarray
    psi_dp: np.ndarray        # psi_i at the damper station
    int_psi: np.ndarray       # int psi_i dxi
    int_xi_psi: np.ndarray    # int xi psi_i dxi
    l: float
    xi_dp: float

    @property
    def n(self) -> int:
        return self.M.shape[0]

    def truncated(self, n: int) -> "SystemMatrices":
        """Leading ``n``-mode block (the model a reduced controller is built on)."""
        if not 1 <= n <= self.n:
            raise ConfigurationError(f"cannot truncate {self.n} modes to {n}")
        sq = slice(0, n)
        return SystemMatrices(
            self.M[sq, sq], self.C[sq, sq], self.C_tilde[sq, sq], self.K[sq, sq],
            self.K_tilde[sq, sq], self.psi_dp[sq], self.int_psi[sq], self.int_xi_psi[sq],
            self.l, self.xi_dp)

    def to_csv(self) -> str:
        """Row-major dump of each matrix, 17 significant digits."""
        buf = io.StringIO()
        for name in ("M", "C", "C_tilde", "K", "K_tilde"):
            mat = getattr(self, name)
            for i, row in enumerate(mat):
                cells = ",".join(f"{x:.17g}" for x in row)
                buf.write(f"{name},{i + 1},{cells}\n")
        return buf.getvalue()


def assemble_matrices(params: RopeParams, kin: KinematicState = STATIC,
                      basis: ModalBasis | None = None, method: str = "auto") -> SystemMatrices:
    """Build M, C, C~, K, K~ for ``basis`` (default: two sine modes).

    ``method='analytic'`` uses closed-form sine integrals, ``'quadrature'``
    uses 64-node Gauss-Legendre; ``'auto'`` picks analytic when available.
    """
    basis = basis if basis is not None else SineBasis(2)
    check_orthonormal(basis)
    ints = basis_integrals(basis, method)
    n = basis.n
    I = np.eye(n)
    l, v, a = params.l, kin.l_dot, kin.l_ddot
    rho, c_p, g = params.rho, params.c_p, params.g
    xi_dp = params.xi_dp
    psi_dp = np.atleast_1d(basis.psi(xi_dp)).astype(float)
    dpsi_dp = np.atleast_1d(basis.dpsi(xi_dp)).astype(float)

    M = rho * I
    C = rho * v / l * (2.0 * ints.A - I) + c_p * I
    C_tilde = np.outer(psi_dp, psi_dp) / l
    K = (0.25 * rho * v * v / l**2 * I
         - rho * v * v / l**2 * ints.B
         + rho * (g - a) / l * ints.D
         + params.m_eff * (g - a) / l**2 * ints.E
         + rho * (v * v / l**2 - a / l) * (0.5 * I - ints.A)
         - c_p * v / l * (ints.G + 0.5 * I)
         + 0.5 * params.M_cs * g / l**2 * ints.E)
    # K~[i, j] couples psi_i and psi_j' at the damper station
    P, dP = psi_dp[:, None], dpsi_dp[None, :]
    K_tilde = v / l**2 * (-dP * P * xi_dp - 0.5 * np.outer(psi_dp, psi_dp) + dP * P)
    return SystemMatrices(M, C, C_tilde, K, K_tilde, psi_dp,
                          np.array(ints.int_psi), np.array(ints.int_xi_psi), l, xi_dp)


class Forcing:
    """Callable ``t -> (F, F~)`` for a fixed model and disturbance.

    The damper term is the projection of ``-U delta(y - y_dp) h_t`` with
    ``h_t`` the boundary-motion velocity at the damper station.
    """

    def __init__(self, params: RopeParams, kin: KinematicState, mats: SystemMatrices,
                 dist: DisturbanceProfile):
        self.params, self.kin, self.mats, self.dist = params, kin, mats, dist
        n = mats.n
        self._zero = (np.zeros(n), np.zeros(n))
        sl = math.sqrt(params.l)
        self._f_xi = -params.l * sl * mats.int_xi_psi
        self._f_one = sl * mats.int_psi
        self._ft = -mats.psi_dp / sl
        for arr in self._zero:
            arr.flags.writeable = False

    def _from_boundary(self, b):
        p, kin = self.params, self.kin
        rho, c_p, l, v = p.rho, p.c_p, p.l, kin.l_dot
        s1, s2, s3, s4 = s_terms_from_boundary(b, p, kin)
        f1, f1d, f1dd, f2, f2d, _ = b
        h_t_dp = f1d + (l - p.l_dp) * (v / l**2 * (f1 - f2) + (f2d - f1d) / l)
        return rho * s1 + c_p * s2, s4 - rho * f1dd, h_t_dp

    def __call__(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        if self.dist.is_zero:
            return self._zero
        a, b, h = self._from_boundary(self.dist.boundary(t, self.params))
        return a * self._f_xi + b * self._f_one, h * self._ft

    def many(self, t) -> tuple[np.ndarray, np.ndarray]:
        """``F`` and ``F~`` at each of ``t``, as ``(n, len(t))`` arrays."""
        e = self.dist.evaluate_array(t)
        k = self.params.f2_factor
        a, b, h = self._from_boundary((e[0], e[1], e[2], k * e[0], k * e[1], k * e[2]))
        F = np.outer(self._f_xi, a) + np.outer(self._f_one, b)
        return F, np.outer(self._ft, h)


def eval_forcing(t: float, params: RopeParams, kin: KinematicState, basis: ModalBasis,
                 dist: DisturbanceProfile) -> tuple[np.ndarray, np.ndarray]:
    mats = assemble_matrices(params, kin, basis)
    return Forcing(params, kin, mats, dist)(t)


def boundary_sway(y, t: float, params: RopeParams, dist: DisturbanceProfile):
    """Boundary-motion part ``h(y, t)`` of the sway."""
    f1, _, _, f2, _, _ = dist.boundary(t, params)
    y = np.asarray(y, dtype=float)
    return (params.l - y) / params.l * f1 + y / params.l * f2


def sway_at(y, state: ModalState, params: RopeParams, basis: ModalBasis,
            dist: DisturbanceProfile = DisturbanceProfile(), t: float | None = None):
    """Total lateral displacement ``u(y, t)`` for a modal state.

    ``y`` may be a scalar or an array of stations; ``t`` defaults to ``state.t``.
    """
    t = state.t if t is None else t
    ya = np.asarray(y, dtype=float)
    if np.any(ya < 0.0) or np.any(ya > params.l):
        raise DomainError(f"y outside [0, {params.l}]")
    phi = basis.psi(ya / params.l) / math.sqrt(params.l)
    w = state.q @ phi
    out = w + boundary_sway(ya, t, params, dist)
    return float(out) if np.ndim(out) == 0 else out


def natural_frequencies(mats: SystemMatrices) -> np.ndarray:
    """Undamped natural frequencies [Hz] of ``M q'' + K q = 0``, ascending."""
    from scipy.linalg import eigh

    w2 = eigh(mats.K, mats.M, eigvals_only=True)
    return np.sqrt(np.clip(w2, 0.0, None)) / (2.0 * math.pi)

