"""Assumed-mode shape functions on the normalized coordinate xi = y / l.

The default basis is ``psi_j(xi) = sqrt(2) sin(j pi xi)``, orthonormal on
[0, 1] and zero at both ends. Every integral the reduced model needs has a
closed form for it; Gauss-Legendre quadrature is kept as a second path and
as the only path for user-supplied bases.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigurationError

ORTHONORMAL_TOL = 1e-10
DEFAULT_NODES = 64


class ModalBasis:
    """Interface for a finite set of shape functions on [0, 1]."""

    n: int

    def psi(self, xi) -> np.ndarray:
        """Shape values, shape ``(n,)`` for scalar ``xi`` or ``(n, m)``."""
        raise NotImplementedError

    def dpsi(self, xi) -> np.ndarray:
        """First derivatives with respect to ``xi``."""
        raise NotImplementedError


@dataclass(frozen=True)
class SineBasis(ModalBasis):
    n: int
    scale: float = 1.0  # 1.0 gives an orthonormal set; other values exist for fault injection

    def __post_init__(self):
        if self.n < 1:
            raise ConfigurationError("mode count must be >= 1", key="sim.modes")

    def _j(self, xi):
        j = np.arange(1, self.n + 1, dtype=float)
        xi = np.asarray(xi, dtype=float)
        return (j if xi.ndim == 0 else j[:, None]), xi

    def psi(self, xi):
        j, xi = self._j(xi)
        return self.scale * np.sqrt(2.0) * np.sin(j * np.pi * xi)

    def dpsi(self, xi):
        j, xi = self._j(xi)
        return self.scale * np.sqrt(2.0) * j * np.pi * np.cos(j * np.pi * xi)


@dataclass(frozen=True)
class FunctionBasis(ModalBasis):
    """Basis built from user callables ``f(xi) -> value`` (vectorized)."""

    funcs: tuple[Callable, ...]
    derivs: tuple[Callable, ...]

    def __post_init__(self):
        if len(self.funcs) != len(self.derivs) or not self.funcs:
            raise ConfigurationError("need one derivative per shape function")

    @property
    def n(self) -> int:
        return len(self.funcs)

    def _eval(self, fs: Sequence[Callable], xi):
        xi = np.asarray(xi, dtype=float)
        return np.array([np.broadcast_to(f(xi), xi.shape) for f in fs], dtype=float)

    def psi(self, xi):
        return self._eval(self.funcs, xi)

    def dpsi(self, xi):
        return self._eval(self.derivs, xi)


@dataclass(frozen=True)
class BasisIntegrals:
    """Every xi-integral appearing in the reduced model coefficients.

    ``A[i, j] = int (1-xi) psi_i psi_j'``, ``B = int (1-xi)^2 psi_i' psi_j'``,
    ``D = int (1-xi) psi_i' psi_j'``, ``E = int psi_i' psi_j'``,
    ``G = int xi psi_i psi_j'``, ``gram = int psi_i psi_j``,
    ``int_psi = int psi_i``, ``int_xi_psi = int xi psi_i``.
    """

    A: np.ndarray
    B: np.ndarray
    D: np.ndarray
    E: np.ndarray
    G: np.ndarray
    gram: np.ndarray
    int_psi: np.ndarray
    int_xi_psi: np.ndarray

    def __post_init__(self):
        # instances are cached and shared
        for k in self.__dataclass_fields__:
            getattr(self, k).flags.writeable = False

    def as_dict(self) -> dict[str, np.ndarray]:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def gauss_legendre(n_nodes: int = DEFAULT_NODES) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n_nodes)
    return 0.5 * (x + 1.0), 0.5 * w


def quadrature_integrals(basis: ModalBasis, n_nodes: int = DEFAULT_NODES) -> BasisIntegrals:
    xi, w = gauss_legendre(n_nodes)
    p = basis.psi(xi)
    dp = basis.dpsi(xi)
    one_m = 1.0 - xi

    def gram(a, b, weight):
        return (a * (w * weight)) @ b.T

    return BasisIntegrals(
        A=gram(p, dp, one_m),
        B=gram(dp, dp, one_m**2),
        D=gram(dp, dp, one_m),
        E=gram(dp, dp, 1.0),
        G=gram(p, dp, xi),
        gram=gram(p, p, 1.0),
        int_psi=p @ w,
        int_xi_psi=p @ (w * xi),
    )


def _cos_moment(k: np.ndarray) -> np.ndarray:
    # int_0^1 (1-xi) cos(k pi xi) dxi
    k = np.abs(k)
    out = np.full(k.shape, 0.5)
    nz = k != 0
    out[nz] = (1.0 - (-1.0) ** k[nz]) / (k[nz] * np.pi) ** 2
    return out


def _cos_moment2(k: np.ndarray) -> np.ndarray:
    # int_0^1 (1-xi)^2 cos(k pi xi) dxi
    k = np.abs(k)
    out = np.full(k.shape, 1.0 / 3.0)
    nz = k != 0
    out[nz] = 2.0 / (k[nz] * np.pi) ** 2
    return out


def _inv_or_zero(k: np.ndarray) -> np.ndarray:
    out = np.zeros(k.shape)
    nz = k != 0
    out[nz] = 1.0 / k[nz]
    return out


def sine_integrals(n: int, scale: float = 1.0) -> BasisIntegrals:
    """Closed-form integrals for ``scale * sqrt(2) sin(j pi xi)``."""
    j = np.arange(1, n + 1)
    I, J = np.meshgrid(j, j, indexing="ij")
    s2 = scale**2
    ij_pi2 = I * J * np.pi**2
    D = s2 * ij_pi2 * (_cos_moment(I - J) + _cos_moment(I + J))
    B = s2 * ij_pi2 * (_cos_moment2(I - J) + _cos_moment2(I + J))
    E = s2 * np.diag((j * np.pi) ** 2).astype(float)
    # int (1-xi) sin(k pi xi) = 1/(k pi) and int xi sin(k pi xi) = -(-1)^k/(k pi), both odd in k
    A = s2 * J * (1.0 / (I + J) + _inv_or_zero(I - J))
    sign = (-1.0) ** (I + J)
    G = -s2 * sign * J * (1.0 / (I + J) + _inv_or_zero(I - J))
    sign_j = (-1.0) ** j
    return BasisIntegrals(
        A=A.astype(float),
        B=B,
        D=D,
        E=E,
        G=G,
        gram=s2 * np.eye(n),
        int_psi=scale * np.sqrt(2.0) * (1.0 - sign_j) / (j * np.pi),
        int_xi_psi=-scale * np.sqrt(2.0) * sign_j / (j * np.pi),
    )


@lru_cache(maxsize=64)
def basis_integrals(basis: ModalBasis, method: str = "auto",
                    n_nodes: int = DEFAULT_NODES) -> BasisIntegrals:
    """Integrals for ``basis``; ``method`` is ``analytic``, ``quadrature`` or ``auto``."""
    if method not in ("auto", "analytic", "quadrature"):
        raise ConfigurationError(f"unknown integration method {method!r}")
    if method == "quadrature" or (method == "auto" and not isinstance(basis, SineBasis)):
        if n_nodes < DEFAULT_NODES:
            raise ConfigurationError(f"quadrature needs >= {DEFAULT_NODES} nodes, got {n_nodes}")
        return quadrature_integrals(basis, n_nodes)
    if not isinstance(basis, SineBasis):
        raise ConfigurationError("analytic integrals exist only for the sine basis")
    return sine_integrals(basis.n, basis.scale)


def orthonormality_error(basis: ModalBasis, n_nodes: int = DEFAULT_NODES) -> float:
    """max |int psi_i psi_j - delta_ij| evaluated by quadrature."""
    g = quadrature_integrals(basis, n_nodes).gram
    return float(np.max(np.abs(g - np.eye(basis.n))))


def check_orthonormal(basis: ModalBasis, tol: float = ORTHONORMAL_TOL) -> None:
    err = orthonormality_error(basis)
    if err > tol:
        raise ConfigurationError(
            f"basis is not orthonormal: max |<psi_i, psi_j> - delta_ij| = {err:.3e} > {tol:g}",
            key="basis")
