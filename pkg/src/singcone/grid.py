"""Uniform grids, quadrature, and the finite-volume Laplace-Beltrami stencil on a cap.

Every cap in this package is axisymmetric, so functions on it depend on the
polar angle ``theta`` in ``[0, beta]`` only and the surface measure reduces to
``C(n) sin^{n-2}(theta) dtheta``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp
from scipy import integrate
from scipy.special import gamma as gamma_fn

from .errors import DomainError

_QUADRATURES = ("simpson", "trapezoid")


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid on an interval, together with the quadrature used on it."""

    nodes: int = 2049
    spacing: str = "uniform"
    quadrature: str = "simpson"
    level: int = 0

    def __post_init__(self):
        if int(self.nodes) < 16:
            raise DomainError(f"grid needs at least 16 nodes, got {self.nodes}")
        if self.spacing != "uniform":
            raise DomainError(f"unsupported spacing law {self.spacing!r}")
        if self.quadrature not in _QUADRATURES:
            raise DomainError(f"unknown quadrature rule {self.quadrature!r}")

    def points(self, length: float) -> np.ndarray:
        if not length > 0:
            raise DomainError("grid length must be positive")
        return np.linspace(0.0, length, self.nodes)

    def refined(self) -> "GridSpec":
        """Halve the spacing; node sets of consecutive levels are nested."""
        return replace(self, nodes=2 * (self.nodes - 1) + 1, level=self.level + 1)

    def integrate(self, values, x) -> float:
        if self.quadrature == "simpson":
            return float(integrate.simpson(values, x=x))
        return float(integrate.trapezoid(values, x=x))


def sphere_measure(n: int) -> float:
    """C(n): the factor turning ``int sin^{n-2} f dt`` into a surface integral.

    Equal to the area of S^{n-2}; for n = 2 the arc-length convention C(2) = 1
    is used (the cap is the arc (0, beta) measured from its centre).
    """
    if n < 2:
        raise DomainError("n must be at least 2")
    if n == 2:
        return 1.0
    k = n - 1
    return 2.0 * math.pi ** (k / 2.0) / gamma_fn(k / 2.0)


def sin_weight(theta, n: int):
    """sin^{n-2}(theta), with the n = 2 case identically 1."""
    theta = np.asarray(theta, dtype=float)
    if n == 2:
        return np.ones_like(theta)
    return np.sin(theta) ** (n - 2)


def _cell_integrals(edges: np.ndarray, n: int) -> np.ndarray:
    """Exact-to-roundoff integrals of sin^{n-2} over consecutive cells."""
    xg, wg = np.polynomial.legendre.leggauss(10)
    a, b = edges[:-1], edges[1:]
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    pts = mid[:, None] + half[:, None] * xg[None, :]
    return half * (sin_weight(pts, n) @ wg)


@dataclass(frozen=True)
class CapStencil:
    """Second-order conservative discretization of Δ_S on an axisymmetric cap.

    ``full`` acts on all nodes; ``matrix`` is its restriction to the unknown
    nodes ``theta[free]`` (Dirichlet endpoints dropped) and is symmetric with
    respect to the inner product weighted by ``volumes[free]``.
    """

    n: int
    beta: float
    theta: np.ndarray
    volumes: np.ndarray
    full: sp.csr_matrix
    matrix: sp.csr_matrix
    free: slice
    dirichlet_at_zero: bool

    @property
    def h(self) -> float:
        return float(self.theta[1] - self.theta[0])

    def inner(self, f, g):
        """Discrete surface integral of f g over the cap (last axis is theta)."""
        return sphere_measure(self.n) * np.sum(self.volumes * f * g, axis=-1)

    def apply(self, values: np.ndarray) -> np.ndarray:
        """Δ_S of full-grid samples; rows at Dirichlet nodes are zero."""
        values = np.asarray(values, dtype=float)
        out = np.zeros_like(values)
        lap = (self.full @ values.T).T
        out[..., self.free] = lap[..., self.free]
        return out


def cap_stencil(n: int, beta: float, nodes: int, dirichlet_at_zero: bool = False) -> CapStencil:
    """Build the Δ_S stencil on ``nodes`` uniform points of ``[0, beta]``.

    Near the pole the coefficient (n-2) cot(theta) is singular; instead of
    expanding it, the operator is written in flux form with exact cell
    integrals of the weight, which reproduces the limit (n-1) φ''(0) and
    keeps symmetry.
    """
    if nodes < 16:
        raise DomainError("stencil needs at least 16 nodes")
    if dirichlet_at_zero and n != 2:
        raise DomainError("Dirichlet condition at the pole is only meaningful for n = 2")
    theta = np.linspace(0.0, beta, nodes)
    h = theta[1] - theta[0]
    mids = 0.5 * (theta[:-1] + theta[1:])
    edges = np.concatenate(([0.0], mids, [beta]))
    volumes = _cell_integrals(edges, n)
    flux = sin_weight(mids, n) / h
    main = np.zeros(nodes)
    main[:-1] -= flux
    main[1:] -= flux
    full = sp.diags(1.0 / volumes) @ sp.diags([flux, main, flux], [-1, 0, 1], format="csr")
    full = full.tocsr()
    free = slice(1 if dirichlet_at_zero else 0, nodes - 1)
    matrix = full[free, :][:, free].tocsr()
    return CapStencil(n, float(beta), theta, volumes, full, matrix, free, dirichlet_at_zero)
