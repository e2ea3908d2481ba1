"""First Dirichlet eigenpair of an axisymmetric spherical cap and derived exponents.

The eigenproblem  -Δ_S φ = λ φ  on the cap {theta < beta} ⊂ S^{n-1} reduces to

    -sin^{2-n}(t) (sin^{n-2}(t) φ')' = λ φ,   φ'(0) = 0,  φ(beta) = 0,

which is solved here by shooting in λ from the pole.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import brentq

from .errors import DomainError, SolverFailure
from .grid import GridSpec, sin_weight, sphere_measure

RTOL = 1e-12
ATOL = 1e-14


class BoundaryCondition(str, enum.Enum):
    SYMMETRY = "symmetry"
    DIRICHLET = "dirichlet0"


@dataclass(frozen=True)
class CapSpec:
    """Axisymmetric cap of half-angle ``beta`` in S^{n-1}."""

    n: int
    beta: float
    bc_at_zero: BoundaryCondition = BoundaryCondition.SYMMETRY

    def __post_init__(self):
        bc = BoundaryCondition(self.bc_at_zero)
        object.__setattr__(self, "bc_at_zero", bc)
        if int(self.n) != self.n or self.n < 2:
            raise DomainError(f"dimension n must be an integer >= 2, got {self.n}")
        upper = 2 * math.pi if self.n == 2 else math.pi
        if not 0.0 < self.beta < upper:
            raise DomainError(f"cap half-angle must lie in (0, {upper:.6g}) for n={self.n}, got {self.beta}")
        if bc is BoundaryCondition.DIRICHLET and self.n != 2:
            raise DomainError("the Dirichlet condition at t=0 is only allowed for n = 2")

    @property
    def dirichlet_at_zero(self) -> bool:
        return self.bc_at_zero is BoundaryCondition.DIRICHLET


def exponents(n: int, lam: float) -> tuple[float, float]:
    """Return (gamma, p_star) for the cap eigenvalue ``lam`` in dimension ``n``.

    gamma is the positive root of gamma (gamma + n - 2) = lam, written in the
    cancellation-free form lam / ((n-2)/2 + sqrt(((n-2)/2)^2 + lam)).
    """
    if n < 2:
        raise DomainError("n must be at least 2")
    if not lam > 0:
        raise DomainError(f"eigenvalue must be positive, got {lam}")
    half = 0.5 * (n - 2)
    gamma = lam / (half + math.sqrt(half * half + lam))
    p_star = (n + gamma) / (n + gamma - 2)
    return gamma, p_star


def eps_coefficient(n: int, lam: float, p: float) -> float:
    """λ + α(n-2-α) with α = 2/(p-1); vanishes exactly at p = p*."""
    alpha = 2.0 / (p - 1.0)
    return lam + alpha * (n - 2.0 - alpha)


@dataclass(frozen=True)
class SpectralData:
    cap: CapSpec
    lam: float
    gamma: float
    p_star: float
    t: np.ndarray = field(repr=False)
    phi1: np.ndarray = field(repr=False)
    dphi1: np.ndarray = field(repr=False)
    c_n: float = 1.0
    grid: GridSpec = GridSpec()

    @property
    def n(self) -> int:
        return self.cap.n

    @property
    def beta(self) -> float:
        return self.cap.beta

    def phi1_at(self, theta, derivative: int = 0):
        """φ₁ (or a derivative) off-grid via Hermite interpolation of (φ₁, φ₁')."""
        spline = CubicHermiteSpline(self.t, self.phi1, self.dphi1)
        theta = np.clip(np.asarray(theta, dtype=float), 0.0, self.beta)
        return spline(theta, derivative)

    def alpha_star(self) -> float:
        return self.n + self.gamma - 2.0


def _rhs(n, lam):
    def f(t, y):
        phi, dphi = y
        damp = (n - 2) * math.cos(t) / math.sin(t) if n > 2 else 0.0
        return [dphi, -damp * dphi - lam * phi]

    return f


def _shoot(cap: CapSpec, lam: float, dense: bool = False):
    """Integrate from the pole to beta; return (solution, t_start, start_state)."""
    n, beta = cap.n, cap.beta
    if cap.dirichlet_at_zero:
        t0, y0 = 0.0, [0.0, 1.0]
    else:
        t0 = min(1e-4, 1e-3 * beta)
        # series start forced by φ'' + (n-2)φ'/t + λφ ≈ 0 near the pole
        c2 = lam / (2.0 * (n - 1))
        c4 = lam * (lam - 2.0 * (n - 2) / 3.0) / (8.0 * (n - 1) * (n + 1))
        y0 = [1.0 - c2 * t0**2 + c4 * t0**4, -2 * c2 * t0 + 4 * c4 * t0**3]

    def crossing(t, y):
        return y[0]

    sol = solve_ivp(
        _rhs(n, lam), (t0, beta), y0, method="DOP853", rtol=RTOL, atol=ATOL,
        events=crossing, dense_output=dense,
    )
    if sol.status < 0:
        raise SolverFailure("eigenfunction shooting failed", {"lambda": lam, "message": sol.message})
    nodes = sum(1 for te in sol.t_events[0] if t0 < te < beta * (1 - 1e-13))
    return sol, t0, y0, nodes


def _count_nodes(cap, lam):
    return _shoot(cap, lam)[3]


def _end_value(cap, lam):
    sol = _shoot(cap, lam)[0]
    return sol.y[0, -1]


def reference_eigenvalue(cap: CapSpec) -> float:
    """Explicit half-cap value n-1 rescaled by (π/(2β))², used to seed brackets."""
    if cap.dirichlet_at_zero:
        return (math.pi / cap.beta) ** 2
    return max(cap.n - 1, 1) * (math.pi / (2.0 * cap.beta)) ** 2


def _eigenvalue(cap: CapSpec) -> float:
    lam_ref = reference_eigenvalue(cap)
    lo, hi = 0.0, 4.0 * lam_ref
    if cap.dirichlet_at_zero:
        # the zero-node branch starts above 0 for Dirichlet data; λ=0 gives φ=t > 0
        lo = 0.0
    widen = 0
    while _count_nodes(cap, hi) == 0:
        lo, hi = hi, 2.0 * hi
        widen += 1
        if widen > 60:
            raise SolverFailure("eigenvalue bracket exhausted", {"lo": lo, "hi": hi})
    for _ in range(200):
        if _count_nodes(cap, hi) == 1:
            break
        mid = 0.5 * (lo + hi)
        if _count_nodes(cap, mid) == 0:
            lo = mid
        else:
            hi = mid
    else:
        raise SolverFailure("could not isolate the zero-node branch", {"lo": lo, "hi": hi})
    f_lo, f_hi = _end_value(cap, lo), _end_value(cap, hi)
    if lo == 0.0 and not cap.dirichlet_at_zero:
        f_lo = 1.0
    if not (f_lo > 0 > f_hi):
        raise SolverFailure("endpoint values do not bracket an eigenvalue", {"lo": lo, "hi": hi})
    return brentq(lambda lam: _end_value(cap, lam), lo, hi, xtol=1e-15, rtol=1e-15, maxiter=200)


def solve_cap_eigen(cap: CapSpec, grid: GridSpec | None = None) -> SpectralData:
    """Smallest eigenvalue and positive, unit-L² eigenfunction of the cap."""
    grid = grid or GridSpec()
    n, beta = cap.n, cap.beta
    lam = _eigenvalue(cap)
    sol, t0, y0, nodes = _shoot(cap, lam, dense=True)
    if nodes != 0:
        raise SolverFailure("returned eigenfunction has interior zeros", {"lambda": lam, "nodes": nodes})

    t = grid.points(beta)
    phi = np.empty_like(t)
    dphi = np.empty_like(t)
    inner = t >= t0
    ys = sol.sol(t[inner])
    phi[inner], dphi[inner] = ys[0], ys[1]
    if not cap.dirichlet_at_zero:
        near = ~inner
        c2 = lam / (2.0 * (n - 1))
        c4 = lam * (lam - 2.0 * (n - 2) / 3.0) / (8.0 * (n - 1) * (n + 1))
        phi[near] = 1.0 - c2 * t[near] ** 2 + c4 * t[near] ** 4
        dphi[near] = -2 * c2 * t[near] + 4 * c4 * t[near] ** 3
    phi[-1] = 0.0

    c_n = sphere_measure(n)
    norm2 = c_n * grid.integrate(sin_weight(t, n) * phi**2, t)
    scale = 1.0 / math.sqrt(norm2)
    phi, dphi = phi * scale, dphi * scale
    if np.any(phi[:-1] <= 0) and not cap.dirichlet_at_zero:
        raise SolverFailure("eigenfunction not positive on [0, beta)", {"lambda": lam})

    gamma, p_star = exponents(n, lam)
    return SpectralData(cap, float(lam), gamma, p_star, t, phi, dphi, c_n, grid)


def moment(spec: SpectralData, power: float) -> float:
    """Surface integral of φ₁^power over the cap."""
    if power < 1:
        raise DomainError("moment power must be >= 1")
    w = sin_weight(spec.t, spec.n)
    return spec.c_n * spec.grid.integrate(w * np.abs(spec.phi1) ** power, spec.t)


def _cumulative(y, x):
    return integrate.cumulative_trapezoid(y, x, initial=0.0)


def representation_residual(spec: SpectralData, phi=None) -> float:
    """sup |φ(t) - λ ∫_t^β sin^{2-n}s ∫_0^s sin^{n-2}r φ(r) dr ds| on the grid.

    Both integrals use the cumulative trapezoid rule, so the residual of an
    exact eigenpair is O(h²).  ``phi`` overrides the stored eigenfunction.
    """
    t, n = spec.t, spec.n
    phi = spec.phi1 if phi is None else np.asarray(phi, dtype=float)
    if spec.cap.dirichlet_at_zero:
        # integrate from the pole with φ(0) = 0:  φ(t) = φ'(0) t - λ ∫_0^t ∫_0^s φ
        inner = _cumulative(phi, t)
        outer = _cumulative(inner, t)
        slope = (phi[-1] + spec.lam * outer[-1]) / t[-1]
        return float(np.max(np.abs(phi - (slope * t - spec.lam * outer))))
    w = sin_weight(t, n)
    inner = _cumulative(w * phi, t)
    ratio = np.zeros_like(t)
    pos = w > 0
    ratio[pos] = inner[pos] / w[pos]
    tail = _cumulative(ratio, t)
    outer = tail[-1] - tail
    return float(np.max(np.abs(phi - spec.lam * outer)))


def mazya_constant(weight_a, weight_b, q: float, s: float, nodes: int = 4001):
    """Bracket for the best constant C in

        [∫_0^s B |u|^q]^{1/q} <= C [∫_0^s A |u'|^2]^{1/2},   u(s) = 0.

    ``weight_a`` and ``weight_b`` are callables (or samples on a uniform grid
    of ``[0, s]``).  Returns (K, lower, upper) with lower = K and
    upper = K (q/(q-1))^{1/2} q^{1/q}.
    """
    if q < 2:
        raise DomainError("exponent q must be >= 2")
    r = np.linspace(0.0, s, nodes)
    a = weight_a(r) if callable(weight_a) else np.asarray(weight_a, dtype=float)
    b = weight_b(r) if callable(weight_b) else np.asarray(weight_b, dtype=float)
    if a.shape != r.shape or b.shape != r.shape:
        raise DomainError("weight samples must lie on a uniform grid of [0, s]")
    if np.any(a < 0) or np.any(b < 0):
        raise DomainError("weights must be nonnegative")

    # ∫_0^r B by Gauss quadrature per cell when callable, else trapezoid
    if callable(weight_b):
        mass = _cell_cumulative(weight_b, r)
    else:
        mass = _cumulative(b, r)
    if callable(weight_a):
        inv_tail = _cell_cumulative(lambda x: 1.0 / weight_a(x), r, from_right=True)
    else:
        with np.errstate(divide="ignore"):
            inv = 1.0 / a
        inv[~np.isfinite(inv)] = 0.0
        acc = _cumulative(inv[::-1], r)[::-1]
        inv_tail = acc
    if not np.all(np.isfinite(mass)) or not np.all(np.isfinite(inv_tail[1:])):
        raise DomainError("weight integrals diverge on (0, s)")
    vals = mass[1:-1] ** (1.0 / q) * np.sqrt(inv_tail[1:-1])
    k = float(np.max(vals))
    # polish the maximizer on the continuous variable
    i = int(np.argmax(vals)) + 1
    if 1 < i < nodes - 2 and callable(weight_a) and callable(weight_b):
        k = max(k, _polish(weight_a, weight_b, q, s, r[i - 1], r[i + 1]))
    upper = k * math.sqrt(q / (q - 1.0)) * q ** (1.0 / q)
    return k, k, upper


def _cell_cumulative(func, r, from_right=False):
    xg, wg = np.polynomial.legendre.leggauss(12)
    a, b = r[:-1], r[1:]
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    pts = mid[:, None] + half[:, None] * xg[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        cell = half * (func(pts) @ wg)
    if from_right:
        out = np.concatenate((np.cumsum(cell[::-1])[::-1], [0.0]))
    else:
        out = np.concatenate(([0.0], np.cumsum(cell)))
    return out


def _polish(weight_a, weight_b, q, s, lo, hi):
    from scipy.integrate import quad
    from scipy.optimize import minimize_scalar

    def neg(r):
        mb = quad(weight_b, 0.0, r, epsabs=1e-14, epsrel=1e-13, limit=200)[0]
        ia = quad(lambda x: 1.0 / weight_a(x), r, s, epsabs=1e-14, epsrel=1e-13, limit=200)[0]
        return -(mb ** (1.0 / q)) * math.sqrt(ia)

    res = minimize_scalar(neg, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
    return -float(res.fun)
