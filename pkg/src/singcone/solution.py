"""The singular solution u₁(r, θ) = r^{-α} (a(t) φ₁(θ) + ψ(t, θ)), t = -log r, and its checks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import RectBivariateSpline

from .cap_spectrum import SpectralData
from .errors import DomainError, SolverFailure
from .grid import sphere_measure
from .heteroclinic import Heteroclinic
from .profile import ProfileFn
from .strip import StripField


@dataclass(frozen=True)
class SingularSolution:
    spec: SpectralData
    het: Heteroclinic
    psi: StripField
    p: float
    _spline: RectBivariateSpline = field(repr=False, compare=False)

    @property
    def alpha(self) -> float:
        return 2.0 / (self.p - 1.0)

    @property
    def T(self) -> float:
        return self.psi.grid.T

    @property
    def r_range(self) -> tuple[float, float]:
        return math.exp(-self.T), math.exp(self.T)

    def phi(self, t, theta):
        """a(t) φ₁(θ) + ψ(t, θ) at matching arrays of points."""
        t, theta = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(theta, dtype=float))
        if np.any(np.abs(t) > self.T * (1 + 1e-12)):
            raise DomainError(f"t outside the truncation window [-{self.T:.6g}, {self.T:.6g}]")
        if np.any(theta < 0) or np.any(theta > self.spec.beta * (1 + 1e-12)):
            raise DomainError("angle outside the cap")
        base = self.het(t.ravel()).reshape(t.shape) * np.maximum(self.spec.phi1_at(theta), 0.0)
        return base + self._spline.ev(t, theta)

    def evaluate(self, r, theta):
        r = np.asarray(r, dtype=float)
        if np.any(r <= 0):
            raise DomainError("r must be positive")
        return r ** (-self.alpha) * self.phi(-np.log(r), theta)

    def derivatives(self, t, theta) -> dict:
        """φ and its partials in (t, θ) up to second order.

        a'' and φ₁'' come from their ODEs; ψ derivatives from the bicubic spline.
        """
        t, theta = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(theta, dtype=float))
        phi = self.phi(t, theta)
        P = self.het.params
        n, lam = self.spec.n, self.spec.lam
        shape = t.shape
        a = self.het(t.ravel()).reshape(shape)
        a1 = self.het(t.ravel(), 1).reshape(shape)
        a2 = -P.A * a1 + P.eps * a - P.mu * np.abs(a) ** P.p
        f = np.maximum(self.spec.phi1_at(theta), 0.0)
        f1 = self.spec.phi1_at(theta, 1)
        if n > 2:
            safe = np.where(theta > 1e-8, theta, 1.0)
            f2 = np.where(theta > 1e-8, -(n - 2) * np.cos(safe) / np.sin(safe) * f1 - lam * f,
                          -lam * f / (n - 1))
        else:
            f2 = -lam * f
        sp_ = self._spline
        return {
            "phi": phi,
            "t": a1 * f + sp_.ev(t, theta, dx=1),
            "tt": a2 * f + sp_.ev(t, theta, dx=2),
            "th": a * f1 + sp_.ev(t, theta, dy=1),
            "thth": a * f2 + sp_.ev(t, theta, dy=2),
            "tth": a1 * f1 + sp_.ev(t, theta, dx=1, dy=1),
        }


def assemble_u1(spec: SpectralData, het: Heteroclinic, psi: StripField, p: float) -> SingularSolution:
    if abs(het.params.p - p) > 1e-14 or abs(psi.grid.beta - spec.beta) > 1e-12:
        raise DomainError("pieces were computed for different (cap, p)")
    g = psi.grid
    spline = RectBivariateSpline(g.t, g.theta, psi.values, kx=3, ky=3)
    return SingularSolution(spec, het, psi, float(p), spline)


@dataclass(frozen=True)
class SeparatedSolution:
    """The exact cone solution r^{-α} φ_p(θ), with the same evaluation interface."""

    profile: ProfileFn

    @property
    def alpha(self) -> float:
        return self.profile.alpha

    @property
    def p(self) -> float:
        return self.profile.p

    @property
    def spec_beta(self) -> float:
        return self.profile.cap.beta

    def evaluate(self, r, theta):
        r = np.asarray(r, dtype=float)
        return r ** (-self.alpha) * self.profile.phi_at(theta)

    def gradient_constant(self, theta=None) -> float:
        """sup_θ |x|^{α+1} |∇(r^{-α} φ_p)| = sup sqrt(α² φ_p² + φ_p'²).

        ``theta`` restricts the sup to given angles (default: the whole grid).
        """
        pr = self.profile
        if theta is None:
            phi, dphi = pr.phi, pr.dphi
        else:
            phi, dphi = pr.phi_at(theta), pr.phi_at(theta, 1)
        return float(np.max(np.sqrt(self.alpha**2 * phi**2 + dphi**2)))


def _beta(u) -> float:
    return u.spec.beta if hasattr(u, "spec") else u.spec_beta


def _n(u) -> int:
    return u.spec.n if hasattr(u, "spec") else u.profile.cap.n


@dataclass(frozen=True)
class AsymptoticsReport:
    origin_radii: tuple
    origin_ratio: tuple
    infinity_slope: float
    infinity_constant: float
    pointwise_C: float
    expected_slope: float


def verify_asymptotics(u: SingularSolution, profile: ProfileFn, radii=(1e-2, 1e-3, 1e-4),
                       angle_fraction: float = 0.95) -> AsymptoticsReport:
    """Origin ratios sup_θ |r^α u/φ_p - 1|, far-field slope of log(u/φ₁), and sup r^α u / ‖φ_p‖.

    The ratio is taken over θ <= angle_fraction·β, away from the rim where both vanish.
    """
    if abs(profile.p - u.p) > 1e-14:
        raise DomainError("profile exponent differs from the solution's")
    beta = u.spec.beta
    theta = np.linspace(0.0, angle_fraction * beta, 200)
    lo, hi = u.r_range
    ratios = []
    for r in radii:
        if not lo <= r <= hi:
            raise DomainError(f"radius {r} outside the sampled window [{lo:.3g}, {hi:.3g}]")
        vals = r**u.alpha * u.evaluate(np.full_like(theta, r), theta)
        ratios.append(float(np.max(np.abs(vals / profile.phi_at(theta) - 1.0))))

    P = u.het.params
    t = u.psi.grid.t
    rel = u.het(t) / P.a_inf
    far = t[(rel < 1e-3) & (t > -u.T + 0.1 * u.T)]
    if far.size < 10:
        raise SolverFailure("far-field window too short for a slope fit", {"points": int(far.size)})
    r_far = np.exp(-far)
    zero = np.zeros_like(far)
    q = u.evaluate(r_far, zero) / float(u.spec.phi1_at(0.0))
    slope, intercept = np.polyfit(np.log(r_far), np.log(q), 1)

    g = u.psi.grid
    tt, th = np.meshgrid(g.t, g.theta, indexing="ij")
    C = float(np.max(np.abs(u.phi(tt, th))) / np.max(np.abs(profile.phi)))
    expected = -(u.spec.n + u.spec.gamma - 2.0)
    return AsymptoticsReport(tuple(radii), tuple(ratios), float(slope), float(math.exp(intercept)), C,
                             expected)


def dyadic_samples(r_lo: float, decades: int, beta: float, per_decade: int = 4, angles: int = 9,
                   margin: float = 0.1):
    """(r, θ) pairs at radii r_lo·2^k with angles in [margin·β, (1-margin)·β]."""
    radii = r_lo * 2.0 ** (np.arange(decades * per_decade) / per_decade * math.log2(10.0))
    th = np.linspace(margin * beta, (1.0 - margin) * beta, angles)
    R, TH = np.meshgrid(radii, th, indexing="ij")
    return np.column_stack([R.ravel(), TH.ravel()])


def _meridian(u, rho, z):
    r = np.hypot(rho, z)
    th = np.arctan2(rho, z)
    return u.evaluate(r, th)


def gradient_estimates(u, samples, rel_step: float = 1e-3) -> tuple[float, float]:
    """C1 = sup |x|^{α+1} |∇u|, C2 = sup |x|^{α+2} |D²u| by centered differences.

    Points are placed in a meridian half-plane (ρ, z); for n >= 3 the Hessian
    also carries n-2 azimuthal eigenvalues u_ρ/ρ.
    """
    pts = np.atleast_2d(np.asarray(samples, dtype=float))
    r, th = pts[:, 0], pts[:, 1]
    beta, n = _beta(u), _n(u)
    h = rel_step * r
    if np.any(th + 3 * h / r > beta) or np.any(r <= 0):
        raise DomainError("samples must lie inside the cone, away from the rim by the stencil width")
    rho, z = r * np.sin(th), r * np.cos(th)

    def f(dr, dz):
        return _meridian(u, rho + dr * h, z + dz * h)

    f0 = f(0, 0)
    u_r = (f(1, 0) - f(-1, 0)) / (2 * h)
    u_z = (f(0, 1) - f(0, -1)) / (2 * h)
    u_rr = (f(1, 0) - 2 * f0 + f(-1, 0)) / h**2
    u_zz = (f(0, 1) - 2 * f0 + f(0, -1)) / h**2
    u_rz = (f(1, 1) - f(1, -1) - f(-1, 1) + f(-1, -1)) / (4 * h**2)
    grad = np.hypot(u_r, u_z)
    hess2 = u_rr**2 + u_zz**2 + 2 * u_rz**2
    if n >= 3:
        small = rho < 1e-8 * r
        az = np.where(small, u_rr, u_r / np.where(small, 1.0, rho))
        hess2 = hess2 + (n - 2) * az**2
    a = u.alpha
    C1 = float(np.max(r ** (a + 1) * grad))
    C2 = float(np.max(r ** (a + 2) * np.sqrt(hess2)))
    return C1, C2


@dataclass(frozen=True)
class TestFunction:
    """v(r, θ) = b(r) φ₁(θ) q(cos θ) with a C^∞ bump b supported in (r1, r2)."""

    __test__ = False  # not a pytest class despite the name

    spec: SpectralData
    r1: float
    r2: float
    coeffs: tuple = (1.0,)

    def __post_init__(self):
        if not 0 < self.r1 < self.r2:
            raise DomainError("annulus needs 0 < r1 < r2")

    def _bump(self, r):
        r = np.asarray(r, dtype=float)
        inside = (r > self.r1) & (r < self.r2)
        q = np.where(inside, (r - self.r1) * (self.r2 - r), 1.0)
        dq = self.r1 + self.r2 - 2 * r
        g = np.where(inside, -1.0 / q, -np.inf)
        b = np.where(inside, np.exp(g), 0.0)
        g1 = dq / q**2
        g2 = -2.0 / q**2 - 2.0 * dq**2 / q**3
        return b, np.where(inside, b * g1, 0.0), np.where(inside, b * (g2 + g1**2), 0.0)

    def _poly(self, theta):
        c = np.cos(theta)
        s = np.sin(theta)
        P = np.polynomial.Polynomial(self.coeffs)
        q = P(c)
        dq_dc = P.deriv(1)(c)
        d2q_dc2 = P.deriv(2)(c) if len(self.coeffs) > 2 else np.zeros_like(c)
        q1 = -s * dq_dc
        q2 = s * s * d2q_dc2 - c * dq_dc
        return q, q1, q2

    def angular(self, theta):
        """(Θ, Δ_S Θ) with Θ = φ₁ q."""
        n, lam = self.spec.n, self.spec.lam
        phi = np.maximum(self.spec.phi1_at(theta), 0.0)
        dphi = self.spec.phi1_at(theta, 1)
        q, q1, q2 = self._poly(theta)
        # Δ_S q = q'' + (n-2) cot θ q', with q' = -sin θ P'(cos θ) so the cot term is regular
        c = np.cos(theta)
        P = np.polynomial.Polynomial(self.coeffs)
        lap_q = q2 - (n - 2) * c * P.deriv(1)(c) if n > 2 else q2
        return phi * q, -lam * phi * q + 2 * dphi * q1 + phi * lap_q

    def value(self, r, theta):
        b, _, _ = self._bump(r)
        return b * self.angular(theta)[0]

    def laplacian(self, r, theta):
        n = self.spec.n
        b, b1, b2 = self._bump(r)
        Th, lapTh = self.angular(theta)
        return (b2 + (n - 1) / r * b1) * Th + b / r**2 * lapTh


def weak_residual(u, v: TestFunction | None, annulus=None, nr: int = 400, ntheta: int = 400) -> float:
    """∫ (u Δv + |u|^p v) dx over the annulus by tensor Gauss-Legendre quadrature."""
    if v is None:
        return 0.0
    if annulus is None:
        annulus = (v.r1, v.r2)
    r1, r2 = annulus
    if v.r1 < r1 - 1e-14 or v.r2 > r2 + 1e-14:
        raise DomainError("test function support exceeds the annulus")
    beta, n = _beta(u), _n(u)
    if abs(v.spec.beta - beta) > 1e-12:
        raise DomainError("test function lives on a different cap")
    xr, wr = np.polynomial.legendre.leggauss(nr)
    xt, wt = np.polynomial.legendre.leggauss(ntheta)
    r = 0.5 * (r2 - r1) * (xr + 1) + r1
    wr = 0.5 * (r2 - r1) * wr
    th = 0.5 * beta * (xt + 1)
    wt = 0.5 * beta * wt
    R, TH = np.meshgrid(r, th, indexing="ij")
    uu = u.evaluate(R, TH)
    integrand = uu * v.laplacian(R, TH) + np.abs(uu) ** u.p * v.value(R, TH)
    weight = R ** (n - 1) * (np.sin(TH) ** (n - 2) if n > 2 else 1.0)
    return float(sphere_measure(n) * np.einsum("i,j,ij->", wr, wt, integrand * weight))


def positivity_scan(u: SingularSolution, samples: int = 10_000, seed: int = 0, rim_margin: float = 1e-3):
    """Minimum of u₁ over random interior points (log-uniform r, θ < (1 - rim_margin) β)."""
    rng = np.random.default_rng(seed)
    lo, hi = u.r_range
    r = np.exp(rng.uniform(math.log(lo), math.log(hi), samples))
    th = rng.uniform(0.0, (1.0 - rim_margin) * u.spec.beta, samples)
    return float(np.min(u.evaluate(r, th)))
