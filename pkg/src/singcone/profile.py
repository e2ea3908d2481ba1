"""Positive cap profiles φ_p making r^{-2/(p-1)} φ_p an exact cone solution.

With α = 2/(p-1) the profile solves

    Δ_S φ + κ φ + φ^p = 0 in the cap,  φ = 0 on its rim,   κ = α(α + 2 - n),

and κ increases to λ as p decreases to p*.  Solutions are found by shooting
on the pole amplitude φ(0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import brentq

from .cap_spectrum import CapSpec, SpectralData, eps_coefficient, moment
from .errors import DomainError, SolverFailure
from .grid import GridSpec, cap_stencil

RTOL = 1e-12
ATOL = 1e-14


def linear_coefficient(n: int, p: float) -> float:
    """κ(p) = α(α + 2 - n); equals λ at the critical exponent."""
    alpha = 2.0 / (p - 1.0)
    return alpha * (alpha + 2.0 - n)


def admissible_upper(n: int) -> float:
    """Upper end of the exponent range where positive profiles are known to exist."""
    return math.inf if n <= 3 else (n + 1.0) / (n - 3.0)


@dataclass(frozen=True)
class ProfileFn:
    cap: CapSpec
    p: float
    kappa: float
    amplitude: float
    t: np.ndarray = field(repr=False)
    phi: np.ndarray = field(repr=False)
    dphi: np.ndarray = field(repr=False)
    grid: GridSpec = GridSpec()
    ode_residual: float = 0.0

    @property
    def alpha(self) -> float:
        return 2.0 / (self.p - 1.0)

    def phi_at(self, theta, derivative: int = 0):
        """φ_p (or a derivative) by Hermite interpolation of the shooting data."""
        spline = CubicHermiteSpline(self.t, self.phi, self.dphi)
        return spline(np.asarray(theta, dtype=float), derivative)


def check_exponent(spec: SpectralData, p: float) -> None:
    n = spec.n
    upper = admissible_upper(n)
    if not p > spec.p_star:
        raise DomainError(f"p={p} must exceed the critical exponent p*={spec.p_star:.12g}")
    if not p < upper:
        raise DomainError(f"p={p} outside the admissible range (p*, {upper:.6g}) for n={n}")


def _shoot(n, kappa, p, beta, c, dense=False):
    t0 = min(1e-4, 1e-3 * beta)
    f0 = kappa * c + c**p
    y0 = [c - f0 * t0**2 / (2.0 * (n - 1)), -f0 * t0 / (n - 1)]

    def rhs(t, y):
        phi, dphi = y
        damp = (n - 2) * math.cos(t) / math.sin(t) if n > 2 else 0.0
        return [dphi, -damp * dphi - kappa * phi - abs(phi) ** (p - 1) * phi]

    def crossing(t, y):
        return y[0]

    crossing.terminal = True
    crossing.direction = -1
    sol = solve_ivp(rhs, (t0, beta), y0, method="DOP853", rtol=RTOL, atol=ATOL * max(c, 1e-300),
                    events=crossing, dense_output=dense)
    if sol.status < 0:
        raise SolverFailure("profile shooting failed", {"amplitude": c, "message": sol.message})
    return sol, t0


def _miss(n, kappa, p, beta, c):
    """Signed miss of the rim condition; negative on overshoot, continuous in c."""
    sol, _ = _shoot(n, kappa, p, beta, c)
    if sol.t_events[0].size:
        z = sol.t_events[0][0]
        slope = abs(sol.y_events[0][0][1])
        return (z - beta) * slope
    return sol.y[0, -1]


def solve_profile(spec: SpectralData, p: float, grid: GridSpec | None = None,
                  amplitude_guess: float | None = None) -> ProfileFn:
    """Positive solution of the profile problem by amplitude shooting."""
    check_exponent(spec, p)
    if spec.cap.dirichlet_at_zero:
        raise DomainError("profile shooting assumes the symmetric condition at the pole")
    grid = grid or spec.grid
    n, beta = spec.n, spec.beta
    kappa = linear_coefficient(n, p)
    eps = eps_coefficient(n, spec.lam, p)
    c_p = moment(spec, p + 1.0)
    predicted = (eps / c_p) ** (1.0 / (p - 1.0)) * float(spec.phi1[0])
    guess = amplitude_guess or predicted

    def miss(c):
        return _miss(n, kappa, p, beta, c)

    lo, hi = guess / 4.0, guess * 2.0
    tries = 0
    while miss(lo) <= 0:
        lo /= 4.0
        tries += 1
        if tries > 40:
            raise SolverFailure("no undershooting amplitude found", {"p": p, "lo": lo, "eps": eps})
    tries = 0
    while miss(hi) > 0:
        lo, hi = hi, hi * 2.0
        tries += 1
        if tries > 60:
            raise SolverFailure("no overshooting amplitude found; p may be too far from p*",
                                {"p": p, "hi": hi, "eps": eps})
    amp = brentq(miss, lo, hi, xtol=1e-15 * hi, rtol=1e-14, maxiter=300)

    sol, t0 = _shoot(n, kappa, p, beta, amp, dense=True)
    t = grid.points(beta)
    phi = np.empty_like(t)
    dphi = np.empty_like(t)
    inner = t >= t0
    end = sol.t[-1]
    ys = sol.sol(np.minimum(t[inner], end))
    phi[inner], dphi[inner] = ys[0], ys[1]
    f0 = kappa * amp + amp**p
    phi[~inner] = amp - f0 * t[~inner] ** 2 / (2.0 * (n - 1))
    dphi[~inner] = -f0 * t[~inner] / (n - 1)
    phi[-1] = 0.0
    if np.any(phi[:-1] <= 0):
        raise SolverFailure("profile is not positive inside the cap", {"p": p, "amplitude": amp})

    st = cap_stencil(n, beta, t.size)
    res = st.apply(phi) + kappa * phi + phi**p
    ode_res = float(np.max(np.abs(res[st.free])))
    return ProfileFn(spec.cap, float(p), kappa, float(amp), t, phi, dphi, grid, ode_res)


def _scaled_residual_field(profile: ProfileFn) -> np.ndarray:
    st = cap_stencil(profile.cap.n, profile.cap.beta, profile.t.size)
    lap = st.apply(profile.phi)
    lap[-1] = 0.0
    return lap


def cone_residual(profile: ProfileFn, sample_points, scale: float = 1.0) -> float:
    """sup |r^{α+2} (Δw + w^p)| for w = r^{-α} φ_p at (r, theta) samples.

    Radial derivatives of w are exact; the angular part uses the grid stencil.
    ``scale`` multiplies the profile (to probe non-solutions).
    """
    pts = np.atleast_2d(np.asarray(sample_points, dtype=float))
    r, theta = pts[:, 0], pts[:, 1]
    if np.any(r <= 0) or np.any(theta < 0) or np.any(theta > profile.cap.beta):
        raise DomainError("sample point outside the cone")
    n, a = profile.cap.n, profile.alpha
    phi = scale * profile.phi_at(theta)
    lap_s = scale * np.interp(theta, profile.t, _scaled_residual_field(profile))
    w = r**-a * phi
    w_r = -a * r ** (-a - 1) * phi
    w_rr = a * (a + 1) * r ** (-a - 2) * phi
    lap = w_rr + (n - 1) / r * w_r + r ** (-a - 2) * lap_s
    res = r ** (a + 2) * (lap + np.abs(w) ** profile.p)
    return float(np.max(np.abs(res)))


def near_critical_asymptote(spec: SpectralData, p: float, profile: ProfileFn) -> float:
    """Relative sup distance between φ_p and ((λ-κ)/c_p)^{1/(p-1)} φ₁."""
    if not p > spec.p_star:
        raise DomainError("p must exceed p*")
    kappa = linear_coefficient(spec.n, p)
    c_p = moment(spec, p + 1.0)
    phi1 = spec.phi1_at(profile.t)
    pred = ((spec.lam - kappa) / c_p) ** (1.0 / (p - 1.0)) * phi1
    return float(np.max(np.abs(profile.phi - pred)) / np.max(profile.phi))
