"""Heteroclinic connection of  a'' + A a' - ε a + μ a^p = 0  from 0 to a_∞.

The orbit interpolates between the far-field regime (a -> 0 as t -> -∞) and
the near-vertex regime (a -> a_∞ as t -> +∞) of the separated ansatz
u = r^{-2/(p-1)} a(-log r) φ₁.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import brentq

from .errors import DomainError, SolverFailure

RTOL = 1e-10
ATOL = 1e-12


@dataclass(frozen=True)
class HeteroclinicParams:
    n: int
    p: float
    lam: float
    mu: float
    alpha: float
    A: float
    eps: float
    a_inf: float
    delta_minus: float
    delta_tilde: tuple[complex, complex]
    focus: bool

    @property
    def delta_tilde_plus(self) -> complex:
        return self.delta_tilde[0]

    @property
    def right_rate(self) -> float:
        """Real part of the slow linearized rate at a_∞ (negative)."""
        return float(self.delta_tilde[0].real)

    def a_bar(self) -> float:
        """Positive zero of V(a) = -ε a²/2 + μ a^{p+1}/(p+1)."""
        return (self.eps * (self.p + 1.0) / (2.0 * self.mu)) ** (1.0 / (self.p - 1.0))

    def energy(self, a, da):
        a = np.asarray(a, dtype=float)
        return 0.5 * np.asarray(da) ** 2 - 0.5 * self.eps * a**2 + self.mu * np.abs(a) ** (self.p + 1) / (self.p + 1)

    def ode_residual(self, a, da, dda):
        return dda + self.A * da - self.eps * a + self.mu * np.abs(a) ** (self.p - 1) * a


def ode_params(n: int, lam: float, p: float, mu: float) -> HeteroclinicParams:
    if not p > 1:
        raise DomainError(f"p must exceed 1, got {p}")
    if not lam > 0:
        raise DomainError("λ must be positive")
    if not mu > 0:
        raise DomainError("μ must be positive")
    alpha = 2.0 / (p - 1.0)
    A = 2.0 * alpha + 2.0 - n
    eps = lam + alpha * (n - 2.0 - alpha)
    a_inf = (eps / mu) ** (1.0 / (p - 1.0)) if eps > 0 else float("nan")
    delta_minus = (math.sqrt(A * A + 4.0 * eps) - A) / 2.0 if A * A + 4 * eps >= 0 else float("nan")
    disc = A * A - 4.0 * (p - 1.0) * eps
    root = cmath.sqrt(disc)
    tilde = ((-A + root) / 2.0, (-A - root) / 2.0)
    return HeteroclinicParams(n, p, lam, mu, alpha, A, eps, a_inf, delta_minus, tilde, disc < 0)


@dataclass(frozen=True)
class Heteroclinic:
    params: HeteroclinicParams
    t: np.ndarray = field(repr=False)
    a: np.ndarray = field(repr=False)
    da: np.ndarray = field(repr=False)
    launch_amplitude: float = 0.0
    shift: float = 0.0
    oscillating: bool = False
    max_residual: float = 0.0

    @property
    def L(self) -> float:
        return float(self.t[-1])

    def __call__(self, t, derivative: int = 0):
        """a(t) (or a'(t)) by Hermite interpolation; extended by the tails outside [-L, L]."""
        t = np.asarray(t, dtype=float)
        spline = CubicHermiteSpline(self.t, self.a, self.da)
        out = spline(np.clip(t, self.t[0], self.t[-1]), derivative)
        left = t < self.t[0]
        if np.any(left):
            dm = self.params.delta_minus
            base = self.a[0] * np.exp(dm * (t[left] - self.t[0]))
            out[left] = base * dm**derivative
        right = t > self.t[-1]
        if np.any(right):
            out[right] = self.a[-1] if derivative == 0 else 0.0
        return out


def default_half_length(params: HeteroclinicParams) -> float:
    """L with e^{-δ⁻ L} < 1e-8 and e^{Re δ̃⁺ L} < 1e-6."""
    left = 8.0 * math.log(10.0) / params.delta_minus
    right = 6.0 * math.log(10.0) / abs(params.right_rate)
    return max(left, right)


def _rhs(params):
    A, eps, mu, p = params.A, params.eps, params.mu, params.p

    def f(t, y):
        a, da = y
        return [da, -A * da + eps * a - mu * abs(a) ** (p - 1) * a]

    return f


class _Orbit:
    """Two integration segments glued at a = 1e-2 a_∞.

    The growth phase needs an absolute tolerance scaled to the launch
    amplitude; near a_∞ that tolerance would chase roundoff in a', so the
    second segment uses the fixed absolute tolerance.
    """

    def __init__(self, first, second):
        self.first, self.second = first, second
        self.t_switch = float(first.t[-1])
        self.t_end = float(second.t[-1]) if second is not None else self.t_switch

    def sol(self, t):
        t = np.asarray(t, dtype=float)
        if self.second is None:
            return self.first.sol(t)
        out = np.empty((2,) + t.shape)
        lo = t <= self.t_switch
        if np.any(lo):
            out[:, lo] = self.first.sol(t[lo])
        if not np.all(lo):
            out[:, ~lo] = self.second.sol(t[~lo])
        return out

    def crossing(self, level):
        for seg in (self.first, self.second):
            if seg is None:
                continue
            above = np.nonzero(seg.y[0] >= level)[0]
            if above.size and above[0] > 0:
                k = above[0]
                return brentq(lambda s: seg.sol(s)[0] - level, seg.t[k - 1], seg.t[k], xtol=1e-14, rtol=1e-15)
        raise SolverFailure("orbit did not reach the level", {"level": level})


def _integrate(f, eta, dm, a_inf, span):
    def switch(t, y):
        return y[0] - 1e-2 * a_inf

    switch.terminal = True
    switch.direction = 1
    first = solve_ivp(f, (0.0, span), [eta, dm * eta], method="DOP853", rtol=RTOL,
                      atol=ATOL * eta / a_inf, dense_output=True, events=switch)
    if first.status < 0:
        raise SolverFailure("heteroclinic integration failed", {"message": first.message})
    if first.status != 1:
        return _Orbit(first, None)
    second = solve_ivp(f, (first.t[-1], span), first.y[:, -1], method="DOP853", rtol=RTOL,
                       atol=ATOL, dense_output=True)
    if second.status < 0:
        raise SolverFailure("heteroclinic integration failed", {"message": second.message})
    return _Orbit(first, second)


def solve_heteroclinic(params: HeteroclinicParams, L: float | None = None, tol: float = 1e-6,
                       launch: float = 1e-10) -> Heteroclinic:
    """Integrate the unstable manifold of 0 and normalize so that a(0) = a_∞/2.

    ``launch`` is the initial amplitude relative to a_∞; ``tol`` bounds the
    pointwise ODE residual of the returned samples.
    """
    if not (params.A > 0 and params.eps > 0):
        raise DomainError(f"heteroclinic needs A > 0 and ε > 0 (A={params.A}, ε={params.eps})")
    if launch > 1e-6:
        raise DomainError("launch amplitude must not exceed 1e-6 a_∞")
    L = default_half_length(params) if L is None else float(L)
    a_inf, dm = params.a_inf, params.delta_minus
    f = _rhs(params)

    eta = launch * a_inf
    for _ in range(8):
        # time for the linear manifold to grow from eta to a_∞/2, plus slack
        t_grow = math.log(0.5 * a_inf / eta) / dm
        span = t_grow + 20.0 / dm + L
        sol = _integrate(f, eta, dm, a_inf, span)
        t_half = sol.crossing(0.5 * a_inf)
        if t_half >= L and t_half + L <= sol.t_end:
            break
        eta *= math.exp(-dm * (L - t_half + 5.0))
    else:
        raise SolverFailure("could not place the launch point left of -L", {"L": L})

    if t_half + L > sol.t_end:
        raise SolverFailure("orbit too short to cover [-L, L]", {"L": L})
    nodes = max(2001, int(8 * L) + 1)
    t = np.linspace(-L, L, nodes)
    yy = sol.sol(t + t_half)
    a, da = yy[0], yy[1]
    if a[0] >= 1e-3 * a_inf or abs(a[-1] - a_inf) >= 1e-3 * a_inf:
        raise SolverFailure("orbit does not reach the end states within [-L, L]; increase L",
                            {"a_left": a[0], "a_right": a[-1], "a_inf": a_inf})
    # pointwise residual with a'' from a centered difference of the dense a'
    h = 1e-4
    dda_fd = (sol.sol(t + t_half + h)[1] - sol.sol(t + t_half - h)[1]) / (2 * h)
    res = float(np.max(np.abs(params.ode_residual(a, da, dda_fd))))
    if res > tol:
        raise SolverFailure("ODE residual above tolerance", {"residual": res, "tol": tol})
    osc = bool(np.any(np.diff(a) < 0))
    return Heteroclinic(params, t, a, da, eta / a_inf, float(t_half), osc or params.focus, res)


def _fit_slope(x, y):
    return float(np.polyfit(x, y, 1)[0])


@dataclass(frozen=True)
class TailReport:
    left_slope: float
    right_slope: float
    sandwich_ok: bool
    left_window: tuple[float, float]
    right_window: tuple[float, float]
    t_tilde: float


def verify_tail_rates(h: Heteroclinic, window: float | None = None) -> TailReport:
    """Regression slopes of log a (left tail) and log(a_∞ - a) (right tail).

    The left window is where a/a_∞ < 1e-3; ``t_tilde`` is its right end and the
    sandwich  ½ e^{δ⁻ t} <= a/a_∞ <= e^{δ⁻ t}  is checked on t <= -|t_tilde|.
    """
    P = h.params
    t, a = h.t, h.a
    rel = a / P.a_inf
    left_mask = rel < 1e-3
    gap = 1.0 - rel
    right_mask = (gap < 1e-3) & (gap > 1e-9)
    if left_mask.sum() < 20 or right_mask.sum() < 20:
        raise SolverFailure("tail windows too short for a slope fit",
                            {"left_points": int(left_mask.sum()), "right_points": int(right_mask.sum())})
    tl = t[left_mask]
    tr = t[right_mask]
    left_slope = _fit_slope(tl, np.log(a[left_mask]))
    right_slope = _fit_slope(tr, np.log(gap[right_mask]))
    t_tilde = float(tl[-1])
    sand = t <= min(t_tilde, 0.0)
    ratio = rel[sand] / np.exp(P.delta_minus * t[sand])
    sandwich_ok = bool(np.all(ratio >= 0.5) and np.all(ratio <= 1.0 + 1e-9))
    return TailReport(left_slope, right_slope, sandwich_ok, (float(tl[0]), float(tl[-1])),
                      (float(tr[0]), float(tr[-1])), t_tilde)
