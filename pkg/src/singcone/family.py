"""τ-dependent families of caps and curves, derivative bounds, wedge residual and barriers.

A family is a smooth cap half-angle β(τ) (possibly calibrated from a target
λ(τ)) and a curve σ(τ) in ℝⁿ.  The wedge approximation is

    u_ε(x, τ) = η(|x - σ(τ)|) ε^{-α} u₁((x - σ(τ))/ε; τ),

with η a quintic smoothstep cutoff equal to 1 on [0, 1/2] and 0 beyond 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .cap_spectrum import CapSpec, SpectralData, exponents, moment, solve_cap_eigen
from .errors import DomainError, SolverFailure
from .grid import GridSpec, sphere_measure
from .heteroclinic import Heteroclinic, HeteroclinicParams, ode_params, solve_heteroclinic
from .solution import SingularSolution, assemble_u1
from .strip import StripGrid, default_grid, fixed_point_psi, shifted_cap_solve


@dataclass(frozen=True)
class EdgeFamilySpec:
    n: int
    beta_fn: Callable[[float], float]
    sigma_fn: Callable[[float], np.ndarray]
    p: float
    eps_scale: float = 1.0
    tau_window: tuple[float, float] = (0.0, 2.0 * math.pi)
    delta: float | None = None
    rho: float | None = None
    period: float = 2.0 * math.pi
    label: str = "custom"
    lam_fn: Callable[[float], float] | None = None

    def __post_init__(self):
        if self.n < 2:
            raise DomainError("n must be at least 2")
        if not self.p > 1:
            raise DomainError("p must exceed 1")
        if not self.eps_scale > 0:
            raise DomainError("eps_scale must be positive")
        if not self.tau_window[0] < self.tau_window[1]:
            raise DomainError("empty τ window")

    @property
    def alpha(self) -> float:
        return 2.0 / (self.p - 1.0)

    @property
    def weight_delta(self) -> float:
        return -self.alpha if self.delta is None else float(self.delta)

    @property
    def weight_rho(self) -> float:
        return -self.alpha if self.rho is None else float(self.rho)

    def tau_step(self) -> float:
        """Spacing of the τ stencils: the oscillation period / 64."""
        return self.period / 64.0

    def sigma(self, tau):
        return np.asarray(self.sigma_fn(float(tau)), dtype=float)

    def sigma_derivs(self, tau, h: float = 1e-4):
        s_p, s_0, s_m = self.sigma(tau + h), self.sigma(tau), self.sigma(tau - h)
        return s_0, (s_p - s_m) / (2 * h), (s_p - 2 * s_0 + s_m) / h**2

    def curve_bound(self, taus) -> float:
        """sup over the sampled τ of |σ| + |σ'| + |σ''|."""
        vals = [sum(np.linalg.norm(v) for v in self.sigma_derivs(t)) for t in taus]
        return float(max(vals))


def helix(n: int, amplitude: float):
    """σ(τ) = (b/3)(cos τ, sin τ, 0, ...), so |σ| + |σ'| + |σ''| = b."""

    def sigma(tau):
        out = np.zeros(n)
        out[0] = amplitude / 3.0 * math.cos(tau)
        if n > 1:
            out[1] = amplitude / 3.0 * math.sin(tau)
        return out

    return sigma


def lambda_of_beta(n: int, beta: float, nodes: int = 2049) -> SpectralData:
    return solve_cap_eigen(CapSpec(n, beta, "symmetry"), GridSpec(nodes))


def calibrate_beta(n: int, lam_target: float, beta_guess: float, tol: float = 1e-12,
                   nodes: int = 2049) -> tuple[float, SpectralData]:
    """β with λ(β) = target by Newton on the Hadamard derivative dλ/dβ = -C(n) sin^{n-2}β φ₁'(β)²."""
    beta = beta_guess
    limit = 2 * math.pi if n == 2 else math.pi
    for _ in range(30):
        spec = lambda_of_beta(n, beta, nodes)
        diff = spec.lam - lam_target
        if abs(diff) < tol * lam_target:
            return beta, spec
        w = math.sin(beta) ** (n - 2) if n > 2 else 1.0
        slope = -sphere_measure(n) * w * spec.dphi1[-1] ** 2
        step = -diff / slope
        beta = min(max(beta + step, 0.5 * beta), 0.5 * (beta + limit))
    raise SolverFailure("β calibration did not converge", {"target": lam_target, "beta": beta})


def constant_family(n: int, beta: float, p: float, eps: float = 1.0, curve: float = 0.0,
                    tau_window=(0.0, 0.5)) -> EdgeFamilySpec:
    return EdgeFamilySpec(n, lambda tau: beta, helix(n, curve), p, eps, tuple(tau_window), label="constant")


def sinusoidal_lambda_family(n: int, lam0: float, amplitude: float, p: float, eps: float = 1.0,
                             curve: float = 0.0, tau_window=(4.4, 5.0), beta_guess: float | None = None,
                             ) -> EdgeFamilySpec:
    """λ(τ) = λ0 + amplitude·sin τ, realized by calibrating β(τ) on each τ node."""
    cache: dict[float, float] = {}
    guess = [beta_guess or (math.pi / 2 if n > 2 else math.pi / (2 * math.sqrt(lam0)))]

    def beta_fn(tau):
        key = round(float(tau), 14)
        if key not in cache:
            beta, _ = calibrate_beta(n, lam0 + amplitude * math.sin(tau), guess[0])
            cache[key] = beta
            guess[0] = beta
        return cache[key]

    return EdgeFamilySpec(n, beta_fn, helix(n, curve), p, eps, tuple(tau_window), label="sin-lambda",
                          lam_fn=lambda tau: lam0 + amplitude * math.sin(tau))


@dataclass
class FamilyData:
    spec: EdgeFamilySpec
    tau: np.ndarray
    beta: np.ndarray
    spectra: list
    params: list
    hets: list
    solutions: list | None
    strip_grid: StripGrid | None
    lam: np.ndarray = field(init=False)
    gamma: np.ndarray = field(init=False)
    p_star: np.ndarray = field(init=False)

    def __post_init__(self):
        self.lam = np.array([s.lam for s in self.spectra])
        self.gamma = np.array([s.gamma for s in self.spectra])
        self.p_star = np.array([s.p_star for s in self.spectra])

    @property
    def lam_star(self) -> float:
        return float(self.lam.min())

    @property
    def gamma_star(self) -> float:
        return float(self.gamma.min())

    @property
    def p_star_sup(self) -> float:
        return float(self.p_star.max())

    @property
    def h(self) -> float:
        return float(self.tau[1] - self.tau[0])

    def lemma21_constant(self, stride: int = 1, nodes: int = 257) -> float:
        """sup_τ of sup_s |φ₁| + |∂_τ φ₁| + |∂²_τ φ₁| at matched s = θ/β(τ)."""
        s = np.linspace(0.0, 1.0, nodes)
        F = np.array([sp.phi1_at(s * b) for sp, b in zip(self.spectra, self.beta)])
        F[:, -1] = 0.0
        d1, d2, mid = _tau_fd(F, self.h, stride)
        return float(np.max(np.abs(F[mid]) + np.abs(d1) + np.abs(d2)))


def _tau_fd(values, h, stride, margin: int = 2):
    """Centered first/second τ differences with spacing stride·h.

    Evaluated on the nodes [margin, N - margin), so strides up to ``margin``
    are compared on the same τ set.
    """
    k, N = stride, values.shape[0]
    m = max(margin, k)
    if N < 2 * m + 1:
        raise DomainError("τ grid too short for the requested stencil")
    mid = slice(m, N - m)
    up, dn = values[m + k: N - m + k], values[m - k: N - m - k]
    d1 = (up - dn) / (2 * k * h)
    d2 = (up - 2 * values[mid] + dn) / (k * h) ** 2
    return d1, d2, mid


def tau_nodes(spec: EdgeFamilySpec, refine: int = 1) -> np.ndarray:
    """Uniform τ nodes on the window with spacing period / (64·refine)."""
    h = spec.tau_step() / refine
    t0, t1 = spec.tau_window
    m = max(4, int(math.ceil((t1 - t0) / h)))
    return t0 + h * np.arange(m + 1)


def build_family(spec: EdgeFamilySpec, tau: np.ndarray | None = None, with_solutions: bool = False,
                 ns: int = 65, nt: int | None = None, p0: float | None = None) -> FamilyData:
    """Per-τ spectra and heteroclinics (and correctors/u₁ when ``with_solutions``)."""
    tau = tau_nodes(spec) if tau is None else np.asarray(tau, dtype=float)
    betas, spectra, params, hets, failures = [], [], [], [], []
    for t in tau:
        try:
            b = float(spec.beta_fn(t))
            sd = lambda_of_beta(spec.n, b)
            if not spec.p > sd.p_star:
                raise DomainError(f"p={spec.p} not above p*(τ={t:.4g})={sd.p_star:.8g}")
            P = ode_params(spec.n, sd.lam, spec.p, moment(sd, spec.p + 1.0))
            betas.append(b)
            spectra.append(sd)
            params.append(P)
        except (DomainError, SolverFailure) as exc:
            failures.append({"tau": float(t), "error": str(exc)})
    if failures:
        raise SolverFailure("per-τ solves failed", {"failures": failures})
    L = max(_default_L(P) for P in params)
    for P in params:
        hets.append(solve_heteroclinic(P, L=L))
    fd = FamilyData(spec, tau, np.array(betas), spectra, params, hets, None, None)
    if fd.lam_star <= 0:
        raise DomainError("inf λ(τ) must be positive")
    if with_solutions:
        T = max(default_grid(h, b).T for h, b in zip(hets, betas))
        nt_ = nt or max(257, int(8 * T) + 1)
        sols = []
        for sd, h in zip(spectra, hets):
            grid = StripGrid(T, nt_, ns, sd.beta)
            psi = fixed_point_psi(sd, h, grid, p0=p0)
            sols.append(assemble_u1(sd, h, psi, spec.p))
        fd.solutions = sols
        fd.strip_grid = StripGrid(T, nt_, ns, float(np.max(betas)))
    return fd


def _default_L(P: HeteroclinicParams) -> float:
    from .heteroclinic import default_half_length

    return default_half_length(P)


@dataclass(frozen=True)
class TauBoundsReport:
    left_ratio: float
    right_ratio: float | None
    middle: float
    left_ratio2: float
    right_ratio2: float | None
    middle2: float
    window: tuple[float, float]
    notice: str = ""


def heteroclinic_tau_bounds(fd: FamilyData, stride: int = 1, nodes: int = 4001) -> TauBoundsReport:
    """Finite-difference ∂_τ, ∂²_τ of a(τ, t) normalized by the tail rates e^{δ⁻t}, e^{Re δ̃⁺ t}.

    Tails use w = a/a_∞ (the limit a_∞ itself moves with τ); the middle reports |∂_τ a|.
    """
    L = min(h.L for h in fd.hets)
    t = np.linspace(-L, L, nodes)
    A = np.array([h(t) for h in fd.hets])
    ainf = np.array([P.a_inf for P in fd.params])
    W = A / ainf[:, None]
    d1w, d2w, mid = _tau_fd(W, fd.h, stride)
    d1a, d2a, _ = _tau_fd(A, fd.h, stride)
    t_left = min(float(t[np.nonzero(w >= 1e-3)[0][0]]) for w in W)
    right_idx = [np.nonzero(1 - w > 1e-3)[0] for w in W]
    t_right = max(float(t[i[-1]]) for i in right_idx)
    dm = np.array([P.delta_minus for P in fd.params])[mid][:, None]
    left = (t <= t_left) & (t < 0)
    tl = np.abs(t[left])
    left_ratio = float(np.max(np.abs(d1w[:, left]) / (tl * np.exp(dm * t[left]))))
    left_ratio2 = float(np.max(np.abs(d2w[:, left]) / (tl**2 * np.exp(dm * t[left]))))
    middle_mask = (t > t_left) & (t < t_right)
    middle = float(np.max(np.abs(d1a[:, middle_mask])))
    middle2 = float(np.max(np.abs(d2a[:, middle_mask])))
    notice = ""
    if any(P.focus for P in fd.params):
        right_ratio = right_ratio2 = None
        notice = "focus regime (complex rates at a_∞): right-tail check skipped"
    else:
        dp = np.array([P.right_rate for P in fd.params])[mid][:, None]
        right = (t >= t_right) & (t > 0)
        tr = t[right]
        gap = 1.0 - W[mid][:, right]
        # below ~1e-7 the gap is at the level of the integrator error
        keep = np.all(gap > 1e-7, axis=0)
        tr, sel = tr[keep], np.nonzero(right)[0][keep]
        if tr.size:
            env = tr * np.exp(dp * tr)
            right_ratio = float(np.max(np.abs(d1w[:, sel]) / env))
            right_ratio2 = float(np.max(np.abs(d2w[:, sel]) / (tr * env)))
        else:
            right_ratio = right_ratio2 = 0.0
    return TauBoundsReport(left_ratio, right_ratio, middle, left_ratio2, right_ratio2, middle2,
                           (t_left, t_right), notice)


def _require_solutions(fd: FamilyData):
    if fd.solutions is None:
        raise DomainError("family was built without correctors; pass with_solutions=True")


def u1_samples(fd: FamilyData, radii=None, angles: int = 7):
    _require_solutions(fd)
    if radii is None:
        radii = 10.0 ** np.arange(-3.0, 3.5, 0.5)
    beta_min = float(fd.beta.min())
    th = np.linspace(0.05 * beta_min, 0.9 * beta_min, angles)
    R, TH = np.meshgrid(np.asarray(radii, dtype=float), th, indexing="ij")
    return R, TH


@dataclass(frozen=True)
class U1BoundsReport:
    first: float
    second: float
    per_radius_first: tuple
    per_radius_second: tuple
    radii: tuple


def u1_tau_bounds(fd: FamilyData, stride: int = 1, radii=None) -> U1BoundsReport:
    """sup |x|^α |∂_τ u₁| and sup |x|^α |∂²_τ u₁| at fixed (r, θ) samples."""
    R, TH = u1_samples(fd, radii)
    a = 2.0 / (fd.spec.p - 1.0)
    U = np.array([R**a * u.evaluate(R, TH) for u in fd.solutions])
    d1, d2, _ = _tau_fd(U, fd.h, stride)
    per1 = np.max(np.abs(d1), axis=(0, 2))
    per2 = np.max(np.abs(d2), axis=(0, 2))
    return U1BoundsReport(float(per1.max()), float(per2.max()), tuple(map(float, per1)),
                          tuple(map(float, per2)), tuple(map(float, R[:, 0])))


def weighted_norm(f, r_sigma, x_norm, delta: float, rho: float) -> float:
    """sup( χ_{r_σ<=1} r_σ^{-δ} |f| + χ_{r_σ>1} |x|^{-ρ} |f| ) over the samples."""
    f = np.abs(np.asarray(f, dtype=float))
    r_sigma = np.asarray(r_sigma, dtype=float)
    x_norm = np.asarray(x_norm, dtype=float)
    if f.size == 0:
        return 0.0
    near = r_sigma <= 1.0
    vals = np.where(near, r_sigma ** (-delta) * f, x_norm ** (-rho) * f)
    vals = np.where(f == 0, 0.0, vals)
    return float(np.max(vals))


def cutoff(r):
    """Quintic smoothstep: 1 on [0, 1/2], 0 on [1, ∞); returns (η, η', η'')."""
    r = np.asarray(r, dtype=float)
    s = np.clip(2.0 * r - 1.0, 0.0, 1.0)
    S = s**3 * (10 - 15 * s + 6 * s * s)
    S1 = 30 * s * s * (1 - s) ** 2
    S2 = 60 * s * (1 - s) * (1 - 2 * s)
    inside = (r > 0.5) & (r < 1.0)
    return 1.0 - S, np.where(inside, -2.0 * S1, 0.0), np.where(inside, -4.0 * S2, 0.0)


def _cone_field(u: SingularSolution, eps: float, y: np.ndarray, use_cutoff: bool = True):
    """F(y) = η(|y|) |y|^{-α} φ(log ε - log|y|, θ), with Cartesian gradient and Hessian.

    Returns (F, grad, hess_quadratic(v), laplacian, basis) at points y (shape (m, n)).
    """
    n = y.shape[1]
    rho = np.linalg.norm(y, axis=1)
    z = y[:, -1]
    th = np.arccos(np.clip(z / rho, -1.0, 1.0))
    a = u.alpha
    t = math.log(eps) - np.log(rho)
    D = u.derivatives(t, th)
    Phi, Pr, Prr = D["phi"], -D["t"] / rho, (D["tt"] + D["t"]) / rho**2
    Pth, Pthth, Prth = D["th"], D["thth"], -D["tth"] / rho
    if use_cutoff:
        eta, eta1, eta2 = cutoff(rho)
    else:
        eta, eta1, eta2 = np.ones_like(rho), np.zeros_like(rho), np.zeros_like(rho)
    Rf = eta * rho**-a
    R1 = eta1 * rho**-a - a * eta * rho ** (-a - 1)
    R2 = eta2 * rho**-a - 2 * a * eta1 * rho ** (-a - 1) + a * (a + 1) * eta * rho ** (-a - 2)
    G = Rf * Phi
    Gr = R1 * Phi + Rf * Pr
    Grr = R2 * Phi + 2 * R1 * Pr + Rf * Prr
    Gth = Rf * Pth
    Grth = R1 * Pth + Rf * Prth
    Gthth = Rf * Pthth
    cot = np.cos(th) / np.sin(th)
    H_rr = Grr
    H_rt = Grth / rho - Gth / rho**2
    H_tt = Gthth / rho**2 + Gr / rho
    H_pp = Gr / rho + cot * Gth / rho**2
    lap = H_rr + H_tt + (n - 2) * H_pp
    e_r = y / rho[:, None]
    perp = y.copy()
    perp[:, -1] = 0.0
    pn = np.linalg.norm(perp, axis=1)
    perp = perp / pn[:, None]
    e_n = np.zeros(n)
    e_n[-1] = 1.0
    e_t = np.cos(th)[:, None] * perp - np.sin(th)[:, None] * e_n[None, :]
    grad = Gr[:, None] * e_r + (Gth / rho)[:, None] * e_t

    def quad(v):
        v = np.broadcast_to(v, y.shape)
        vr = np.sum(v * e_r, axis=1)
        vt = np.sum(v * e_t, axis=1)
        rest = np.sum(v * v, axis=1) - vr**2 - vt**2
        return H_rr * vr**2 + 2 * H_rt * vr * vt + H_tt * vt**2 + H_pp * np.maximum(rest, 0.0)

    return G, grad, quad, lap


@dataclass(frozen=True)
class WedgeGrid:
    rho_min: float = 1e-4
    rho_points: int = 41
    angles: int = 9
    angle_range: tuple[float, float] = (0.05, 0.9)
    use_cutoff: bool = True
    rho_max: float = 0.999


@dataclass(frozen=True)
class WedgeReport:
    norm: float
    by_tau: tuple
    max_lap_part: float
    eps: float
    curve_bound: float


def wedge_residual(spec: EdgeFamilySpec, fd: FamilyData, grid: WedgeGrid | None = None,
                   tau_index=None) -> WedgeReport:
    """C_{δ,ρ} norm of f = r_σ² (∂_τ² u_ε + Δ_x u_ε + u_ε^p) at interior τ nodes.

    ∂_τ² u_ε = F_ττ - 2σ'·∇F_τ + σ'ᵀ D²F σ' - σ''·∇F, where F(y, τ) is the
    cone field before translation; τ-derivatives at fixed y are centered
    differences over neighbouring τ nodes, y-derivatives are analytic.
    """
    _require_solutions(fd)
    grid = grid or WedgeGrid()
    if fd.h > spec.period / 16:
        raise DomainError(f"τ spacing {fd.h:.3g} too coarse for the ∂_τ² stencil (need <= period/16)")
    eps = spec.eps_scale
    n, p = spec.n, spec.p
    lo = grid.rho_min
    if lo / eps < math.exp(-fd.strip_grid.T) or grid.rho_max / eps > math.exp(fd.strip_grid.T):
        raise DomainError("sample radii fall outside the corrector window; adjust rho_min or T")
    rho = np.geomspace(lo, grid.rho_max, grid.rho_points)
    bmin = float(fd.beta.min())
    th = np.linspace(grid.angle_range[0] * bmin, grid.angle_range[1] * bmin, grid.angles)
    RR, TT = np.meshgrid(rho, th, indexing="ij")
    RR, TT = RR.ravel(), TT.ravel()
    y = np.zeros((RR.size, n))
    y[:, 0] = RR * np.sin(TT)
    y[:, -1] = RR * np.cos(TT)
    idx = range(1, len(fd.tau) - 1) if tau_index is None else [tau_index]
    by_tau, lap_part = [], 0.0
    for k in idx:
        h = fd.h
        fields = [_cone_field(fd.solutions[j], eps, y, grid.use_cutoff) for j in (k - 1, k, k + 1)]
        Fm, F0, Fp = (f[0] for f in fields)
        Gm, G0, Gp = (f[1] for f in fields)
        F_tt = (Fp - 2 * F0 + Fm) / h**2
        gradF_t = (Gp - Gm) / (2 * h)
        _, s1, s2 = spec.sigma_derivs(fd.tau[k])
        quad, lap = fields[1][2], fields[1][3]
        dtt = F_tt - 2 * gradF_t @ s1 + quad(s1) - G0 @ s2
        f = RR**2 * (dtt + lap + np.abs(F0) ** p)
        lap_part = max(lap_part, float(np.max(np.abs(RR**2 * (lap + np.abs(F0) ** p)) * RR ** (-spec.weight_delta))))
        s0 = spec.sigma(fd.tau[k])
        xn = np.linalg.norm(y + s0[None, :], axis=1)
        by_tau.append(weighted_norm(f, RR, xn, spec.weight_delta, spec.weight_rho))
    return WedgeReport(float(max(by_tau)), tuple(by_tau), lap_part, eps, spec.curve_bound(fd.tau))


def barrier_profile(n: int, beta: float, delta: float, nodes: int = 4097):
    """φ_δ on the cap: Δ_S φ + δ(δ+n-2) φ = -1, φ(β) = 0."""
    from scipy.interpolate import CubicSpline

    theta, phi, res = shifted_cap_solve(n, beta, delta * (delta + n - 2.0), nodes)
    if np.any(phi[:-1] <= 0):
        raise SolverFailure("barrier profile is not positive", {"delta": delta})
    return CubicSpline(theta, phi), res


def _barrier_value(spline, delta, y):
    r = np.linalg.norm(y, axis=-1)
    th = np.arccos(np.clip(y[..., -1] / r, -1.0, 1.0))
    return r**delta * spline(th)


@dataclass(frozen=True)
class BarrierReport:
    identity_error: float
    identity_error_half: float
    identity_order: float
    margin: float
    relative_margin: float
    threshold: float
    curve_bound: float
    beta_star: float
    solve_residual: float


def barrier_checks(spec: EdgeFamilySpec, delta: float, fd: FamilyData | None = None,
                   step: float = 2.5e-3, nodes: int = 4097, taus=None, seed: int = 0) -> BarrierReport:
    """(a) FD check of -Δ(|x|^δ φ_δ) = |x|^{δ-2}; (b) margin of the starred inequality.

    (b) samples W(τ, x) = r_σ^δ φ_δ*(θ_σ) on the envelope cap β* = sup β(τ) and
    evaluates  -Δ_{(τ,x)} W - ½(r_σ^{δ-2} - r_σ^{δ-1})  with ∂_τ² by differences.
    """
    n = spec.n
    taus = tau_nodes(spec) if taus is None else np.asarray(taus, dtype=float)
    if fd is not None:
        betas, gammas = fd.beta, fd.gamma
    else:
        betas = np.array([spec.beta_fn(t) for t in taus])
        gammas = np.array([exponents(n, lambda_of_beta(n, b).lam)[0] for b in betas])
    gamma_star = float(np.min(gammas))
    if not (-n - gamma_star + 2.0 < delta <= 0.0):
        raise DomainError(f"δ={delta} outside (-n-γ*+2, 0] = ({-n - gamma_star + 2:.6g}, 0]")
    beta_star = float(np.max(betas))
    spline, solve_res = barrier_profile(n, beta_star, delta, nodes)

    rng = np.random.default_rng(seed)
    m = 64
    r = np.exp(rng.uniform(math.log(0.5), math.log(2.0), m))
    th = rng.uniform(0.1 * beta_star, 0.8 * beta_star, m)
    pts = np.zeros((m, n))
    pts[:, 0] = r * np.sin(th)
    pts[:, -1] = r * np.cos(th)
    if n > 2:
        az = rng.uniform(0, 2 * math.pi, m)
        pts[:, 1] = pts[:, 0] * np.sin(az)
        pts[:, 0] = pts[:, 0] * np.cos(az)

    def fd_error(hs):
        lap = -2 * n * _barrier_value(spline, delta, pts)
        for i in range(n):
            e = np.zeros(n)
            e[i] = hs
            lap = lap + _barrier_value(spline, delta, pts + e) + _barrier_value(spline, delta, pts - e)
        lap = lap / hs**2
        target = r ** (delta - 2.0)
        return float(np.max(np.abs(-lap - target) / target))

    e1, e2 = fd_error(step), fd_error(step / 2)
    order = math.log2(e1 / e2) if e2 > 0 else math.inf

    # starred inequality on a (τ, r, θ) grid
    rs = np.geomspace(1e-3, 10.0, 25)
    ths = np.linspace(0.05 * beta_star, 0.9 * beta_star, 9)
    R, TH = np.meshgrid(rs, ths, indexing="ij")
    R, TH = R.ravel(), TH.ravel()
    Y = np.zeros((R.size, n))
    Y[:, 0] = R * np.sin(TH)
    Y[:, -1] = R * np.cos(TH)
    ht = 1e-2
    margin, rel = math.inf, math.inf
    for tau in taus:
        x = Y + spec.sigma(tau)[None, :]
        w = [_barrier_value(spline, delta, x - spec.sigma(tau + k * ht)[None, :]) for k in (-1, 0, 1)]
        w_tt = (w[2] - 2 * w[1] + w[0]) / ht**2
        lap_x = -R ** (delta - 2.0)
        lhs = -(w_tt + lap_x)
        rhs = 0.5 * (R ** (delta - 2.0) - R ** (delta - 1.0))
        margin = min(margin, float(np.min(lhs - rhs)))
        rel = min(rel, float(np.min((lhs - rhs) / R ** (delta - 2.0))))

    th_grid = np.linspace(0.0, beta_star, 2001)
    ph, d1, d2 = spline(th_grid), spline(th_grid, 1), spline(th_grid, 2)
    C1 = float(np.max(np.sqrt(delta**2 * ph**2 + d1**2)))
    safe = np.where(th_grid > 0, th_grid, 1.0)
    cot = np.where(th_grid > 0, np.cos(safe) / np.sin(safe), 0.0)
    C2 = float(np.max(np.abs(delta * (delta - 1) * ph) + 2 * np.abs((delta - 1) * d1) + np.abs(d2 + delta * ph)
                      + np.abs(delta * ph + cot * d1)))
    threshold = min(1.0 / (2.0 * C1), 1.0 / math.sqrt(2.0 * C2))
    return BarrierReport(e1, e2, order, margin, rel, threshold, spec.curve_bound(taus), beta_star, solve_res)
