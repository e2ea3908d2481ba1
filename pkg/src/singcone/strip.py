"""Corrector ψ on the log-cylinder [-T, T] x cap.

In t = -log r the cone equation for u = r^{-α} φ(t, θ) reads

    (∂_t² + A ∂_t - ε) φ + (Δ_S + λ) φ + |φ|^p = 0.

With φ₀ = a(t) φ₁(θ) the residual is M(φ₀) = a^p (φ₁^p - μ φ₁), and the
corrector solves  L_p ψ = -(M(φ₀) + Q(ψ)),  L_p the linearization at φ₀.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.linalg import solve_banded
from scipy.sparse.linalg import LinearOperator, onenormest, splu

from .cap_spectrum import SpectralData
from .errors import DomainError, SolverFailure
from .grid import cap_stencil
from .heteroclinic import Heteroclinic

COND_LIMIT = 1e15


@dataclass(frozen=True)
class StripGrid:
    T: float
    nt: int
    ns: int
    beta: float

    def __post_init__(self):
        if self.nt < 32 or self.ns < 32:
            raise DomainError(f"strip grid needs at least 32 nodes per direction (nt={self.nt}, ns={self.ns})")
        if not self.T > 0:
            raise DomainError("T must be positive")

    @property
    def t(self) -> np.ndarray:
        return np.linspace(-self.T, self.T, self.nt)

    @property
    def s(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.ns)

    @property
    def theta(self) -> np.ndarray:
        return self.beta * self.s

    @property
    def dt(self) -> float:
        return 2.0 * self.T / (self.nt - 1)

    @property
    def ds(self) -> float:
        return 1.0 / (self.ns - 1)

    def refined(self) -> "StripGrid":
        return StripGrid(self.T, 2 * (self.nt - 1) + 1, 2 * (self.ns - 1) + 1, self.beta)

    def extended(self, factor: float) -> "StripGrid":
        """Same spacing on a window longer by ``factor``; old nodes stay nodes."""
        m = int(round((self.nt - 1) * (factor - 1.0) / 2.0))
        return StripGrid(self.T + m * self.dt, self.nt + 2 * m, self.ns, self.beta)


def default_grid(het: Heteroclinic, beta: float, nt: int | None = None, ns: int = 65) -> StripGrid:
    """T large enough for both exponential tails; dt about 1/8 of the slowest decay length."""
    P = het.params
    T = max(10.0 / P.delta_minus, math.log(1e6) / abs(P.right_rate))
    if nt is None:
        nt = max(257, int(2 * T * 4) + 1)
    return StripGrid(T, nt, ns, beta)


@dataclass(frozen=True)
class StripField:
    grid: StripGrid
    values: np.ndarray = field(repr=False)
    norms: dict = field(default_factory=dict)
    info: dict = field(default_factory=dict)

    def row(self, k: int) -> np.ndarray:
        return self.values[k]

    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))


def _samples(spec: SpectralData, het: Heteroclinic, grid: StripGrid):
    if abs(grid.beta - spec.beta) > 1e-12 * max(1.0, spec.beta):
        raise DomainError("strip grid and spectral data describe different caps")
    a = het(grid.t)
    phi1 = spec.phi1_at(grid.theta)
    phi1[-1] = 0.0
    return a, np.maximum(phi1, 0.0)


def _d1_d2(nt: int, dt: float):
    """Centered first and second t-differences on all nodes; the last row uses ∂_t ψ = 0."""
    one = np.ones(nt)
    d2 = sp.diags([one[1:], -2.0 * one, one[1:]], [-1, 0, 1], format="lil") / dt**2
    d1 = sp.diags([-one[1:], one[1:]], [-1, 1], format="lil") / (2.0 * dt)
    d2[nt - 1, nt - 2] = 2.0 / dt**2
    d1[nt - 1, nt - 2] = 0.0
    return d1.tocsr(), d2.tocsr()


@dataclass
class StripOperator:
    """Discrete L_p on the strip; unknowns exclude t = -T and the rim."""

    spec: SpectralData
    het: Heteroclinic
    grid: StripGrid
    p0: float
    a: np.ndarray
    phi1: np.ndarray
    potential: np.ndarray
    matrix: sp.csr_matrix
    volumes: np.ndarray
    _lu: object = None
    _cond: float | None = None
    _mode: tuple | None = None

    @property
    def shape(self):
        return (self.grid.nt, self.grid.ns)

    def _restrict(self, values):
        return np.asarray(values, dtype=float)[1:, :-1].ravel()

    def _extend(self, vec):
        out = np.zeros(self.shape)
        out[1:, :-1] = vec.reshape(self.grid.nt - 1, self.grid.ns - 1)
        return out

    def apply(self, values) -> np.ndarray:
        """L_p ψ at the unknown nodes of a field with zero boundary data."""
        return self._extend(self.matrix @ self._restrict(values))

    def factor(self):
        if self._lu is None:
            try:
                self._lu = splu(self.matrix.tocsc())
            except RuntimeError as exc:
                raise SolverFailure("strip operator is singular; ε may be too large",
                                    {"condition_estimate": math.inf, "reason": str(exc)}) from exc
            cond = self.condition_estimate()
            if not np.isfinite(cond) or cond > COND_LIMIT:
                raise SolverFailure("strip operator is numerically singular", {"condition_estimate": cond})
        return self._lu

    def condition_estimate(self) -> float:
        """1-norm condition number estimate (exact norm of L_p, estimated norm of its inverse)."""
        if self._cond is None:
            lu = self._lu if self._lu is not None else splu(self.matrix.tocsc())
            m = self.matrix.shape[0]
            inv = LinearOperator((m, m), matvec=lu.solve, rmatvec=lambda v: lu.solve(v, trans="T"),
                                 dtype=float)
            self._cond = float(onenormest(self.matrix) * onenormest(inv))
        return self._cond

    def solve(self, rhs) -> np.ndarray:
        lu = self.factor()
        b = self._restrict(rhs)
        vec = lu.solve(b)
        # normwise backward error of the direct solve
        res = np.max(np.abs(self.matrix @ vec - b))
        scale = self._norm_inf() * np.max(np.abs(vec)) + np.max(np.abs(b))
        if not np.isfinite(res) or res > 1e-10 * max(scale, np.finfo(float).tiny):
            raise SolverFailure("linear solve did not reach tolerance",
                                {"residual": float(res), "backward_error": float(res / max(scale, 1e-300))})
        return self._extend(vec)

    def _norm_inf(self) -> float:
        return float(abs(self.matrix).sum(axis=1).max())

    def translation_mode(self):
        """(K, window, P₁K) where K solves L_p K = 0 with unit Neumann data φ₁ at t = T.

        Bounded solutions of L_p ψ = g differ by multiples of K (the discrete
        counterpart of the t-translation of the heteroclinic); ``window`` holds the
        left-tail rows used to remove it.
        """
        if self._mode is None:
            g = self.grid
            rhs = np.zeros(self.shape)
            rhs[-1] = -(2.0 / g.dt + self.het.params.A) * self.phi1
            K = self._extend(self.factor().solve(self._restrict(rhs)))
            rel = self.a / self.het.params.a_inf
            window = np.nonzero((rel > 1e-4) & (rel < 1e-2))[0]
            window = window[window > 0]
            if window.size < 3:
                window = np.arange(1, max(4, int(np.argmax(rel > 1e-2))))
            self._mode = (K, window, self.project(K)[window])
        return self._mode

    def project(self, values) -> np.ndarray:
        """Row-wise coefficient of φ₁ in the stencil inner product."""
        w = self.volumes * self.phi1
        return np.asarray(values) @ w / float(w @ self.phi1)

    def green(self, rhs) -> np.ndarray:
        """G_p: the solution whose φ₁ coefficient does not grow like a on the left tail."""
        psi = self.solve(rhs)
        K, window, kp = self.translation_mode()
        wt = 1.0 / self.a[window] ** 2
        c = -float(np.sum(wt * self.project(psi[window]) * kp) / np.sum(wt * kp * kp))
        return psi + c * K

    def weighted_norms(self, psi, g):
        """(‖d^{-1} a^{-p0} ψ‖, ‖a^{-p0} g‖) over interior nodes, d = β - θ."""
        d = self.grid.beta - self.grid.theta
        w = self.a[:, None] ** self.p0
        inner = (slice(1, None), slice(0, -1))
        psi_n = np.max(np.abs(psi[inner]) / (w[inner[0]] * d[None, :-1]))
        g_n = np.max(np.abs(g[inner]) / w[inner[0]])
        return float(psi_n), float(g_n)


def assemble_Lp(spec: SpectralData, het: Heteroclinic, grid: StripGrid, p0: float | None = None) -> StripOperator:
    """Finite-difference L_p = ∂_t² + A ∂_t - ε + Δ_S + λ + p φ₀^{p-1}."""
    P = het.params
    if spec.n != P.n or abs(spec.lam - P.lam) > 1e-9 * spec.lam:
        raise DomainError("heteroclinic parameters do not match the spectral data")
    p = P.p
    p0 = 0.5 * (1.0 + p) if p0 is None else float(p0)
    if not 1.0 < p0 < p:
        raise DomainError("p0 must lie in (1, p)")
    a, phi1 = _samples(spec, het, grid)
    st = cap_stencil(spec.n, grid.beta, grid.ns)
    d1, d2 = _d1_d2(grid.nt, grid.dt)
    rows_t = slice(1, grid.nt)
    Dt = (d2 + P.A * d1)[rows_t, :][:, rows_t]
    Ds = st.matrix
    It = sp.identity(grid.nt - 1, format="csr")
    Is = sp.identity(grid.ns - 1, format="csr")
    potential = -P.eps + spec.lam + p * np.outer(a, phi1) ** (p - 1.0)
    mat = sp.kron(Dt, Is) + sp.kron(It, Ds) + sp.diags(potential[1:, :-1].ravel())
    return StripOperator(spec, het, grid, p0, a, phi1, potential, mat.tocsr(), st.volumes)


def apply_Gp(op: StripOperator, g: StripField | np.ndarray, p0: float | None = None) -> StripField:
    """ψ with L_p ψ = g and zero data at t = -T and on the rim."""
    gv = g.values if isinstance(g, StripField) else np.asarray(g, dtype=float)
    if gv.shape != op.shape:
        raise DomainError(f"field shape {gv.shape} does not match the grid {op.shape}")
    if p0 is not None and p0 != op.p0:
        op = StripOperator(op.spec, op.het, op.grid, float(p0), op.a, op.phi1, op.potential, op.matrix,
                           op.volumes, op._lu, op._cond)
    if not np.any(gv):
        psi = np.zeros(op.shape)
    else:
        psi = op.green(gv)
    psi_n, g_n = op.weighted_norms(psi, gv)
    ratio = psi_n / g_n if g_n > 0 else 0.0
    return StripField(op.grid, psi, {"psi_weighted": psi_n, "g_weighted": g_n, "ratio": ratio})


def discrete_mu(spec: SpectralData, grid: StripGrid, p: float) -> float:
    """μ_h = <φ₁^{p+1}> / <φ₁²> in the stencil inner product, so the discrete M is row-orthogonal."""
    st = cap_stencil(spec.n, grid.beta, grid.ns)
    phi1 = np.maximum(spec.phi1_at(grid.theta), 0.0)
    phi1[-1] = 0.0
    return float(st.inner(phi1**p, phi1) / st.inner(phi1, phi1))


def forcing_M(spec: SpectralData, het: Heteroclinic, grid: StripGrid) -> StripField:
    p = het.params.p
    a, phi1 = _samples(spec, het, grid)
    mu_h = discrete_mu(spec, grid, p)
    vals = np.outer(a**p, phi1**p - mu_h * phi1)
    vals[:, -1] = 0.0
    st = cap_stencil(spec.n, grid.beta, grid.ns)
    orth = np.abs(st.inner(vals, phi1[None, :]))
    return StripField(grid, vals, {}, {"mu_h": mu_h, "row_orthogonality": float(np.max(orth))})


def nonlinearity_Q(psi, phi0, p: float):
    """|φ₀ + ψ|^p - φ₀^p - p φ₀^{p-1} ψ (fields or arrays)."""
    pv = psi.values if isinstance(psi, StripField) else np.asarray(psi, dtype=float)
    f0 = phi0.values if isinstance(phi0, StripField) else np.asarray(phi0, dtype=float)
    q = np.abs(f0 + pv) ** p - np.abs(f0) ** p - p * np.abs(f0) ** (p - 1.0) * pv
    if isinstance(psi, StripField):
        return StripField(psi.grid, q)
    return q


def fixed_point_psi(spec: SpectralData, het: Heteroclinic, grid: StripGrid, p: float | None = None,
                    p0: float | None = None, max_iter: int = 200, tol: float = 1e-10,
                    forcing: str = "M", op: StripOperator | None = None) -> StripField:
    """Picard iteration ψ ← -G_p(M(φ₀) + Q(ψ)) from ψ = 0.

    ``forcing="zero"`` replaces M by 0 (a check that the iteration stays at 0).
    """
    P = het.params
    if p is not None and abs(p - P.p) > 1e-14:
        raise DomainError("p does not match the heteroclinic parameters")
    p = P.p
    if not p > spec.p_star:
        raise DomainError(f"p={p} must exceed p*={spec.p_star:.12g}")
    op = op or assemble_Lp(spec, het, grid, p0)
    if forcing == "M":
        M = forcing_M(spec, het, grid)
    elif forcing == "zero":
        M = StripField(grid, np.zeros(op.shape))
    else:
        raise DomainError(f"unknown forcing {forcing!r}")
    phi0 = np.outer(op.a, op.phi1)
    psi = np.zeros(op.shape)
    changes, ratios = [], []
    for k in range(1, max_iter + 1):
        rhs = -(M.values + nonlinearity_Q(psi, phi0, p))
        new = op.green(rhs) if np.any(rhs) else np.zeros(op.shape)
        change = float(np.max(np.abs(new - psi)))
        psi = new
        changes.append(change)
        if len(changes) > 1 and changes[-2] > 0:
            ratios.append(change / changes[-2])
            if k > 2 and ratios[-1] >= 1.0 and change > tol:
                raise SolverFailure("fixed-point iteration does not contract; decrease p - p*",
                                    {"p": p, "changes": changes, "ratios": ratios})
        if change < tol:
            break
    else:
        raise SolverFailure("fixed-point iteration did not converge", {"p": p, "changes": changes})
    if np.any(phi0 + psi < -1e-12 * np.max(phi0)):
        raise SolverFailure("corrected profile lost positivity", {"p": p})
    resid = op.apply(psi) + M.values + nonlinearity_Q(psi, phi0, p)
    resid[[0, -1]] = 0.0
    resid[:, -1] = 0.0
    g = M.values + nonlinearity_Q(psi, phi0, p)
    psi_n, g_n = op.weighted_norms(psi, g)
    smallness = float(np.max(np.abs(psi)) / np.max(phi0))
    info = {
        "iterations": k,
        "changes": changes,
        "contraction": float(max(ratios)) if ratios else 0.0,
        "contraction_last": float(ratios[-1]) if ratios else 0.0,
        "smallness_ratio": smallness,
        "residual": float(np.max(np.abs(resid))),
        "mu_h": M.info.get("mu_h"),
        "condition_estimate": op.condition_estimate() if forcing == "M" else None,
        "p": p,
        "p0": op.p0,
    }
    return StripField(grid, psi, {"psi_weighted": psi_n, "g_weighted": g_n}, info)


def profile_mismatch(spec: SpectralData, het: Heteroclinic, psi: StripField, profile) -> float:
    """Relative sup distance between a_∞ φ₁ + ψ(T, ·) and the profile φ_p."""
    theta = psi.grid.theta
    phi1 = np.maximum(spec.phi1_at(theta), 0.0)
    phi1[-1] = 0.0
    approx = het.params.a_inf * phi1 + psi.values[-1]
    target = profile.phi_at(theta)
    return float(np.max(np.abs(approx - target)) / np.max(np.abs(target)))


def shifted_cap_solve(n: int, beta: float, shift: float, nodes: int = 4097, rhs: float = -1.0):
    """Solve Δ_S φ + shift φ = rhs on the cap, φ(β) = 0, by a banded solve.

    Returns (theta, phi, residual).
    """
    st = cap_stencil(n, beta, nodes)
    main = st.matrix.diagonal()
    upper = st.matrix.diagonal(1)
    lower = st.matrix.diagonal(-1)
    m = main.size
    ab = np.zeros((3, m))
    ab[0, 1:] = upper
    ab[1] = main + shift
    ab[2, :-1] = lower
    b = np.full(m, float(rhs))
    phi = np.zeros(nodes)
    phi[:-1] = solve_banded((1, 1), ab, b)
    res = st.apply(phi) + shift * phi - rhs
    return st.theta, phi, float(np.max(np.abs(res[st.free])))


@dataclass(frozen=True)
class Barrier:
    theta: np.ndarray = field(repr=False)
    phi: np.ndarray = field(repr=False)
    shift: float = 0.0
    residual: float = 0.0

    def __call__(self, theta, derivative: int = 0):
        from scipy.interpolate import CubicSpline

        spline = CubicSpline(self.theta, self.phi)
        return spline(theta, derivative)


def phi_star(spec: SpectralData, delta: float, nodes: int = 4097) -> Barrier:
    """Positive φ_* with Δ_S φ_* + λ φ_* + δ(δ - n - 2γ + 2) φ_* = -1, φ_*(β) = 0."""
    n, lam, gamma = spec.n, spec.lam, spec.gamma
    shift = delta * (delta - n - 2.0 * gamma + 2.0)
    if not shift < 0:
        raise DomainError(f"δ={delta} gives a non-coercive shift {shift:.6g}; need 0 < δ < n + 2γ - 2")
    theta, phi, res = shifted_cap_solve(n, spec.beta, lam + shift, nodes)
    if np.any(phi[:-1] <= 0):
        raise SolverFailure("barrier is not positive", {"delta": delta})
    return Barrier(theta, phi, shift, res)
