import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from singcone.cap_spectrum import exponents
from singcone.errors import DomainError, SolverFailure
from singcone.heteroclinic import (
    Heteroclinic,
    ode_params,
    solve_heteroclinic,
    verify_tail_rates,
)

import oracles
import shared

MU4 = 9.0 / (10.0 * math.pi)


def test_params_p3_hemisphere():
    P = ode_params(3, 2.0, 3.0, MU4)
    assert P.alpha == pytest.approx(1.0, abs=1e-15)
    assert P.A == pytest.approx(1.0, abs=1e-15)
    assert P.eps == pytest.approx(2.0, abs=1e-15)
    assert P.a_inf == pytest.approx(math.sqrt(20.0 * math.pi / 9.0), abs=1e-12)
    assert P.a_inf == pytest.approx(2.64222, abs=1e-5)
    assert P.delta_minus == pytest.approx(1.0, abs=1e-15)
    assert P.focus and P.delta_tilde[0].imag != 0.0
    assert P.A**2 - 4 * (P.p - 1) * P.eps < 0


def test_params_p21_exact_arithmetic():
    p = Fraction(21, 10)
    alpha = Fraction(2) / (p - 1)
    A = 2 * alpha + 2 - 3
    eps = 2 + alpha * (3 - 2 - alpha)
    assert (alpha, A, eps) == (Fraction(20, 11), Fraction(29, 11), Fraction(62, 121))
    assert A * A + 4 * eps == Fraction(1089, 121)
    P = ode_params(3, 2.0, 2.1, 0.37)
    assert P.alpha == pytest.approx(float(alpha), abs=1e-15)
    assert P.A == pytest.approx(float(A), abs=1e-15)
    assert P.eps == pytest.approx(float(eps), abs=1e-15)
    assert P.delta_minus == pytest.approx(2.0 / 11.0, abs=1e-15)
    disc = float(A * A - 4 * (p - 1) * eps)
    dp, dm = (-float(A) + math.sqrt(disc)) / 2, (-float(A) - math.sqrt(disc)) / 2
    assert P.delta_tilde[0].real == pytest.approx(dp, abs=1e-14)
    assert P.delta_tilde[1].real == pytest.approx(dm, abs=1e-14)
    assert dp == pytest.approx(-0.234684, abs=1e-6)
    assert dm == pytest.approx(-2.401680, abs=1e-6)
    assert not P.focus


@pytest.mark.parametrize("p", [2.1, 3.0])
def test_delta_identity(p):
    P = ode_params(3, 2.0, p, 0.5)
    gamma, _ = exponents(3, 2.0)
    assert P.delta_minus + P.alpha == pytest.approx(3 + gamma - 2, abs=1e-12)


def test_params_match_oracle_and_equilibrium():
    P = ode_params(4, 5.5, 2.2, 0.8)
    ref = oracles.heteroclinic_constants(4, 5.5, 2.2, 0.8)
    for key, val in ref.items():
        assert getattr(P, key) == pytest.approx(val, rel=1e-14)
    assert P.mu * P.a_inf ** (P.p - 1) == pytest.approx(P.eps, rel=1e-14)
    assert P.ode_residual(P.a_inf, 0.0, 0.0) == pytest.approx(0.0, abs=1e-14)


@pytest.mark.parametrize("kw", [dict(p=1.0), dict(p=0.5), dict(lam=0.0), dict(mu=-1.0)])
def test_params_domain(kw):
    args = dict(n=3, lam=2.0, p=2.1, mu=0.5)
    args.update(kw)
    with pytest.raises(DomainError):
        ode_params(**args)


@settings(max_examples=200, deadline=None)
@given(n=st.integers(2, 10), lam=st.floats(0.05, 20.0), frac=st.floats(0.01, 0.99))
def test_coefficients_positive_in_range(n, lam, frac):
    _, ps = exponents(n, lam)
    upper = (n + 2.0) / (n - 2.0) if n > 2 else ps + 10.0
    assume(upper > ps)
    p = ps + frac * (upper - ps)
    P = ode_params(n, lam, p, 1.0)
    assert P.A > 0 and P.eps > 0
    gamma, _ = exponents(n, lam)
    assert abs(P.delta_minus + P.alpha - (n + gamma - 2)) < 1e-12 * max(1.0, n + gamma)


# ---------------------------------------------------------------- orbit

@pytest.fixture(scope="module")
def het21():
    return shared.heteroclinic(2.1)


def test_orbit_normalization_and_bounds(het21):
    h, P = het21, het21.params
    i0 = int(np.argmin(np.abs(h.t)))
    assert h.t[i0] == 0.0
    assert abs(h.a[i0] - P.a_inf / 2) < 1e-8
    assert h(np.array([0.0]))[0] == pytest.approx(P.a_inf / 2, abs=1e-8)
    assert h.a[0] < 1e-3 * P.a_inf and abs(h.a[-1] - P.a_inf) < 1e-3 * P.a_inf
    assert np.all(h.a > 0) and np.all(h.a < P.a_bar())
    assert np.all(np.diff(h.a) > 0)
    assert h.max_residual < 1e-6


def test_energy_nonincreasing(het21):
    E = het21.params.energy(het21.a, het21.da)
    assert np.all(np.diff(E) <= 1e-14)


def test_tail_rates(het21):
    rep = verify_tail_rates(het21)
    P = het21.params
    assert abs(rep.left_slope / (2.0 / 11.0) - 1) < 0.01
    assert rep.sandwich_ok
    roots = [z.real for z in P.delta_tilde]
    assert min(abs(rep.right_slope / r - 1) for r in roots) < 0.02


def test_translation_covariance(het21):
    other = solve_heteroclinic(het21.params, L=het21.L, launch=1e-9)
    t = np.linspace(-0.8 * het21.L, 0.8 * het21.L, 801)
    # both are normalized by a(0) = a_∞/2, so the optimal shift is zero up to root-finding error
    assert np.max(np.abs(het21(t) - other(t))) < 1e-7 * het21.params.a_inf


def test_focus_regime_flags_oscillation():
    spec = shared.spectrum()
    h = shared.heteroclinic(3.0)
    assert h.params.focus and h.oscillating
    assert abs(h(np.array([0.0]))[0] - h.params.a_inf / 2) < 1e-8
    assert np.all(np.diff(h.params.energy(h.a, h.da)) <= 1e-14)
    assert spec.lam == pytest.approx(2.0)


def test_evaluation_tails(het21):
    h, P = het21, het21.params
    far_left = np.array([h.t[0] - 3.0])
    assert h(far_left)[0] == pytest.approx(h.a[0] * math.exp(-3.0 * P.delta_minus), rel=1e-12)
    assert h(np.array([h.t[-1] + 5.0]))[0] == h.a[-1]
    assert h(np.array([h.t[-1] + 5.0]), 1)[0] == 0.0


def test_short_window_fails(het21):
    with pytest.raises(SolverFailure):
        solve_heteroclinic(het21.params, L=2.0)


def test_solver_preconditions():
    P = ode_params(3, 2.0, 1.9, 0.5)  # p below p*: ε < 0
    with pytest.raises(DomainError):
        solve_heteroclinic(P)
    with pytest.raises(DomainError):
        solve_heteroclinic(ode_params(3, 2.0, 2.1, 0.5), launch=1e-3)


def test_tail_windows_too_short():
    P = ode_params(3, 2.0, 2.1, 0.5)
    t = np.linspace(-1, 1, 50)
    a = np.full_like(t, 0.5 * P.a_inf)
    with pytest.raises(SolverFailure):
        verify_tail_rates(Heteroclinic(P, t, a, np.zeros_like(t)))
