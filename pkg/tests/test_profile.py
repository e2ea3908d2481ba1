import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from singcone.cap_spectrum import CapSpec, exponents, moment, solve_cap_eigen
from singcone.errors import DomainError
from singcone.grid import GridSpec
from singcone.heteroclinic import ode_params
from singcone.profile import (
    admissible_upper,
    check_exponent,
    cone_residual,
    linear_coefficient,
    near_critical_asymptote,
    solve_profile,
)

import oracles
import shared

HALF = math.pi / 2


def _samples(beta, radii=(1e-3, 1.0, 1e3), angles=9):
    return np.array([[r, th] for r in radii for th in np.linspace(0.0, beta, angles)])


@settings(max_examples=100, deadline=None)
@given(n=st.integers(2, 10), lam=st.floats(1e-3, 20.0))
def test_kappa_at_critical_exponent_is_lambda(n, lam):
    _, ps = exponents(n, lam)
    assert linear_coefficient(n, ps) == pytest.approx(lam, abs=1e-12 * max(1.0, lam))


def test_near_critical_amplitude_prediction():
    spec = shared.spectrum()
    p = 2.05
    prof = shared.profile(p)
    eps = spec.lam - linear_coefficient(3, p)
    predicted = (eps / moment(spec, p + 1.0)) ** (1.0 / (p - 1.0)) * spec.phi1.max()
    assert prof.amplitude == pytest.approx(prof.phi.max())
    assert abs(prof.amplitude / predicted - 1.0) < 0.10


def test_matches_newton_fd_oracle():
    p = 2.5
    c = math.sqrt(3.0 / (2.0 * math.pi))
    alpha = 2.0 / (p - 1.0)
    eps = 2.0 + alpha * (1.0 - alpha)
    amp = (eps / oracles.hemisphere_moment(p + 1.0)) ** (1.0 / (p - 1.0)) * c
    th, ref = oracles.newton_fd_profile(3, HALF, p, lambda x: amp * np.cos(x))
    prof = shared.profile(p)
    assert np.max(np.abs(prof.phi_at(th) - ref)) < 1e-4


@pytest.mark.parametrize("p", [2.1, 2.5, 3.5])
def test_cone_residual_small_and_scale_invariant(p):
    spec = shared.spectrum()
    prof = solve_profile(spec, p, GridSpec(8193))
    assert cone_residual(prof, _samples(spec.beta)) < 1e-6
    # the r-dependence is pure roundoff in r^{α+2} · r^{-α-2}
    per_r = [cone_residual(prof, _samples(spec.beta, radii=(r,))) for r in (1e-4, 1.0, 1e4)]
    assert max(per_r) - min(per_r) <= 1e-6 * max(per_r)


def test_cone_residual_detects_perturbation():
    prof = shared.profile(2.3)
    assert cone_residual(prof, _samples(prof.cap.beta), scale=1.01) > 1e-3


def test_cone_residual_converges_at_grid_order():
    spec = shared.spectrum()
    res = [cone_residual(solve_profile(spec, 2.3, GridSpec(m)), _samples(spec.beta)) for m in (1025, 2049, 4097)]
    assert res[0] > res[1] > res[2]
    assert res[1] / res[2] > 3.0


def test_cone_residual_rejects_outside_points():
    prof = shared.profile(2.3)
    with pytest.raises(DomainError):
        cone_residual(prof, [[1.0, prof.cap.beta + 0.1]])
    with pytest.raises(DomainError):
        cone_residual(prof, [[-1.0, 0.1]])


def test_profile_positive_and_decreasing():
    for p in (2.05, 2.5, 4.0):
        prof = shared.profile(p)
        assert np.all(prof.phi[:-1] > 0) and prof.phi[-1] == 0.0
        assert np.all(np.diff(prof.phi) < 0)


def test_near_critical_mismatch_decreases():
    spec = shared.spectrum()
    ps = spec.p_star
    seq = [near_critical_asymptote(spec, ps + d, shared.profile(ps + d)) for d in (0.2, 0.1, 0.05)]
    assert seq[0] > seq[1] > seq[2]
    close = near_critical_asymptote(spec, ps + 0.01, shared.profile(ps + 0.01))
    assert close < seq[0]


def test_amplitude_monotone_near_critical():
    spec = shared.spectrum()
    ps = np.linspace(spec.p_star + 0.01, spec.p_star + 0.5, 8)
    amps = [shared.profile(float(p)).amplitude for p in ps]
    assert np.all(np.diff(amps) > 0)


def test_amplitude_prediction_equals_heteroclinic_limit():
    spec = shared.spectrum()
    p = 2.2
    mu = moment(spec, p + 1.0)
    P = ode_params(3, spec.lam, p, mu)
    kappa = linear_coefficient(3, p)
    assert ((spec.lam - kappa) / mu) ** (1.0 / (p - 1.0)) == pytest.approx(P.a_inf, rel=1e-14)


@pytest.mark.parametrize("n, beta, p", [(2, 1.0, 3.0), (4, 1.2, 2.0), (5, 2.0, 2.0)])
def test_other_dimensions_and_arc(n, beta, p):
    spec = solve_cap_eigen(CapSpec(n, beta))
    assert spec.p_star < p < admissible_upper(n)
    res = []
    for m in (2049, 4097):
        prof = solve_profile(spec, p, GridSpec(m))
        assert np.all(prof.phi[:-1] > 0)
        res.append(cone_residual(prof, _samples(beta)))
    assert res[0] < 1e-4 and res[0] / res[1] > 3.5


def test_exponent_preconditions():
    spec = shared.spectrum()
    with pytest.raises(DomainError):
        check_exponent(spec, 1.999)
    with pytest.raises(DomainError):
        solve_profile(spec, 1.9)
    hi = solve_cap_eigen(CapSpec(5, 1.0))
    with pytest.raises(DomainError):
        check_exponent(hi, admissible_upper(5) + 0.1)
    with pytest.raises(DomainError):
        near_critical_asymptote(spec, 1.95, shared.profile(2.1))


def test_admissible_upper():
    assert admissible_upper(2) == math.inf and admissible_upper(3) == math.inf
    assert admissible_upper(4) == pytest.approx(5.0)
    assert admissible_upper(7) == pytest.approx(2.0)
