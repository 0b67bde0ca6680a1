import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import optimize

from limpapr import special_cases as sc
from limpapr.asymptotics import full_report
from limpapr.exceptions import DegenerateError, InfeasibleError
from limpapr.gaussian_moments import q_function
from limpapr.saddle_point import SystemParams, solve_saddle

# mpmath bisection / closed-form evaluations at delta=2, rho=1, lam=1, sigma=0.1
RZF_TAU, RZF_BETA = 0.77688698701501865, 2.1973682269356199
RZF_PB, RZF_PD = 0.20710678118654752, 0.60355339059327376
RZF_SINR, RZF_PE = 1.6298500103357798, 0.19237459468786538
Q5 = 2.8665157187919391e-07

RZF = SystemParams.from_sigma(delta=2, rho=1, lam=1, p_max=1, sigma=0.1)


def _defining_residual(s, delta, lam):
    return delta - 1 / s - 1 / (1 + lam * s)


def test_s_star_example():
    s = sc.rzf_s_star(2, 1)
    assert s == pytest.approx(1 / math.sqrt(2), rel=1e-15)
    ref = optimize.brentq(lambda v: _defining_residual(v, 2, 1), 1e-3, 10, xtol=1e-15)
    assert s == pytest.approx(ref, rel=1e-12)


def test_s_star_small_lambda():
    assert sc.rzf_s_star(3.0, 1e-12) == pytest.approx(0.5, rel=1e-9)


@pytest.mark.parametrize("delta", np.geomspace(1e-3, 1e3, 20))
def test_s_star_grid(delta):
    for lam in np.geomspace(1e-4, 1e4, 20):
        s = sc.rzf_s_star(delta, lam)
        assert s > 0
        assert abs(_defining_residual(s, delta, lam)) < 1e-12 * max(1.0, delta, 1 / s)


def test_rzf_limit_values():
    lim = sc.rzf_limit(RZF)
    assert lim.s_star is not None
    np.testing.assert_allclose([lim.tau_limit, lim.beta_limit, lim.pb, lim.pd, lim.sinr_lb, lim.pe],
                               [RZF_TAU, RZF_BETA, RZF_PB, RZF_PD, RZF_SINR, RZF_PE], rtol=1e-12)
    assert lim.pb == pytest.approx(RZF.delta * lim.tau_limit ** 2 - RZF.rho, rel=1e-12)
    assert lim.sinr_lb == pytest.approx(RZF.rho / (lim.pd + RZF.sigma2), rel=1e-12)


def test_rzf_pe_matches_general_formula():
    # plugging the closed-form saddle point into the general Q expression
    lim = sc.rzf_limit(RZF)
    b, t, d, r = lim.beta_limit, lim.tau_limit, RZF.delta, RZF.rho
    num = math.sqrt(r) - b * math.sqrt(r) / (2 * t * d)
    den = math.sqrt(b * b / 4 * (t * t * d - r) / (t * t * d * d) + RZF.sigma2)
    assert lim.pe == pytest.approx(q_function(num / den), rel=1e-12)


def test_rzf_to_zf_continuity():
    p = SystemParams.from_sigma(delta=2.5, rho=1.3, lam=1e-9, p_max=1, sigma=0.1)
    r, z = sc.rzf_limit(p), sc.zf_limit(p)
    np.testing.assert_allclose([r.tau_limit, r.beta_limit, r.pb, r.pd, r.sinr_lb, r.pe],
                               [z.tau_limit, z.beta_limit, z.pb, z.pd, z.sinr_lb, z.pe], rtol=1e-6)


def test_rzf_needs_lambda():
    with pytest.raises(ValueError):
        sc.rzf_limit(RZF.replace(lam=0.0))


def test_zf_limit_values():
    p = SystemParams.from_sigma(delta=2, rho=1, lam=0, p_max=1, sigma=0.1)
    lim = sc.zf_limit(p)
    assert (lim.tau_limit, lim.beta_limit, lim.pb, lim.pd) == (1.0, 2.0, 1.0, 0.5)
    assert lim.sinr_lb == pytest.approx(1 / 0.51)
    assert lim.pe == pytest.approx(0.16339978383448301, rel=1e-12)
    assert sc.zf_limit(p.replace(rho=2.0)).pb == 2 * lim.pb
    assert sc.zf_limit(p.replace(delta=1 + 1e-9)).pb > 1e8
    with pytest.raises(InfeasibleError):
        sc.zf_limit(p.replace(delta=1.0))


def test_small_delta_limit():
    p = SystemParams.from_sigma(delta=1e-3, rho=1, lam=1, p_max=1, sigma=0.1)
    lim = sc.small_delta_limit(p)
    assert lim.pb == 0.0
    assert lim.pd == pytest.approx(0.25)
    assert lim.pe == pytest.approx(Q5, rel=1e-12)
    assert sc.small_delta_limit(p.replace(lam=1e9)).pd == pytest.approx(sc.large_delta_limit(p).pd, rel=1e-8)
    with pytest.raises(DegenerateError):
        sc.small_delta_limit(p.replace(sigma2=0.0))


def test_small_delta_solver_convergence():
    # pd converges fast; the scaled beta and tau too
    for delta in (1e-2, 1e-3):
        p = SystemParams.from_sigma(delta=delta, rho=1, lam=1, p_max=1, sigma=0.1)
        sp = solve_saddle(p)
        rep, lim = full_report(p), sc.small_delta_limit(p)
        assert rep.pd_star == pytest.approx(lim.pd, rel=0.02)
        assert sp.tau_star / lim.tau_limit == pytest.approx(1, rel=0.02)
        assert sp.beta_star / lim.beta_limit == pytest.approx(1, rel=0.02)


def test_large_delta_limit():
    p = SystemParams.from_sigma(delta=100, rho=1, lam=0.3, p_max=7, sigma=0.1)
    lim = sc.large_delta_limit(p)
    assert (lim.pb, lim.pd, lim.pe) == (0.0, 1.0, 0.5)
    assert lim.sinr_lb == pytest.approx(0.990099009901, rel=1e-11)
    other = sc.large_delta_limit(p.replace(lam=0.0, p_max=100))
    assert other == lim


@pytest.mark.parametrize("delta", [50, 200, 400])
def test_large_delta_solver_convergence(delta):
    # the distortion gap closes like 1/delta
    p = SystemParams.from_sigma(delta=delta, rho=1, lam=0.01, p_max=1, sigma=0.1)
    rep, lim = full_report(p), sc.large_delta_limit(p)
    assert (lim.pd - rep.pd_star) * delta == pytest.approx(1.0, rel=1e-3)
    assert rep.sinr_lb_star == pytest.approx(lim.sinr_lb, rel=1.1 / delta)


def test_small_rho_branches():
    p = SystemParams.from_sigma(delta=2, rho=1e-6, lam=1, p_max=1, sigma=0.1)
    lim = sc.small_rho_limit(p)
    rzf = sc.rzf_limit(p)
    assert lim.s_star == rzf.s_star
    assert lim.pb == pytest.approx(rzf.pb) and lim.pd == pytest.approx(rzf.pd)
    assert lim.sinr_lb == pytest.approx(p.rho / p.sigma2)
    assert lim.pe < 0.5
    assert full_report(p).pb_star == pytest.approx(lim.pb, rel=0.01)

    zf = sc.small_rho_limit(p.replace(lam=0.0))
    assert zf.s_star is None
    assert zf.pb == pytest.approx(p.rho / (p.delta - 1))
    with pytest.raises(InfeasibleError):
        sc.small_rho_limit(p.replace(lam=0.0, delta=0.9))
    with pytest.raises(DegenerateError):
        sc.small_rho_limit(p.replace(sigma2=0.0))


def test_small_rho_sinr_ratio():
    p = SystemParams.from_sigma(delta=1.5, rho=1e-8, lam=0.01, p_max=1, sigma=0.1)
    assert full_report(p).sinr_lb_star / (p.rho / p.sigma2) == pytest.approx(1, rel=1e-6)


def test_large_rho_expansion():
    p = SystemParams.from_sigma(delta=1.2, rho=1e6, lam=0.01, p_max=25, sigma=0.1)
    lim = sc.large_rho_expansion(p)
    assert lim.pb == 25
    assert lim.pe == pytest.approx(0.23323946517110934, rel=1e-12)
    sp = solve_saddle(p)
    assert abs(sp.tau_star - lim.tau_limit) < 1e-3


@given(st.floats(0.1, 10), st.floats(1e-3, 10), st.floats(0.01, 10))
def test_limit_powers_nonnegative(delta, lam, rho):
    p = SystemParams.from_sigma(delta=delta, rho=rho, lam=lam, p_max=1, sigma=0.1)
    for lim in (sc.rzf_limit(p), sc.small_delta_limit(p), sc.large_delta_limit(p), sc.small_rho_limit(p)):
        assert lim.pb >= 0 and lim.pd >= 0
