import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import optimize

from dvg.charfn import terminal_mgf
from dvg.dynamics import DVGParams, QParams, simulate, terminal_log_return
from dvg.errors import MeasureChangeError
from dvg.esscher import (esscher_map, esscher_parameter, lambda_q_closed_form, one_step_mgf,
                         radon_nikodym_weight, to_risk_neutral)
from dvg.mixture import VGParams, vg_log_mgf

FIG2 = DVGParams(r=0.0, lam=0.0, sigma=0.1, a=3.0, alpha0=0.05, alpha1=0.12, beta1=0.08, h1=0.15)


def dvg_params():
    return st.builds(DVGParams,
                     r=st.floats(-1e-3, 1e-3),
                     lam=st.floats(-0.3, 0.3),
                     sigma=st.floats(0.05, 0.6),
                     a=st.floats(0.5, 5.0),
                     alpha0=st.floats(0, 0.1),
                     alpha1=st.floats(0, 0.15),
                     beta1=st.floats(0, 0.8),
                     h1=st.floats(0.01, 1.0))


def test_theta_examples():
    assert esscher_parameter(FIG2) == -0.5
    p = DVGParams(lam=0.05, sigma=0.2, a=1.0, h1=1.0)
    assert esscher_parameter(p) == pytest.approx(-1.75, abs=1e-15)


def test_fig2_map():
    m = esscher_map(FIG2)
    assert m.theta_star == -0.5
    assert m.lambdaQ == pytest.approx(-0.005, abs=1e-3)
    assert m.sigmaQ == pytest.approx(0.1001, abs=1e-3)
    assert m.lambdaQ == pytest.approx(-m.sigmaQ ** 2 / 2, rel=4e-16)
    assert set(m.as_dict()) == {"theta_star", "denominator", "lambdaQ", "sigmaQ", "scale"}


@pytest.mark.filterwarnings("ignore::dvg.dynamics.StationarityWarning")
@settings(max_examples=40, deadline=None)
@given(dvg_params())
def test_theta_matches_bisection(p):
    vg = VGParams(mu0=p.r, mu=p.lam, sigma=p.sigma, a=p.a * p.h1, b=1.0)
    # the m.g.f. exists on the open interval between the roots of D(c) = 0
    roots = np.sort(np.roots([-p.sigma ** 2 / 2, -p.lam, 1.0]).real)
    lo, hi = roots[0] + 1e-9, roots[1] - 1 - 1e-9

    def eq(t):
        return vg_log_mgf(vg, t + 1) - vg_log_mgf(vg, t) - p.r

    theta = optimize.bisect(eq, lo, hi, xtol=1e-14, rtol=1e-15, maxiter=500)
    assert esscher_parameter(p) == pytest.approx(theta, abs=1e-10)


@pytest.mark.filterwarnings("ignore::dvg.dynamics.StationarityWarning")
@settings(max_examples=40, deadline=None)
@given(dvg_params())
def test_drift_identity_exact(p):
    m = esscher_map(p)
    assert m.lambdaQ == pytest.approx(-m.sigmaQ ** 2 / 2, rel=4e-16)
    q = to_risk_neutral(p)
    assert q.lam == -q.sigma ** 2 / 2 and q.compensator == 0.0
    assert q.a * (q.sigma ** 2 + q.lam ** 2) == pytest.approx(1.0, rel=1e-15)
    assert q.beta1 == p.beta1


@pytest.mark.parametrize("lam", np.linspace(-0.3, 0.3, 13))
@pytest.mark.parametrize("sigma", [0.05, 0.1, 0.3, 0.8])
def test_lambda_q_closed_form(lam, sigma):
    p = DVGParams(lam=lam, sigma=sigma, a=1.0, h1=1.0)
    assert lambda_q_closed_form(lam, sigma) == pytest.approx(esscher_map(p).lambdaQ, rel=1e-12)


@pytest.mark.filterwarnings("ignore::dvg.dynamics.StationarityWarning")
@settings(max_examples=30, deadline=None)
@given(dvg_params(), st.floats(0.05, 2.0))
def test_ratio_oracle(p, h):
    """M(c + theta*) / M(theta*) is a VG m.g.f. with (lambdaQ, sigmaQ) and shape a h."""
    m = esscher_map(p)
    c = np.array([-0.5, 0.25, 1.0, 1.5, 0.3j, 1 - 2j])
    theta = m.theta_star
    ratio = np.exp(np.log(one_step_mgf(p, c + theta, h)) - np.log(one_step_mgf(p, theta, h)))
    expected = np.exp(c * p.r - p.a * h * np.log(1 - c * m.lambdaQ - c * c * m.sigmaQ ** 2 / 2))
    np.testing.assert_allclose(ratio, expected, rtol=1e-10)


def test_one_step_martingale_exact():
    q = to_risk_neutral(DVGParams(r=3e-4, lam=0.1, sigma=0.2, a=2.0, alpha0=0.01, alpha1=0.05,
                                  beta1=0.7, h1=0.2))
    for h in (0.01, 0.2, 3.0):
        assert abs(terminal_mgf(q, 1.0, h, 1, 1.0) / math.exp(q.r) - 1) < 1e-12


def test_identify_flag_changes_scale_not_law():
    p = DVGParams(r=1e-4, lam=-0.1, sigma=0.25, a=2.0, alpha0=0.02, alpha1=0.1, beta1=0.6, h1=0.3)
    q1 = to_risk_neutral(p, identify=True)
    q0 = to_risk_neutral(p, identify=False)
    assert q0.a == p.a and q0.h1 == p.h1
    c = np.array([0.5, 1.0, 1j, 2 + 5j])
    for steps in (1, 5, 30):
        np.testing.assert_allclose(terminal_mgf(q1, 1.0, q1.h1, steps, c),
                                   terminal_mgf(q0, 1.0, q0.h1, steps, c), rtol=1e-11)


def test_measure_change_rejects_zero_sigma():
    with pytest.raises(MeasureChangeError):
        esscher_parameter(DVGParams(sigma=0.0, lam=0.1))


def test_measure_change_failure_reported():
    # D(theta*) = 1 + lam^2 / (2 sigma^2) - sigma^2 / 8 turns negative for sigma > 2 sqrt(2) at lam = 0
    p = DVGParams(lam=0.0, sigma=3.0, a=1.0, h1=1.0)
    with pytest.raises(MeasureChangeError, match="D\\(theta\\*\\)"):
        to_risk_neutral(p)


def test_denominator_formula():
    for lam, sigma in ((0.0, 0.1), (0.05, 0.2), (-0.3, 0.5), (1.0, 2.0)):
        m = esscher_map(DVGParams(lam=lam, sigma=sigma, a=1.0, h1=1.0))
        assert m.denominator == pytest.approx(1 + lam ** 2 / (2 * sigma ** 2) - sigma ** 2 / 8,
                                              rel=1e-13)


# --- Radon-Nikodym weights -------------------------------------------------

P = DVGParams(r=2e-4, lam=-0.2, sigma=0.3, a=2.0, alpha0=0.02, alpha1=0.1, beta1=0.6, h1=0.3)


def test_local_density_has_unit_mean():
    s = simulate(P, T=1, n_paths=1_000_000, seed=1)
    w = radon_nikodym_weight(P, s.Y[:, 0], s.h[:, 0])
    se = w.std(ddof=1) / math.sqrt(w.size)
    assert abs(w.mean() - 1) < 4 * se
    g = np.exp(s.Y[:, 0]) * w
    se = g.std(ddof=1) / math.sqrt(g.size)
    assert abs(g.mean() - math.exp(P.r)) < 4 * se


def test_product_of_weights_has_unit_mean():
    s = simulate(P, T=5, n_paths=300_000, seed=2)
    w = np.prod(radon_nikodym_weight(P, s.Y, s.h), axis=1)
    se = w.std(ddof=1) / math.sqrt(w.size)
    assert abs(w.mean() - 1) < 4 * se


def test_reweighted_p_prices_match_q_simulation():
    T, K = 5, 1.0
    s = simulate(P, T=T, n_paths=300_000, seed=3)
    w = np.prod(radon_nikodym_weight(P, s.Y, s.h), axis=1)
    payoff_p = np.maximum(np.exp(s.Y.sum(axis=1)) - K, 0) * w
    q = to_risk_neutral(P)
    payoff_q = np.maximum(np.exp(terminal_log_return(q, T, 300_000, seed=4)) - K, 0)
    se = math.hypot(payoff_p.std(ddof=1), payoff_q.std(ddof=1)) / math.sqrt(300_000)
    assert abs(payoff_p.mean() - payoff_q.mean()) < 4 * se


def test_tilt_state_matches_reweighted_state_moments():
    """Under Q the mixing draw has mean a h / D(theta*); tilt_state keeps the h-recursion in law."""
    m = esscher_map(P)
    s = simulate(P, T=1, n_paths=1_000_000, seed=5)
    w = radon_nikodym_weight(P, s.Y[:, 0], s.h[:, 0])
    v_q = np.mean(s.V[:, 0] * w)
    assert v_q == pytest.approx(P.a * P.h1 / m.denominator, rel=5e-3)
    # the next state under Q, both with the tilted loading (identify=False keeps P's scale)
    q = to_risk_neutral(P, identify=False, tilt_state=True)
    h2_q = np.mean((P.alpha0 + P.alpha1 * s.V[:, 0] + P.beta1 * P.h1) * w)
    # Q-unit-rate draw U = D V has mean a h; h2 = alpha0 + (alpha1/D) U + beta1 h
    assert q.alpha0 + q.alpha1 * q.a * q.h1 + q.beta1 * q.h1 == pytest.approx(h2_q, rel=5e-3)
    q_bad = to_risk_neutral(P, identify=False, tilt_state=False)
    if abs(m.denominator - 1) > 0.05:
        assert q_bad.alpha0 + q_bad.alpha1 * q_bad.a * q_bad.h1 + q_bad.beta1 * q_bad.h1 \
            != pytest.approx(h2_q, rel=5e-3)


def test_two_step_q_mgf_matches_reweighting():
    """The full Q recursion agrees with P-simulation reweighted by the local densities."""
    q = to_risk_neutral(P, identify=False)
    s = simulate(P, T=3, n_paths=500_000, seed=6)
    w = np.prod(radon_nikodym_weight(P, s.Y, s.h), axis=1)
    x = s.Y.sum(axis=1)
    for c in (0.5, 1.0, 1.5):
        g = np.exp(c * x) * w
        se = g.std(ddof=1) / math.sqrt(g.size)
        assert abs(g.mean() - terminal_mgf(q, 1.0, q.h1, 3, c).real) < 4 * se
