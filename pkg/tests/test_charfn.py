import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats

from dvg.charfn import coef_recursion, iid_coefficients, log_terminal_mgf, terminal_mgf
from dvg.dynamics import DVGParams, QParams, submodel, terminal_log_return
from dvg.errors import BranchCutError
from dvg.esscher import to_risk_neutral
from dvg.mixture import VGParams, vg_log_mgf, vg_mgf

P = DVGParams(r=2e-4, lam=-0.2, sigma=0.3, a=2.5, alpha0=0.02, alpha1=0.1, beta1=0.6, h1=0.2)
Q = QParams(r=1e-4, sigma=0.1001, a=3.0, alpha0=0.05, alpha1=0.12, beta1=0.08, h1=0.15)


def c_grid(n=50, seed=0):
    rng = np.random.default_rng(seed)
    return rng.uniform(-0.5, 1.5, n) + 1j * rng.uniform(-30, 30, n)


def test_terminal_conditions():
    path = coef_recursion(P, 5, c_grid(7))
    assert np.all(path.A[0] == 0) and np.all(path.B[0] == 0)
    assert path.horizon == 5


def test_one_step_by_hand():
    c = np.array([0.5, 1.0, 2j, 0.3 - 4j])
    A, B = coef_recursion(P, 1, c).at_remaining(1)
    np.testing.assert_allclose(A, c * P.r, rtol=1e-15)
    np.testing.assert_allclose(B, -P.a * np.log(1 - c * P.lam - c ** 2 * P.sigma ** 2 / 2),
                               rtol=1e-14)


@pytest.mark.parametrize("model", [submodel("iid-vg", P), submodel("iid-vg", Q)])
def test_iid_closed_form(model):
    c = c_grid(50)
    path = coef_recursion(model, 252, c)
    for k in (1, 2, 21, 100, 252):
        A, B = iid_coefficients(model, k, c)
        assert np.max(np.abs(path.A[k] - A) / np.maximum(1, np.abs(A))) < 1e-12
        assert np.max(np.abs(path.B[k] - B) / np.maximum(1, np.abs(B))) < 1e-12


def test_iid_mgf_matches_aggregate_vg():
    m = submodel("iid-vg", P)
    n, s, h = 10, 1.7, 0.4
    agg = VGParams(mu0=n * m.r, mu=m.lam, sigma=m.sigma, a=m.a * h * n, b=1.0)
    for c in (0.5, 1.0, 1j, 0.2 + 3j):
        assert terminal_mgf(m, s, h, n, c) == pytest.approx(s ** c * vg_mgf(agg, c), rel=1e-12)


def test_zero_argument():
    path = coef_recursion(P, 30, 0.0)
    assert np.all(path.A == 0) and np.all(path.B == 0)
    assert terminal_mgf(P, 2.0, 0.3, 30, 0.0) == 1.0


def test_conjugate_symmetry():
    c = c_grid(20, seed=1)
    f = terminal_mgf(P, 1.3, 0.25, 40, c)
    g = terminal_mgf(P, 1.3, 0.25, 40, np.conj(c))
    np.testing.assert_allclose(g, np.conj(f), rtol=1e-13)


def test_substitution_check():
    c = c_grid(20, seed=2)
    path = coef_recursion(P, 60, c)
    for k in range(1, 61):
        Bn = path.B[k - 1]
        B = P.beta1 * Bn - P.a * np.log(1 - (c * P.lam + P.alpha1 * Bn + c * c * P.sigma ** 2 / 2))
        A = c * P.r + path.A[k - 1] + P.alpha0 * Bn
        assert np.max(np.abs(path.B[k] - B)) <= 1e-15 * max(1, np.max(np.abs(B)))
        assert np.max(np.abs(path.A[k] - A)) <= 1e-15 * max(1, np.max(np.abs(A)))


def test_final_coefficients_agree_with_stored_path():
    c = c_grid(30, seed=3)
    path = coef_recursion(Q, 63, c)
    lp = log_terminal_mgf(Q, 1.0, 0.15, 63, c)
    np.testing.assert_allclose(lp, path.A[63] + path.B[63] * 0.15, rtol=1e-13, atol=1e-13)


def test_modulus_at_most_one_on_imaginary_axis():
    u = np.linspace(0, 200, 401)
    f = terminal_mgf(Q, 1.0, 0.15, 21, 1j * u)
    assert f[0] == 1.0
    assert np.all(np.abs(f) <= 1 + 1e-14)


def test_compensated_summation_agrees():
    c = c_grid(5, seed=4)
    a = coef_recursion(Q, 1500, c, compensated=True)
    b = coef_recursion(Q, 1500, c, compensated=False)
    np.testing.assert_allclose(a.A[-1], b.A[-1], rtol=1e-10)


def test_branch_cut_reported():
    m = DVGParams(sigma=1.0, a=1.0, h1=1.0)
    with pytest.raises(BranchCutError) as exc:
        coef_recursion(m, 3, 3.0)
    assert exc.value.step == 1
    with pytest.raises(BranchCutError):
        log_terminal_mgf(m, 1.0, 1.0, 3, np.array([0.5, 3.0]))


def test_min_cut_distance_reported():
    path = coef_recursion(Q, 10, c_grid(10))
    assert 0 < path.min_cut_distance <= math.pi


# --- martingale -----------------------------------------------------------

@pytest.mark.filterwarnings("ignore::dvg.dynamics.StationarityWarning")
@settings(max_examples=25, deadline=None)
@given(lam=st.floats(-0.3, 0.3), sigma=st.floats(0.05, 0.5), a=st.floats(0.5, 5),
       alpha0=st.floats(0, 0.1), alpha1=st.floats(0, 0.2), beta1=st.floats(0, 0.9),
       h1=st.floats(0.01, 0.5), r=st.floats(-1e-3, 1e-3), steps=st.integers(1, 252))
def test_risk_neutral_martingale(lam, sigma, a, alpha0, alpha1, beta1, h1, r, steps):
    q = to_risk_neutral(DVGParams(r=r, lam=lam, sigma=sigma, a=a, alpha0=alpha0, alpha1=alpha1,
                                  beta1=beta1, h1=h1))
    s = 1.7
    val = terminal_mgf(q, s, q.h1, steps, 1.0)
    assert abs(val / (s * math.exp(r * steps)) - 1) < 1e-8


def _two_step_oracle(m, h1, c):
    """E[S_2^c / S_0^c] by integrating the first mixing draw and using the one-step VG m.g.f."""
    omega = m.compensator

    def g(v):
        log_first = c * (m.r + omega * h1) + c * m.lam * v + c * c * m.sigma ** 2 * v / 2
        h2 = m.alpha0 + m.alpha1 * v + m.beta1 * h1
        vg = VGParams(mu0=m.r + omega * h2, mu=m.lam, sigma=m.sigma, a=m.a * h2, b=1)
        log_second = vg_log_mgf(vg, c).real
        return math.exp(stats.gamma.logpdf(v, m.a * h1) + log_first + log_second)

    return integrate.quad(g, 0, np.inf, limit=400, epsabs=0, epsrel=1e-12)[0]


@pytest.mark.parametrize("model", [P, Q, QParams(sigma=0.2, a=2, alpha0=0.1, alpha1=0.2,
                                                 beta1=0.4, h1=0.5, lam=0.05)])
@pytest.mark.parametrize("c", [0.5, 1.0, 1.5])
def test_nested_expectation_oracle(model, c):
    h1 = model.h1
    assert terminal_mgf(model, 1.0, h1, 2, c).real == pytest.approx(
        _two_step_oracle(model, h1, c), rel=1e-9)


# --- Monte Carlo agreement -------------------------------------------------

@pytest.mark.filterwarnings("ignore::dvg.dynamics.StationarityWarning")
@pytest.mark.parametrize("seed", range(4))
def test_monte_carlo_agreement(seed):
    rng = np.random.default_rng(100 + seed)
    m = DVGParams(r=rng.uniform(-1e-3, 1e-3), lam=rng.uniform(-0.2, 0.2),
                  sigma=rng.uniform(0.05, 0.3), a=rng.uniform(1, 4),
                  alpha0=rng.uniform(0, 0.05), alpha1=rng.uniform(0, 0.2),
                  beta1=rng.uniform(0, 0.7), h1=rng.uniform(0.05, 0.3))
    steps = int(rng.integers(1, 6))
    x = terminal_log_return(m, steps, 200_000, seed=seed)
    for c in (0.5, 1.0, 1.5, 1j, 2j):
        g = np.exp(c * x)
        mc = g.mean()
        exact = terminal_mgf(m, 1.0, m.h1, steps, c)
        if np.iscomplexobj(g):
            se = math.hypot(g.real.std(ddof=1), g.imag.std(ddof=1)) / math.sqrt(g.size)
        else:
            se = g.std(ddof=1) / math.sqrt(g.size)
        assert abs(mc - exact) < 4 * se + 1e-12
