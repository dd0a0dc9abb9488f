import json
import math

import numpy as np
import pytest
from scipy import integrate, stats

from dvg.errors import ConvergenceError, ValidationError
from dvg.estimation import (LR_LADDER, MODELS, FitConfig, FitResult, HNParams, filter_variance,
                            fit, loglik, lr_test, quadrature_gap, simulate_hn, svg_logdensity)
from dvg.mixture import SVGParams

TABLE_LOGL = {"MOD1": 3211.01, "MOD2": 3296.50, "MOD3": 3341.53, "MOD4": 3379.00, "MOD5": 3389.40}
TABLE4 = {("MOD1", "MOD2"): (170.98, 4.51e-39), ("MOD1", "MOD3"): (261.05, 1.01e-58),
          ("MOD2", "MOD4"): (165.00, 9.14e-38), ("MOD4", "MOD5"): (20.80, 5.09e-06)}

SVG5 = HNParams(r=1e-4, lam=2.0, alpha0=5e-6, alpha1=5e-6, beta1=0.6, gamma=250.0,
                innovation="svg", k=1.3, svg_alpha=-0.2, v1=1e-4)


@pytest.fixture(scope="module")
def returns():
    return simulate_hn(SVG5, 1500, seed=42, burn=200)


# --- SVG log-density -----------------------------------------------------------

def test_svg_symmetry():
    s = SVGParams(0.0, 1.3)
    z = np.linspace(0.1, 4, 25)
    np.testing.assert_allclose(svg_logdensity(s, z), svg_logdensity(s, -z), rtol=1e-13)


def test_svg_normal_limit():
    z = np.linspace(-3, 3, 61)
    ld = svg_logdensity(SVGParams(0.0, 1e4), z, q=64)
    assert np.max(np.abs(ld - stats.norm.logpdf(z))) < 1e-3


@pytest.mark.parametrize("n, tol", [(10, 1e-3), (64, 1e-6)])
@pytest.mark.parametrize("alpha, k", [(0.0, 1.24), (-0.219, 1.30), (0.0, 3.0), (0.5, 2.0)])
def test_svg_normalisation(n, tol, alpha, k):
    s = SVGParams(alpha, k)
    f = lambda z: math.exp(svg_logdensity(s, z, n))
    # the cusp at -alpha is the only non-smooth point
    mass = integrate.quad(f, -40, 40, points=[-alpha], limit=1000, epsabs=1e-12)[0]
    assert abs(mass - 1) < tol


def test_svg_floor_counted():
    s = SVGParams(0.0, 1.3)
    out, n = svg_logdensity(s, np.array([0.0, 1.0, 1e5]), return_floored=True)
    assert n == 1 and out[2] == math.log(1e-300)
    assert svg_logdensity(s, 1.0) == out[1]


# --- likelihood ---------------------------------------------------------------

def test_mod1_gaussian_closed_form(rng):
    v, r = 2e-4, 3e-4
    y = r + math.sqrt(v) * rng.standard_normal(800)
    p = HNParams(r=r, lam=0.0, alpha0=v, alpha1=0.0, beta1=0.0, v1=v)
    assert loglik("MOD1", p, y) == pytest.approx(np.sum(stats.norm.logpdf(y, r, math.sqrt(v))),
                                                 rel=1e-13)


def test_filter_recursion_by_hand():
    p = HNParams(r=0.001, lam=1.5, alpha0=1e-6, alpha1=2e-6, beta1=0.7, gamma=100.0, v1=1e-4)
    y = [0.01, -0.02, 0.005]
    V, Z = filter_variance(p, y)
    v = 1e-4
    for t in range(3):
        assert V[t] == pytest.approx(v, rel=1e-14)
        z = (y[t] - 0.001 - 1.5 * v) / math.sqrt(v)
        assert Z[t] == pytest.approx(z, rel=1e-13)
        v = 1e-6 + 2e-6 * (z - 100 * math.sqrt(v)) ** 2 + 0.7 * v
    Vp, Zp = filter_variance(p, y, variant="printed")
    assert Vp[1] == pytest.approx(1e-6 + 2e-6 * (Zp[0] - 100) ** 2 + 0.7e-4, rel=1e-14)


def test_nesting_equalities(returns):
    p = SVG5
    assert loglik("MOD5", p.__class__(**{**p.to_dict(), "svg_alpha": 0.0}), returns) == \
        loglik("MOD4", p, returns)
    assert loglik("MOD4", p.__class__(**{**p.to_dict(), "gamma": 0.0, "svg_alpha": 0.0}),
                  returns) == loglik("MOD3", p, returns)
    normal = HNParams(**{**p.to_dict(), "innovation": "normal", "svg_alpha": 0.0})
    assert loglik("MOD2", HNParams(**{**normal.to_dict(), "gamma": 0.0}), returns) == \
        loglik("MOD1", normal, returns)


def test_model_restrictions():
    p = SVG5.for_model("MOD3")
    assert p.gamma == 0 and p.svg_alpha == 0 and p.innovation == "svg-symmetric"
    assert SVG5.for_model("MOD1").innovation == "normal"
    with pytest.raises(ValidationError):
        SVG5.for_model("MOD9")


def test_shift_invariance(returns):
    a = loglik("MOD5", SVG5, returns)
    shifted = HNParams(**{**SVG5.to_dict(), "r": SVG5.r + 0.003})
    assert loglik("MOD5", shifted, returns + 0.003) == pytest.approx(a, rel=1e-10)


def test_quadrature_order_convergence(returns):
    # successive doubling gaps shrink; the cusp of the SVG density makes the decay slow
    orders = (8, 16, 32, 64, 128, 256)
    gap = quadrature_gap("MOD5", SVG5, returns, orders=orders)
    steps = [abs(gap[a] - gap[b]) for a, b in zip(orders, orders[1:])]
    assert all(b < a for a, b in zip(steps, steps[1:]))
    ref = quadrature_gap("MOD5", SVG5, returns, orders=(10, 64))
    print(f"|loglik(n=10) - loglik(n=64)| = {abs(ref[10] - ref[64]):.4f} on {len(returns)} obs")
    assert abs(ref[10] - ref[64]) < 2.0


def test_filter_blowup_is_minus_infinity(returns):
    p = object.__new__(HNParams)
    for k, v in {**SVG5.to_dict(), "beta1": 1e300}.items():
        object.__setattr__(p, k, v)
    assert loglik("MOD5", p, returns) == -math.inf


def test_loglik_input_checks():
    with pytest.raises(ValidationError):
        loglik("MOD1", SVG5, [0.01])
    with pytest.raises(ValidationError):
        HNParams(innovation="svg", k=0.01, svg_alpha=0.5)
    with pytest.raises(ValidationError):
        HNParams(innovation="normal", svg_alpha=0.1)


# --- LR arithmetic --------------------------------------------------------------

@pytest.mark.parametrize("restricted, full, df", LR_LADDER)
def test_lr_table(restricted, full, df):
    stat, p = lr_test(TABLE_LOGL[restricted], TABLE_LOGL[full], df)
    paper_stat, paper_p = TABLE4[(restricted, full)]
    assert stat == pytest.approx(paper_stat, abs=0.02)
    assert float(f"{p:.1e}") == pytest.approx(float(f"{paper_p:.1e}"), rel=0.021)


def test_lr_edge_cases():
    assert lr_test(100.0, 100.0) == (0.0, 1.0)
    assert lr_test(100.0, 100.0 - 1e-12)[0] == 0.0
    with pytest.raises(ConvergenceError):
        lr_test(100.0, 99.0)
    with pytest.raises(ValidationError):
        lr_test(1.0, 2.0, df=0)


# --- fitting ------------------------------------------------------------------

@pytest.fixture(scope="module")
def normal_data():
    p = HNParams(r=0.0, lam=2.0, alpha0=5e-6, alpha1=8e-6, beta1=0.7, gamma=150.0)
    return simulate_hn(p, 2000, seed=3, burn=200)


@pytest.fixture(scope="module")
def mod1_fit(normal_data):
    return fit("MOD1", normal_data)


def test_refit_is_fixed_point(normal_data, mod1_fit):
    again = fit("MOD1", normal_data, start=mod1_fit.values)
    assert abs(again.loglik - mod1_fit.loglik) < 1e-6


def test_mod2_dominates_mod1(normal_data, mod1_fit):
    mod2 = fit("MOD2", normal_data, config=FitConfig(n_starts=8))
    assert mod2.loglik >= mod1_fit.loglik - 1e-8
    stat, p = lr_test(mod1_fit, mod2)
    assert stat > 10 and p < 1e-3


def test_fit_result_is_serialisable(mod1_fit):
    d = json.loads(json.dumps(mod1_fit.to_dict()))
    assert d["model"] == "MOD1" and set(d["values"]) == set(MODELS["MOD1"])
    assert all(s > 0 for s in mod1_fit.stderr.values())
    assert mod1_fit.n_obs == 2000 and np.isfinite(mod1_fit.loglik)


def test_fit_rejects_bad_input():
    with pytest.raises(ValidationError):
        fit("MOD1", [0.01, float("nan"), 0.02])
    with pytest.raises(ValidationError):
        fit("MOD7", [0.01, 0.02, 0.03])


def test_fit_reports_boundary():
    # a permanent variance shift: the intercept of the variance recursion collapses to zero
    rng = np.random.default_rng(0)
    y = np.concatenate([0.003 * rng.standard_normal(750), 0.03 * rng.standard_normal(750)])
    res = fit("MOD1", y, config=FitConfig(n_starts=4))
    assert "alpha0" in res.boundary and res.params.alpha0 == 0.0
    assert res.stderr["alpha1"] > 0


# --- simulation-estimation recovery (20 seeds, shared with the acceptance suite) ---

@pytest.mark.slow
@pytest.mark.parametrize("seed", range(20))
def test_recovery_k(recovery, seed):
    res = recovery.fit(seed)
    assert abs(res.values["k"] - recovery.truth.k) <= 0.3


@pytest.mark.slow
def test_recovery_error_report(recovery):
    names = MODELS["MOD5"]
    rel = {n: [] for n in names}
    for seed in range(20):
        res = recovery.fit(seed)
        for n in names:
            rel[n].append(abs(res.values[n] / getattr(recovery.truth, n) - 1))
    med = {n: float(np.median(v)) for n, v in rel.items()}
    print("median absolute relative error:", {n: round(v, 3) for n, v in med.items()})
    # the variance-dynamics parameters are the sharply identified ones
    assert med["beta1"] < 0.1 and med["k"] < 0.1 and med["alpha1"] < 0.3
