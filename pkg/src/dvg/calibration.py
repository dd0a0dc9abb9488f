"""Calibration of risk-neutral parameters to option surfaces.

Models (all calibrated with the conditioning state h1 as a free latent
parameter, since a single day of option prices carries no filtered state):

    dvg          Esscher DVG: sigma, alpha0, alpha1, beta1, h1   (a = 1/(sigma^2 + lam^2))
    vg-static    the same with alpha0 = alpha1 = 0, beta1 = 1: sigma, h1
    gamma-garch  sigma = 0 with a compensated drift: lam, alpha0, alpha1, beta1, h1
    hn           Heston-Nandi risk-neutral: omega, alpha, beta, gamma, h1

Quotes are European calls.  A dividend yield q enters through the
prepaid forward S e^{-q T}; the model rate is the quote's per-step r.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .dynamics import QParams
from .errors import DVGError, ValidationError
from .hn import HNRiskNeutral
from .pricing import FourierConfig, call_bounds, price_fourier_strikes

__all__ = [
    "OptionQuote",
    "CalibrationConfig",
    "CalibrationResult",
    "CALIBRATION_MODELS",
    "loss",
    "filter_quotes",
    "model_prices",
    "build_model",
    "calibrate",
    "batch_calibrate",
    "parameter_dispersion",
    "write_results",
]

LOSS_KINDS = ("dollar-rmse", "pct-rmse")

CALIBRATION_MODELS = {
    "dvg": ("sigma", "alpha0", "alpha1", "beta1", "h1"),
    "vg-static": ("sigma", "h1"),
    "gamma-garch": ("lam", "alpha0", "alpha1", "beta1", "h1"),
    "hn": ("omega", "alpha", "beta", "gamma", "h1"),
}

# smooth objective: fixed panels instead of adaptive refinement
CALIBRATION_FOURIER = FourierConfig(u_max=200.0, panel_width=10.0, adaptive=False)


@dataclass(frozen=True)
class OptionQuote:
    date: str
    expiry: str
    steps: int
    strike: float
    mid: float
    spot: float
    rate: float = 0.0
    div_yield: float = 0.0

    def __post_init__(self):
        errors = []
        if not (isinstance(self.steps, (int, np.integer)) and self.steps >= 1):
            errors.append(f"steps must be an integer >= 1, got {self.steps!r}")
        for name in ("strike", "mid", "spot"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                errors.append(f"{name} must be a positive number, got {v!r}")
        if errors:
            raise ValidationError("invalid OptionQuote: " + "; ".join(errors), errors)

    @property
    def moneyness(self) -> float:
        return self.strike / self.spot

    def bounds(self):
        lo, hi = call_bounds(self.spot, self.strike, self.steps, self.rate, self.div_yield)
        return float(lo), float(hi)


def loss(kind: str, theo, mkt) -> float:
    """dollar-rmse: sqrt(mean((theo - mkt)^2)); pct-rmse: sqrt(mean(((theo - mkt) / mkt)^2))."""
    theo = np.asarray(theo, dtype=float)
    mkt = np.asarray(mkt, dtype=float)
    if theo.shape != mkt.shape:
        raise ValidationError(f"length mismatch: {theo.shape} vs {mkt.shape}")
    if theo.size == 0:
        raise ValidationError("no prices")
    resid = _residuals(kind, theo, mkt)
    return float(math.sqrt(np.mean(resid ** 2)))


def _residuals(kind, theo, mkt):
    if kind == "dollar-rmse":
        return theo - mkt
    if kind == "pct-rmse":
        if np.any(mkt <= 0):
            raise ValidationError("pct-rmse needs positive market prices")
        return (theo - mkt) / mkt
    raise ValidationError(f"unknown loss kind {kind!r}; expected one of {LOSS_KINDS}")


@dataclass
class CalibrationConfig:
    moneyness: tuple | None = (0.975, 1.025)
    seed: int = 0
    restarts: int = 1
    max_nfev: int = 400
    min_quotes: int = 5
    fourier: FourierConfig = CALIBRATION_FOURIER


@dataclass
class CalibrationResult:
    model: str
    names: tuple
    params: dict
    loss_kind: str
    loss: float
    residuals: np.ndarray
    theo: np.ndarray
    mkt: np.ndarray
    quotes: list
    converged: bool
    message: str = ""
    nfev: int = 0
    excluded: list = field(default_factory=list)
    bound_violations: int = 0

    @property
    def n_quotes(self) -> int:
        return len(self.quotes)

    def recomputed_loss(self) -> float:
        return loss(self.loss_kind, self.theo, self.mkt)


def filter_quotes(quotes, moneyness=(0.975, 1.025)):
    """Split quotes into (kept, excluded-with-reason) by no-arbitrage bounds and moneyness."""
    kept, excluded = [], []
    for q in quotes:
        lo, hi = q.bounds()
        if not lo <= q.mid <= hi:
            excluded.append((q, f"mid {q.mid} outside no-arbitrage bounds [{lo}, {hi}]"))
        elif moneyness is not None and not moneyness[0] <= q.moneyness <= moneyness[1]:
            excluded.append((q, f"moneyness {q.moneyness:.4f} outside {tuple(moneyness)}"))
        else:
            kept.append(q)
    return kept, excluded


def build_model(model_id: str, values: dict, r: float = 0.0):
    """Risk-neutral model object for ``values`` (keyed by the model's free parameters)."""
    v = dict(values)
    if model_id == "dvg":
        return QParams.identified(r=r, sigma=v["sigma"], alpha0=v["alpha0"], alpha1=v["alpha1"],
                                  beta1=v["beta1"], h1=v["h1"])
    if model_id == "vg-static":
        return QParams.identified(r=r, sigma=v["sigma"], alpha0=0.0, alpha1=0.0, beta1=1.0,
                                  h1=v["h1"])
    if model_id == "gamma-garch":
        return QParams.identified(r=r, sigma=0.0, alpha0=v["alpha0"], alpha1=v["alpha1"],
                                  beta1=v["beta1"], h1=v["h1"], lam=v["lam"])
    if model_id == "hn":
        return HNRiskNeutral(r=r, omega=v["omega"], alpha=v["alpha"], beta=v["beta"],
                             gamma=v["gamma"], h1=v["h1"])
    raise ValidationError(f"unknown calibration model {model_id!r}; "
                          f"expected one of {sorted(CALIBRATION_MODELS)}")


def model_prices(model_id: str, values: dict, quotes, config: FourierConfig | None = None):
    """Model call prices for ``quotes``; one Fourier inversion per (steps, rate, forward)."""
    cfg = config or CALIBRATION_FOURIER
    out = np.empty(len(quotes))
    groups = {}
    for i, q in enumerate(quotes):
        groups.setdefault((q.steps, q.rate, q.spot, q.div_yield), []).append(i)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for (steps, rate, spot, dy), idx in groups.items():
            model = build_model(model_id, values, rate)
            fwd_spot = spot * math.exp(-dy * steps)
            strikes = [quotes[i].strike for i in idx]
            out[idx] = price_fourier_strikes(model, fwd_spot, strikes, steps, "call",
                                             config=cfg)
    return out


# ---------------------------------------------------------------------------
# parameter scaling and starting values
# ---------------------------------------------------------------------------

def _bs_call(s, k, var, disc):
    from scipy.stats import norm
    sd = math.sqrt(var)
    d1 = (math.log(s / (k * disc)) + var / 2) / sd
    return s * norm.cdf(d1) - k * disc * norm.cdf(d1 - sd)


def _per_step_variance(quotes):
    """Black-Scholes implied variance per step of the quote closest to the money."""
    q = min(quotes, key=lambda q: abs(math.log(q.moneyness)) + 1e-9 * q.steps)
    s = q.spot * math.exp(-q.div_yield * q.steps)
    disc = math.exp(-q.rate * q.steps)
    lo, hi = 1e-12, 4.0
    if not _bs_call(s, q.strike, lo, disc) < q.mid < _bs_call(s, q.strike, hi, disc):
        return 1e-4
    var = optimize.brentq(lambda v: _bs_call(s, q.strike, v, disc) - q.mid, lo, hi)
    return var / q.steps


def _default_start(model_id: str, v: float) -> dict:
    s = math.sqrt(v)
    if model_id == "dvg":
        # one unit of Gamma shape per step, mild persistence around the implied level
        a = 1.0 / (v + v * v / 4)
        return {"sigma": s, "alpha0": 0.05 * v, "alpha1": 0.1 / a, "beta1": 0.85, "h1": v}
    if model_id == "vg-static":
        return {"sigma": s, "h1": v}
    if model_id == "gamma-garch":
        a = 1.0 / v
        return {"lam": -s, "alpha0": 0.05 * v, "alpha1": 0.1 / a, "beta1": 0.85, "h1": v}
    if model_id == "hn":
        # persistence beta + alpha gamma^2 = 0.9 around the implied level
        g = 200.0
        alpha = 0.2 / g ** 2
        return {"omega": max(0.1 * v - alpha, 0.01 * v), "alpha": alpha, "beta": 0.7,
                "gamma": g, "h1": v}
    raise ValidationError(f"unknown calibration model {model_id!r}")


def _scales(model_id: str, v: float) -> dict:
    s = math.sqrt(v)
    return {"sigma": s, "lam": s, "alpha0": v, "alpha1": v, "beta1": 1.0, "h1": v,
            "omega": v, "alpha": 1e-6, "beta": 1.0, "gamma": 100.0}


def _bounds(model_id: str, names, scales):
    lo, hi = [], []
    for n in names:
        if n == "sigma":
            lo.append(1e-6 * scales[n])
            hi.append(np.inf)
        elif n == "lam":
            lo.append(-np.inf)
            hi.append(-1e-6 * scales[n])
        elif n in ("beta1", "beta"):
            lo.append(0.0)
            hi.append(1.0)
        elif n == "gamma":
            lo.append(-np.inf)
            hi.append(np.inf)
        elif n == "h1":
            lo.append(1e-6 * scales[n])
            hi.append(np.inf)
        else:
            lo.append(0.0)
            hi.append(np.inf)
    sc = np.array([scales[n] for n in names])
    return np.array(lo) / sc, np.array(hi) / sc


# ---------------------------------------------------------------------------
# calibration
# ---------------------------------------------------------------------------

def calibrate(quotes, model_id: str = "dvg", loss_kind: str = "dollar-rmse",
              config: CalibrationConfig | None = None, start: dict | None = None
              ) -> CalibrationResult:
    """Minimise the chosen RMSE over the model's free parameters.

    Bounded trust-region least squares on scaled parameters, from ``start``
    (or a start built from the at-the-money implied variance) plus
    ``config.restarts`` randomly perturbed starts; the lowest loss wins.
    """
    cfg = config or CalibrationConfig()
    if model_id not in CALIBRATION_MODELS:
        raise ValidationError(f"unknown calibration model {model_id!r}; "
                              f"expected one of {sorted(CALIBRATION_MODELS)}")
    if loss_kind not in LOSS_KINDS:
        raise ValidationError(f"unknown loss kind {loss_kind!r}; expected one of {LOSS_KINDS}")
    kept, excluded = filter_quotes(list(quotes), cfg.moneyness)
    if len(kept) < cfg.min_quotes:
        raise ValidationError(f"need at least {cfg.min_quotes} usable quotes, got {len(kept)}")
    # a canonical order makes the objective independent of the input order
    kept.sort(key=lambda q: (q.steps, q.strike, q.rate, q.spot, q.div_yield, q.mid))
    names = CALIBRATION_MODELS[model_id]
    mkt = np.array([q.mid for q in kept])
    v = _per_step_variance(kept)
    base = dict(_default_start(model_id, v))
    if start:
        base.update({n: start[n] for n in names if n in start})
    scales = _scales(model_id, v)
    if "alpha1" in names:
        # alpha1 enters through alpha1 * a, its share of the persistence; scaling by 1 / a keeps
        # the optimiser's interior offsets negligible when the start has a very large shape
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            scales["alpha1"] = 1.0 / build_model(model_id, base).a
    sc = np.array([scales[n] for n in names])
    lo, hi = _bounds(model_id, names, scales)

    def values_of(x):
        return dict(zip(names, (x * sc).tolist()))

    def resid(x):
        try:
            theo = model_prices(model_id, values_of(x), kept, cfg.fourier)
        except (DVGError, FloatingPointError):
            return np.full(len(kept), 1e3)
        if not np.all(np.isfinite(theo)):
            return np.full(len(kept), 1e3)
        return _residuals(loss_kind, theo, mkt)

    x0 = np.clip(np.array([base[n] for n in names]) / sc, lo, hi)
    rng = np.random.default_rng(cfg.seed)
    starts = [x0]
    for _ in range(cfg.restarts):
        pert = x0 * np.exp(0.5 * rng.standard_normal(len(x0)))
        starts.append(np.clip(pert, lo, hi))

    best, nfev = None, 0
    for xs in starts:
        # least_squares wants a strictly interior start
        with np.errstate(invalid="ignore"):
            xs = np.where(xs <= lo, lo + 1e-9 * np.maximum(1, np.abs(lo)), xs)
            xs = np.where(xs >= hi, hi - 1e-9 * np.maximum(1, np.abs(hi)), xs)
        res = optimize.least_squares(resid, xs, bounds=(lo, hi), method="trf", x_scale=1.0,
                                     ftol=1e-14, xtol=1e-14, gtol=1e-14,
                                     max_nfev=cfg.max_nfev)
        nfev += res.nfev
        if best is None or res.cost < best.cost:
            best = res

    values = values_of(best.x)
    theo = model_prices(model_id, values, kept, cfg.fourier)
    lo_b, hi_b = call_bounds(np.array([q.spot for q in kept]), np.array([q.strike for q in kept]),
                             np.array([q.steps for q in kept]), np.array([q.rate for q in kept]),
                             np.array([q.div_yield for q in kept]))
    tol = 1e-10 * np.maximum(1.0, hi_b)
    violations = int(np.count_nonzero((theo < lo_b - tol) | (theo > hi_b + tol)))
    value = loss(loss_kind, theo, mkt)
    return CalibrationResult(model=model_id, names=names, params=values, loss_kind=loss_kind,
                             loss=value, residuals=theo - mkt, theo=theo, mkt=mkt, quotes=kept,
                             converged=bool(best.success), message=str(best.message),
                             nfev=nfev, excluded=excluded, bound_violations=violations)


def batch_calibrate(quotes, models=("dvg",), loss_kind: str = "dollar-rmse",
                    config: CalibrationConfig | None = None) -> dict:
    """Calibrate each day in date order, warm-starting from the previous day's optimum.

    Returns {model: [CalibrationResult, ...]}; days with too few usable quotes
    are skipped with a warning.
    """
    cfg = config or CalibrationConfig()
    by_day = {}
    for q in quotes:
        by_day.setdefault(q.date, []).append(q)
    out = {m: [] for m in models}
    for m in models:
        prev = None
        for day in sorted(by_day):
            kept, _ = filter_quotes(by_day[day], cfg.moneyness)
            if len(kept) < cfg.min_quotes:
                warnings.warn(f"{day}: {len(kept)} usable quotes, fewer than "
                              f"{cfg.min_quotes}; day skipped", stacklevel=2)
                continue
            res = calibrate(by_day[day], m, loss_kind, cfg, start=prev)
            prev = res.params
            out[m].append(res)
    return out


def parameter_dispersion(results) -> dict:
    """Sample standard deviation of each calibrated parameter across days."""
    results = list(results)
    if len(results) < 2:
        raise ValidationError("need at least two calibrations for a dispersion statistic")
    names = results[0].names
    return {n: float(np.std([r.params[n] for r in results], ddof=1)) for n in names}


def _fmt(x) -> str:
    return f"{x:.10g}"


def write_results(batch: dict, results_path, residuals_path) -> None:
    """Emit ``results.csv`` and ``residuals.csv`` for a batch calibration."""
    all_names = []
    for m in batch:
        for n in CALIBRATION_MODELS[m]:
            if n not in all_names:
                all_names.append(n)
    with open(results_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", "model", "loss_kind", "loss", "n_quotes", "converged"] + all_names)
        for m, results in batch.items():
            for r in results:
                row = [r.quotes[0].date, m, r.loss_kind, _fmt(r.loss), r.n_quotes,
                       int(r.converged)]
                row += [_fmt(r.params[n]) if n in r.params else "" for n in all_names]
                w.writerow(row)
    with open(residuals_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", "model", "expiry", "steps", "strike", "mid", "theo", "residual"])
        for m, results in batch.items():
            for r in results:
                for q, t, e in zip(r.quotes, r.theo, r.residuals):
                    w.writerow([q.date, m, q.expiry, q.steps, _fmt(q.strike), _fmt(q.mid),
                                _fmt(t), _fmt(e)])
