"""Maximum-likelihood estimation of the Heston-Nandi style model ladder.

    Y_t = r + lam V_t + sqrt(V_t) Z_t
    V_{t+1} = alpha0 + alpha1 (Z_t - gamma sqrt(V_t))^2 + beta1 V_t

with Z_t standard normal (MOD1, MOD2) or standardised VG (MOD3-MOD5):

    MOD1  normal,          gamma = 0
    MOD2  normal
    MOD3  SVG(0, k),       gamma = 0
    MOD4  SVG(0, k)
    MOD5  SVG(alpha, k)

``variant="printed"`` replaces gamma sqrt(V_t) by a plain gamma in the
variance update.  SVG log-densities come from Gauss-Laguerre quadrature of
the normal mixture.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import optimize, stats

from .errors import ConvergenceError, ValidationError
from .mixture import SVGParams, vg_logdensity, vg_sample

__all__ = [
    "HNParams",
    "FitConfig",
    "FitResult",
    "MODELS",
    "svg_logdensity",
    "filter_variance",
    "loglik",
    "fit",
    "lr_test",
    "simulate_hn",
    "quadrature_gap",
]

DENSITY_FLOOR = 1e-300
_LOG_2PI = math.log(2 * math.pi)

# free parameters of each model, in reporting order
MODELS = {
    "MOD1": ("lam", "alpha0", "alpha1", "beta1"),
    "MOD2": ("lam", "alpha0", "alpha1", "beta1", "gamma"),
    "MOD3": ("lam", "alpha0", "alpha1", "beta1", "k"),
    "MOD4": ("lam", "alpha0", "alpha1", "beta1", "gamma", "k"),
    "MOD5": ("lam", "alpha0", "alpha1", "beta1", "gamma", "k", "svg_alpha"),
}
_INNOVATION = {"MOD1": "normal", "MOD2": "normal", "MOD3": "svg-symmetric",
               "MOD4": "svg-symmetric", "MOD5": "svg"}


def _model(model_id: str):
    key = str(model_id).upper()
    if key not in MODELS:
        raise ValidationError(f"unknown model {model_id!r}; expected one of {sorted(MODELS)}")
    return key


@dataclass(frozen=True)
class HNParams:
    """Historical parameters; ``k`` and ``svg_alpha`` matter only for SVG innovations."""

    r: float = 0.0
    lam: float = 0.0
    alpha0: float = 1e-6
    alpha1: float = 1e-6
    beta1: float = 0.8
    gamma: float = 0.0
    innovation: str = "normal"
    k: float = 1.0
    svg_alpha: float = 0.0
    v1: float | None = None

    def __post_init__(self):
        errors = []
        for name in ("alpha0", "alpha1", "beta1"):
            if not getattr(self, name) >= 0:
                errors.append(f"{name} must be >= 0, got {getattr(self, name)}")
        if self.innovation not in ("normal", "svg-symmetric", "svg"):
            errors.append(f"unknown innovation {self.innovation!r}")
        if self.innovation != "normal" and not self.k > self.svg_alpha ** 2:
            errors.append(f"SVG needs k > alpha^2, got k={self.k}, alpha={self.svg_alpha}")
        if self.innovation != "svg" and self.svg_alpha != 0:
            errors.append("svg_alpha must be 0 unless innovation is 'svg'")
        if self.v1 is not None and not self.v1 > 0:
            errors.append(f"v1 must be > 0, got {self.v1}")
        if errors:
            raise ValidationError("invalid HNParams: " + "; ".join(errors), errors)

    @property
    def svg(self) -> SVGParams | None:
        if self.innovation == "normal":
            return None
        return SVGParams(alpha=self.svg_alpha, k=self.k)

    def for_model(self, model_id: str) -> "HNParams":
        """Apply the restrictions of ``model_id`` (gamma = 0, alpha = 0, normal)."""
        m = _model(model_id)
        names = MODELS[m]
        return replace(self, innovation=_INNOVATION[m],
                       gamma=self.gamma if "gamma" in names else 0.0,
                       svg_alpha=self.svg_alpha if "svg_alpha" in names else 0.0)

    def persistence(self, variant: str = "canonical") -> float:
        g2 = self.gamma ** 2
        return self.beta1 + self.alpha1 * g2 if variant == "canonical" else self.beta1

    def to_dict(self) -> dict:
        return {"r": self.r, "lam": self.lam, "alpha0": self.alpha0, "alpha1": self.alpha1,
                "beta1": self.beta1, "gamma": self.gamma, "innovation": self.innovation,
                "k": self.k, "svg_alpha": self.svg_alpha, "v1": self.v1}


def svg_logdensity(s: SVGParams, z, q=10, floor: float = DENSITY_FLOOR,
                   return_floored: bool = False):
    """Log of the quadrature approximation to the SVG(alpha, k) density.

    An integer ``q`` uses the rule matched to the Gamma(k) kernel; pass
    ``gauss_laguerre(n)`` for the classical rule.  Values below ``floor`` are
    raised to it before the log; ``return_floored`` also returns their count.
    """
    out = np.asarray(vg_logdensity(s.to_vg(), np.asarray(z, dtype=float), q))
    log_floor = math.log(floor)
    low = out < log_floor
    n_floored = int(np.count_nonzero(low))
    out = np.where(low, log_floor, out)
    out = out if out.ndim else float(out)
    return (out, n_floored) if return_floored else out


def filter_variance(params: HNParams, returns, variant: str = "canonical"):
    """Run the variance filter; returns (V, Z), or (None, None) if V turns non-positive."""
    y = np.asarray(returns, dtype=float)
    v = float(np.var(y)) if params.v1 is None else params.v1
    r, lam, a0, a1, b1, g = (params.r, params.lam, params.alpha0, params.alpha1,
                             params.beta1, params.gamma)
    canonical = variant == "canonical"
    V = np.empty(len(y))
    Z = np.empty(len(y))
    for t, yt in enumerate(y.tolist()):
        if not v > 0 or not math.isfinite(v):
            return None, None
        sv = math.sqrt(v)
        z = (yt - r - lam * v) / sv
        V[t] = v
        Z[t] = z
        e = z - g * sv if canonical else z - g
        v = a0 + a1 * e * e + b1 * v
    return V, Z


def _loglik(params, y, q, variant, floor=DENSITY_FLOOR):
    V, Z = filter_variance(params, y, variant)
    if V is None:
        return -math.inf, 0
    if params.innovation == "normal":
        with np.errstate(over="ignore"):
            dens = -0.5 * _LOG_2PI - 0.5 * Z * Z
        n_floored = 0
    else:
        dens, n_floored = svg_logdensity(params.svg, Z, q, floor, return_floored=True)
    return float(np.sum(dens) - 0.5 * np.sum(np.log(V))), n_floored


def loglik(model_id: str, params: HNParams, returns, q=10, variant: str = "canonical") -> float:
    """Log-likelihood of ``returns`` under ``model_id``; -inf if the variance filter fails."""
    y = np.asarray(returns, dtype=float)
    if y.ndim != 1 or len(y) < 2:
        raise ValidationError("need a one-dimensional return series with at least 2 points")
    return _loglik(params.for_model(model_id), y, q, variant)[0]


# ---------------------------------------------------------------------------
# fitting
# ---------------------------------------------------------------------------

@dataclass
class FitConfig:
    n_starts: int = 8
    seed: int = 0
    quad_order: int = 10
    variant: str = "canonical"
    v1: float | None = None
    screen_iter: int = 40
    maxiter: int = 1000
    perturbation: float = 0.3


@dataclass
class FitResult:
    model: str
    names: tuple
    params: HNParams
    loglik: float
    stderr: dict
    converged: bool
    message: str = ""
    boundary: list = field(default_factory=list)
    nfev: int = 0
    n_floored: int = 0
    n_obs: int = 0
    start_logliks: list = field(default_factory=list)

    @property
    def values(self) -> dict:
        return {n: getattr(self.params, n) for n in self.names}

    def to_dict(self) -> dict:
        return {"model": self.model, "names": list(self.names), "values": self.values,
                "stderr": self.stderr, "loglik": self.loglik, "converged": self.converged,
                "message": self.message, "boundary": self.boundary, "nfev": self.nfev,
                "n_floored": self.n_floored, "n_obs": self.n_obs,
                "params": self.params.to_dict()}


class _Problem:
    """Maps an optimizer vector (scaled, with alpha = rho sqrt(k)) to HNParams."""

    def __init__(self, model, y, r, cfg):
        self.model = model
        self.names = MODELS[model]
        self.y = y
        self.r = r
        self.cfg = cfg
        s2 = float(np.var(y))
        s = math.sqrt(s2)
        self.s2 = s2
        self.v1 = cfg.v1 if cfg.v1 is not None else s2
        canonical = cfg.variant == "canonical"
        self.scale = {"lam": 1.0, "alpha0": s2, "alpha1": s2, "beta1": 1.0,
                      "gamma": 1.0 / s if canonical else 1.0, "k": 1.0, "svg_alpha": 1.0}
        big = np.inf
        self.bounds = {"lam": (-big, big), "alpha0": (0.0, big), "alpha1": (0.0, big),
                       "beta1": (0.0, 0.9999), "gamma": (-big, big), "k": (0.05, 200.0),
                       "svg_alpha": (-0.99, 0.99)}
        self.rule = None
        self.base = HNParams(r=r, innovation=_INNOVATION[model], v1=self.v1)

    def to_params(self, x, natural=False):
        kw = {}
        for name, xi in zip(self.names, x):
            kw[name] = float(xi) if natural else float(xi) * self.scale[name]
        if "svg_alpha" in kw and not natural:
            kw["svg_alpha"] = kw["svg_alpha"] * math.sqrt(kw["k"])
        return kw

    def to_x(self, values: dict):
        out = []
        for name in self.names:
            v = values[name]
            if name == "svg_alpha":
                v = v / math.sqrt(values["k"])
            out.append(v / self.scale[name])
        return np.array(out)

    def value(self, kw: dict):
        # unvalidated evaluation, so finite differences may step outside the box
        p = object.__new__(HNParams)
        d = self.base.to_dict()
        d.update(kw)
        for key, v in d.items():
            object.__setattr__(p, key, v)
        if p.innovation != "normal" and not (p.k > 0 and p.k > p.svg_alpha ** 2):
            return -math.inf, 0
        return _loglik(p, self.y, self.cfg.quad_order, self.cfg.variant)

    def objective(self, x):
        ll, _ = self.value(self.to_params(x))
        return -ll / len(self.y) if math.isfinite(ll) else 1e10

    def box(self):
        out = []
        for name in self.names:
            lo, hi = self.bounds[name]
            sc = self.scale[name]
            if name in ("svg_alpha", "k", "beta1"):
                out.append((lo, hi))
            else:
                out.append((lo / sc if np.isfinite(lo) else None,
                            hi / sc if np.isfinite(hi) else None))
        return out

    def initial(self):
        y, r, s2 = self.y, self.r, self.s2
        has_gamma = "gamma" in self.names
        vals = {"lam": float(np.mean(y) - r) / s2, "k": 1.5, "svg_alpha": 0.0}
        if has_gamma:
            vals.update(beta1=0.6, alpha0=0.05 * s2, alpha1=0.05 * s2)
            if self.cfg.variant == "canonical":
                vals["gamma"] = math.sqrt(0.3 / (0.05 * s2))
            else:
                vals["gamma"] = 0.5
        else:
            vals.update(beta1=0.8, alpha0=0.1 * s2, alpha1=0.1 * s2)
        return self.to_x(vals)


def _hessian(f, x, steps):
    n = len(x)
    H = np.empty((n, n))
    f0 = f(x)
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = steps[i]
        H[i, i] = (f(x + ei) - 2 * f0 + f(x - ei)) / steps[i] ** 2
        for j in range(i):
            ej = np.zeros(n)
            ej[j] = steps[j]
            H[i, j] = H[j, i] = (f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej)
                                 + f(x - ei - ej)) / (4 * steps[i] * steps[j])
    return H


def _standard_errors(prob, values):
    """sqrt(diag(inverse observed information)) in natural units; NaN where undefined."""
    names = prob.names
    x = np.array([values[n] for n in names])
    scales = np.array([prob.scale[n] for n in names])
    steps = 1e-3 * scales * np.maximum(np.abs(x) / scales, 0.05)

    def ll(xn):
        return prob.value(prob.to_params(xn, natural=True))[0]

    H = _hessian(ll, x, steps)
    info = -H
    se = np.full(len(x), np.nan)
    if np.all(np.isfinite(info)):
        # invert on the scaled problem for conditioning
        D = np.diag(scales)
        try:
            cov_scaled = np.linalg.inv(D @ info @ D)
            diag = np.diag(D @ cov_scaled @ D)
            ok = diag > 0
            se[ok] = np.sqrt(diag[ok])
        except np.linalg.LinAlgError:
            pass
    return dict(zip(names, se.tolist()))


def fit(model_id: str, returns, r: float = 0.0, config: FitConfig | None = None,
        start: dict | HNParams | None = None) -> FitResult:
    """Maximise the log-likelihood with a screened multi-start L-BFGS-B search.

    Every start (the moment-matched point plus random perturbations of it)
    gets a short run; the best is then iterated to convergence.  Ties go to
    the higher likelihood, then the smaller parameter norm.
    """
    cfg = config or FitConfig()
    model = _model(model_id)
    y = np.asarray(returns, dtype=float)
    if y.ndim != 1 or len(y) < 2:
        raise ValidationError("need a one-dimensional return series with at least 2 points")
    if not np.all(np.isfinite(y)):
        raise ValidationError("returns contain non-finite values")
    prob = _Problem(model, y, r, cfg)
    box = prob.box()
    rng = np.random.default_rng(cfg.seed)

    x0 = prob.initial()
    starts = []
    if start is not None:
        vals = start.to_dict() if isinstance(start, HNParams) else dict(start)
        starts.append(prob.to_x({n: vals[n] for n in prob.names}))
    starts.append(x0)
    while len(starts) < max(cfg.n_starts, 1):
        starts.append(x0 * np.exp(cfg.perturbation * rng.standard_normal(len(x0))))

    def clip(x):
        lo = np.array([b[0] if b[0] is not None else -np.inf for b in box])
        hi = np.array([b[1] if b[1] is not None else np.inf for b in box])
        return np.clip(x, lo, hi)

    nfev = 0
    screened = []
    for x in starts:
        res = optimize.minimize(prob.objective, clip(x), method="L-BFGS-B", bounds=box,
                                options={"maxiter": cfg.screen_iter})
        nfev += res.nfev
        screened.append((res.fun, float(np.linalg.norm(res.x)), res.x))
    screened.sort(key=lambda t: (t[0], t[1]))
    best = optimize.minimize(prob.objective, screened[0][2], method="L-BFGS-B", bounds=box,
                             options={"maxiter": cfg.maxiter, "ftol": 1e-15, "gtol": 1e-9})
    nfev += best.nfev
    kw = prob.to_params(best.x)
    ll, n_floored = prob.value(kw)
    if not math.isfinite(ll):
        raise ConvergenceError(f"{model}: no start produced a finite likelihood")

    params = replace(prob.base, **kw)
    boundary = []
    for name, xi, (lo, hi) in zip(prob.names, best.x, box):
        if (lo is not None and xi - lo <= 1e-8 * max(1.0, abs(lo))) or \
           (hi is not None and hi - xi <= 1e-8 * max(1.0, abs(hi))):
            boundary.append(name)
    stderr = _standard_errors(prob, kw)
    return FitResult(model=model, names=prob.names, params=params, loglik=ll, stderr=stderr,
                     converged=bool(best.success), message=str(best.message),
                     boundary=boundary, nfev=nfev, n_floored=n_floored, n_obs=len(y),
                     start_logliks=[-f * len(y) for f, _, _ in screened])


# ---------------------------------------------------------------------------
# likelihood-ratio tests
# ---------------------------------------------------------------------------

# nested pairs compared in the LR table; MOD1 -> MOD3 swaps the innovation law,
# so its chi-square reference is heuristic
LR_LADDER = (("MOD1", "MOD2", 1), ("MOD1", "MOD3", 1), ("MOD2", "MOD4", 1), ("MOD4", "MOD5", 1))


def lr_test(restricted, full, df: int = 1):
    """(2 (logL_full - logL_restricted), chi-square upper-tail p-value)."""
    if df < 1:
        raise ValidationError(f"df must be >= 1, got {df}")
    l0 = restricted.loglik if isinstance(restricted, FitResult) else float(restricted)
    l1 = full.loglik if isinstance(full, FitResult) else float(full)
    stat = 2.0 * (l1 - l0)
    if stat < 0:
        if stat > -1e-9 * max(1.0, abs(l1)):
            stat = 0.0
        else:
            raise ConvergenceError(
                f"negative LR statistic {stat}: the full model fit is worse than the "
                "restricted one, refit it (e.g. starting from the restricted optimum)")
    return stat, float(stats.chi2.sf(stat, df))


# ---------------------------------------------------------------------------
# simulation
# ---------------------------------------------------------------------------

def simulate_hn(params: HNParams, T: int, seed: int = 0, variant: str = "canonical",
                burn: int = 0):
    """Simulate ``T`` returns; ``burn`` extra leading periods are discarded."""
    rng = np.random.default_rng(seed)
    n = T + burn
    if params.innovation == "normal":
        Z = rng.standard_normal(n)
    else:
        Z = vg_sample(params.svg.to_vg(), rng, n)
    v = params.v1 if params.v1 is not None else _long_run_variance(params, variant)
    y = np.empty(n)
    for t in range(n):
        sv = math.sqrt(v)
        y[t] = params.r + params.lam * v + sv * Z[t]
        e = Z[t] - params.gamma * sv if variant == "canonical" else Z[t] - params.gamma
        v = params.alpha0 + params.alpha1 * e * e + params.beta1 * v
    return y[burn:]


def _long_run_variance(params, variant):
    if variant == "canonical":
        p = params.beta1 + params.alpha1 * params.gamma ** 2
        c = params.alpha0 + params.alpha1
    else:
        p = params.beta1
        c = params.alpha0 + params.alpha1 * (1 + params.gamma ** 2)
    if p >= 1:
        raise ValidationError("non-stationary parameters: give v1 explicitly")
    return c / (1 - p)


def quadrature_gap(model_id, params, returns, orders=(10, 64), variant="canonical"):
    """loglik at each quadrature order, for monitoring convergence in n."""
    return {n: loglik(model_id, params, returns, n, variant) for n in orders}
