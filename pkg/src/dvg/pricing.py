"""European option prices under risk-neutral DVG (or any model with a terminal m.g.f.).

Fourier route (two-probability form):

    call = S_t P1 - K e^{-r tau} P2
    P_j  = 1/2 + 1/pi int_0^inf Re[e^{-iu ln K} f_j(u) / (iu)] du
    f_1(u) = phi(1 + iu) / phi(1),   f_2(u) = phi(iu),   phi(c) = E_t[S_T^c].

The integrals are evaluated with adaptive 15-point Gauss-Kronrod panels on
(0, u_max], extending u_max while the integrand envelope at the cut-off
exceeds the tail tolerance.  Puts follow from parity.

When the mixing shape of the first step is small, |phi(iu)| decays only as a
power of u and the two-probability tail cannot be certified.  The default
``method="auto"`` then falls back to the single-integral form on the line
Re c = 1/2,

    call = e^{-r tau} (E_t[S_T] - sqrt(K)/pi int_0^inf Re[K^{-iu} phi(1/2 + iu)] / (u^2 + 1/4) du),

whose integrand carries one more power of 1/u.

Monte Carlo route: simulate risk-neutral paths, average discounted payoffs
and report a normal confidence interval around the sample mean.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import stats

from .charfn import log_terminal_mgf
from .dynamics import terminal_log_return
from .errors import IntegrationError, ValidationError

__all__ = [
    "PricingRequest",
    "FourierConfig",
    "MCResult",
    "price_fourier",
    "price_fourier_strikes",
    "price_mc",
    "price_mc_strikes",
    "density_inversion",
    "gauss_kronrod_panels",
    "call_bounds",
]

# 15-point Kronrod extension of the 7-point Gauss rule on [-1, 1]
_XK = np.array([
    -0.991455371120812639206854697526329, -0.949107912342758524526189684047851,
    -0.864864423359769072789712788640926, -0.741531185599394439863864773280788,
    -0.586087235467691130294144845693013, -0.405845151377397166906606412076961,
    -0.207784955007898467600689403773245, 0.0,
    0.207784955007898467600689403773245, 0.405845151377397166906606412076961,
    0.586087235467691130294144845693013, 0.741531185599394439863864773280788,
    0.864864423359769072789712788640926, 0.949107912342758524526189684047851,
    0.991455371120812639206854697526329])
_WK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
    0.204432940075298892414161999234649, 0.190350578064785409913256402421014,
    0.169004726639267902826583426598550, 0.140653259715525918745189590510238,
    0.104790010322250183839876322541518, 0.063092092629978553290700663189204,
    0.022935322010529224963732008058970])
_WG = np.zeros(15)
_WG[1::2] = [0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
             0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
             0.381830050505118944950369775488975, 0.279705391489276667901467771423780,
             0.129484966168869693270611432679082]


@dataclass(frozen=True)
class FourierConfig:
    u_max: float = 200.0
    panel_width: float = 10.0
    tail_tol: float = 1e-10
    abs_tol: float = 1e-11
    max_u: float = 1e5
    max_panels: int = 20_000
    adaptive: bool = True
    method: str = "auto"
    lewis_max_u: float = 1e8
    tail_ratio: float = 2.0

    METHODS = ("auto", "gil-pelaez", "lewis")

    def __post_init__(self):
        if self.method not in self.METHODS:
            raise ValidationError(f"method must be one of {self.METHODS}, got {self.method!r}")


@dataclass(frozen=True)
class PricingRequest:
    spot: float
    strike: float
    steps: int
    model: object
    kind: str = "call"
    rate: float | None = None
    h: float | None = None

    def __post_init__(self):
        errors = []
        if not self.spot > 0:
            errors.append(f"spot must be > 0, got {self.spot}")
        if not self.strike > 0:
            errors.append(f"strike must be > 0, got {self.strike}")
        if not (isinstance(self.steps, (int, np.integer)) and self.steps >= 1):
            errors.append(f"steps must be an integer >= 1, got {self.steps!r}")
        if self.kind not in ("call", "put"):
            errors.append(f"kind must be 'call' or 'put', got {self.kind!r}")
        if errors:
            raise ValidationError("invalid PricingRequest: " + "; ".join(errors), errors)

    @property
    def priced_model(self):
        if self.rate is None or self.rate == self.model.r:
            return self.model
        return replace(self.model, r=self.rate)

    @property
    def state(self) -> float:
        return self.model.h1 if self.h is None else self.h


@dataclass(frozen=True)
class MCResult:
    price: float
    stderr: float
    lower: float
    upper: float
    n_paths: int
    level: float = 0.95

    def interval(self, level: float):
        z = stats.norm.ppf(0.5 + level / 2)
        return self.price - z * self.stderr, self.price + z * self.stderr


def gauss_kronrod_panels(f, a: float, b: float, width: float, abs_tol: float,
                         max_panels: int = 20_000, edges=None):
    """Adaptive GK15 integral of a vectorised ``f`` over [a, b].

    ``f`` maps an array of abscissae of shape (m,) to values of shape
    (m, ...); panels are bisected until each one's Kronrod-Gauss difference
    (worst case over the trailing axes) is below its share of ``abs_tol``.
    The initial panels have width ``width`` unless explicit ``edges`` are given.
    Returns (integral, error estimate, number of panels used).
    """
    if edges is None:
        n0 = max(1, int(math.ceil((b - a) / width)))
        edges = np.linspace(a, b, n0 + 1)
    todo = list(zip(edges[:-1], edges[1:]))
    total = None
    err_total = 0.0
    used = 0
    while todo:
        lo = np.array([p[0] for p in todo])
        hi = np.array([p[1] for p in todo])
        mid, half = (lo + hi) / 2, (hi - lo) / 2
        x = (mid[:, None] + half[:, None] * _XK[None, :]).ravel()
        vals = np.asarray(f(x))
        tail_shape = vals.shape[1:]
        vals = vals.reshape(len(todo), 15, -1)
        k15 = half[:, None] * np.einsum("pkm,k->pm", vals, _WK)
        g7 = half[:, None] * np.einsum("pkm,k->pm", vals, _WG)
        err = np.abs(k15 - g7).max(axis=1)
        share = abs_tol * (hi - lo) / (b - a)
        ok = (err <= share) | (half < 1e-12 * max(1.0, abs(b)))
        used += len(todo)
        if used > max_panels:
            raise IntegrationError(
                f"Gauss-Kronrod refinement exceeded {max_panels} panels on [{a}, {b}]; "
                f"worst panel error {err.max():.3e}")
        acc = k15[ok].sum(axis=0).reshape(tail_shape)
        total = acc if total is None else total + acc
        err_total += float(err[ok].sum())
        todo = [(l, m) for l, m, good in zip(lo, mid, ok) if not good] + \
               [(m, h) for m, h, good in zip(mid, hi, ok) if not good]
    return total, err_total, used


def _fixed_panels(f, a, b, width):
    n0 = max(1, int(math.ceil((b - a) / width)))
    edges = np.linspace(a, b, n0 + 1)
    mid, half = (edges[:-1] + edges[1:]) / 2, np.diff(edges) / 2
    x = (mid[:, None] + half[:, None] * _XK[None, :]).ravel()
    w = (half[:, None] * _WK[None, :]).ravel()
    vals = f(x)
    return np.tensordot(w, vals, axes=(0, 0))


def _envelope(model, spot, h, steps, u, log_phi1):
    lp = log_terminal_mgf(model, spot, h, steps, np.array([1j * u, 1 + 1j * u])).real
    return max(math.exp(lp[1] - log_phi1), math.exp(lp[0])) / u


def _lewis_tail(model, spot, h, steps, u, log_phi1):
    # |phi(1/2 + iu)| <= phi(1)^{1/2}; with a non-increasing modulus the
    # truncated tail int_u^inf |phi| / v^2 dv is at most |phi(1/2 + iu)| / u
    lp = log_terminal_mgf(model, spot, h, steps, np.array([0.5 + 1j * u])).real[0]
    return math.exp(lp - log_phi1 / 2) / u


def _cutoff(model, spot, h, steps, cfg, log_phi1, envelope=_envelope, max_u=None):
    max_u = cfg.max_u if max_u is None else max_u
    u_max = cfg.u_max
    env = envelope(model, spot, h, steps, u_max, log_phi1)
    while env > cfg.tail_tol:
        if u_max >= max_u:
            raise IntegrationError(
                f"characteristic function still {env:.3e} at u={u_max:g}; "
                f"tail tolerance {cfg.tail_tol:g} not reached (horizon {steps})")
        u_max = min(2 * u_max, max_u)
        env = envelope(model, spot, h, steps, u_max, log_phi1)
    return u_max


def _integrate(integrand, u_max, cfg):
    if cfg.adaptive:
        return gauss_kronrod_panels(integrand, 0.0, u_max, cfg.panel_width, cfg.abs_tol,
                                    cfg.max_panels)
    return (_fixed_panels(integrand, 0.0, u_max, cfg.panel_width), float("nan"),
            int(math.ceil(u_max / cfg.panel_width)))


def _gil_pelaez_calls(model, spot, strikes, steps, h, cfg, log_phi1):
    log_k = np.log(strikes)

    def integrand(u):
        # one recursion for both arguments
        lp = log_terminal_mgf(model, spot, h, steps, np.concatenate([1 + 1j * u, 1j * u]))
        lp1, lp2 = lp[:len(u)] - log_phi1, lp[len(u):]
        phase = np.exp(-1j * u[:, None] * log_k[None, :])
        iu = (1j * u)[:, None]
        f1 = (phase * np.exp(lp1)[:, None] / iu).real
        f2 = (phase * np.exp(lp2)[:, None] / iu).real
        return np.stack([f1, f2], axis=-1)

    u_max = _cutoff(model, spot, h, steps, cfg, float(np.real(log_phi1)))
    integral, err, panels = _integrate(integrand, u_max, cfg)
    p1 = 0.5 + integral[:, 0] / math.pi
    p2 = 0.5 + integral[:, 1] / math.pi
    call = spot * p1 - strikes * math.exp(-model.r * steps) * p2
    return call, {"method": "gil-pelaez", "u_max": u_max, "error": err, "panels": panels,
                  "P1": p1, "P2": p2}


def _lewis_calls(model, spot, strikes, steps, h, cfg, log_phi1):
    log_phi1 = float(np.real(log_phi1))
    log_k = np.log(strikes)

    def integrand(u):
        lp = log_terminal_mgf(model, spot, h, steps, 0.5 + 1j * u) - log_phi1 / 2
        g = np.exp(lp[:, None] - 1j * u[:, None] * log_k[None, :]).real
        return g / (u * u + 0.25)[:, None]

    u_max = _cutoff(model, spot, h, steps, cfg, log_phi1, _lewis_tail, cfg.lewis_max_u)
    core = min(u_max, cfg.u_max)
    integral, err, panels = _integrate(integrand, core, cfg)
    if u_max > core:
        # beyond the core range the integrand is a slowly decaying power of u: geometric
        # panels, bisected where the oscillation of K^{-iu} needs resolving
        n = int(math.ceil(math.log(u_max / core) / math.log(cfg.tail_ratio)))
        edges = np.geomspace(core, u_max, n + 1)
        tail, t_err, t_panels = gauss_kronrod_panels(integrand, core, u_max, 0.0, cfg.abs_tol,
                                                     10 * cfg.max_panels, edges=edges)
        integral, err, panels = integral + tail, err + t_err, panels + t_panels
    disc = math.exp(-model.r * steps)
    call = disc * math.exp(log_phi1) * (1 - np.sqrt(strikes) * math.exp(-log_phi1 / 2)
                                        * integral / math.pi)
    return call, {"method": "lewis", "u_max": u_max, "error": err, "panels": panels,
                  "P1": None, "P2": None}


def price_fourier_strikes(model, spot: float, strikes, steps: int, kind: str = "call",
                          h: float | None = None, config: FourierConfig | None = None,
                          return_diagnostics: bool = False):
    """Prices for several strikes sharing one maturity and one characteristic function."""
    cfg = config or FourierConfig()
    h = model.h1 if h is None else h
    strikes = np.atleast_1d(np.asarray(strikes, dtype=float))
    log_phi1 = log_terminal_mgf(model, spot, h, steps, 1.0 + 0j)
    if cfg.method == "lewis":
        call, diag = _lewis_calls(model, spot, strikes, steps, h, cfg, log_phi1)
    else:
        try:
            call, diag = _gil_pelaez_calls(model, spot, strikes, steps, h, cfg, log_phi1)
        except IntegrationError as exc:
            if cfg.method != "auto":
                raise
            try:
                call, diag = _lewis_calls(model, spot, strikes, steps, h, cfg, log_phi1)
            except IntegrationError as exc2:
                raise IntegrationError(f"{exc}; single-integral fallback: {exc2}") from exc2
    out = call if kind == "call" else call - spot + strikes * math.exp(-model.r * steps)
    if return_diagnostics:
        return out, diag
    return out


def call_bounds(spot, strike, steps, rate=0.0, div_yield=0.0):
    """Static no-arbitrage bounds max(S e^{-qT} - K e^{-rT}, 0) <= call <= S e^{-qT}."""
    fwd_spot = np.asarray(spot) * np.exp(-np.asarray(div_yield) * np.asarray(steps))
    disc_strike = np.asarray(strike) * np.exp(-np.asarray(rate) * np.asarray(steps))
    lower = np.maximum(fwd_spot - disc_strike, 0.0)
    return lower, fwd_spot


def price_fourier(req: PricingRequest, config: FourierConfig | None = None) -> float:
    model = req.priced_model
    return float(price_fourier_strikes(model, req.spot, [req.strike], req.steps, req.kind,
                                       req.state, config)[0])


def _mc_from_payoffs(disc_payoff, level=0.95) -> MCResult:
    n = disc_payoff.shape[0]
    price = float(disc_payoff.mean())
    stderr = float(disc_payoff.std(ddof=1) / math.sqrt(n))
    z = stats.norm.ppf(0.5 + level / 2)
    return MCResult(price=price, stderr=stderr, lower=price - z * stderr,
                    upper=price + z * stderr, n_paths=n, level=level)


def price_mc_strikes(model, spot: float, strikes, steps: int, n_paths: int = 100_000,
                     seed: int = 0, kind: str = "call", h: float | None = None,
                     level: float = 0.95) -> list[MCResult]:
    """Monte Carlo prices for several strikes from one set of simulated paths."""
    if n_paths < 100:
        raise ValidationError(f"n_paths must be >= 100, got {n_paths}")
    x = terminal_log_return(model, steps, n_paths, seed=seed, h1=h)
    s_T = spot * np.exp(x)
    disc = math.exp(-model.r * steps)
    out = []
    for K in np.atleast_1d(strikes):
        payoff = np.maximum(s_T - K, 0.0) if kind == "call" else np.maximum(K - s_T, 0.0)
        out.append(_mc_from_payoffs(disc * payoff, level))
    return out


def price_mc(req: PricingRequest, n_paths: int = 100_000, seed: int = 0,
             level: float = 0.95) -> MCResult:
    return price_mc_strikes(req.priced_model, req.spot, [req.strike], req.steps, n_paths,
                            seed, req.kind, req.state, level)[0]


def density_inversion(model, steps: int, x, s_t: float = 1.0, h: float | None = None,
                      config: FourierConfig | None = None, neg_tol: float = 1e-4):
    """Density of log S_T on the grid ``x`` by inverting E_t[S_T^{iu}].

    f(x) = 1/pi int_0^inf Re[e^{-iux} phi(iu)] du.  Raises if the result has
    negative lobes deeper than ``neg_tol`` (the grid or u-range is too coarse).
    """
    cfg = config or FourierConfig()
    h = model.h1 if h is None else h
    x = np.atleast_1d(np.asarray(x, dtype=float))
    u_max = cfg.u_max
    while math.exp(log_terminal_mgf(model, s_t, h, steps, 1j * u_max).real) > cfg.tail_tol:
        if u_max >= cfg.max_u:
            raise IntegrationError(
                f"|phi(iu)| has not decayed below {cfg.tail_tol:g} by u={u_max:g}")
        u_max = min(2 * u_max, cfg.max_u)

    def integrand(u):
        lp = log_terminal_mgf(model, s_t, h, steps, 1j * u)
        return (np.exp(lp[:, None] - 1j * u[:, None] * x[None, :])).real

    integral, _, _ = gauss_kronrod_panels(integrand, 0.0, u_max, cfg.panel_width,
                                          cfg.abs_tol, cfg.max_panels)
    f = integral / math.pi
    if np.min(f) < -neg_tol:
        raise IntegrationError(
            f"inverted density has a negative lobe {np.min(f):.3e}; refine the grid or u-range")
    return f
