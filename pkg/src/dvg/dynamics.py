"""Dynamic Variance-Gamma state recursion and path simulation.

Log-returns follow

    Y_t = r + omega h_t + lam V_t + sigma sqrt(V_t) Z_t
    V_t | F_{t-1} ~ Gamma(a h_t, 1),   Z_t ~ N(0, 1)
    h_{t+1} = alpha0 + alpha1 V_t + beta1 h_t

with ``omega = 0`` under the historical measure.  Under a risk-neutral
measure ``omega`` is the compensator that makes exp(Y_t - r) a martingale;
for the Esscher measure ``lam = -sigma**2 / 2`` and the compensator vanishes.

``h1`` is the state that governs the first simulated return; when pricing at
time t the conditioning state is h_{t+1}.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, fields, replace

import numpy as np

from .errors import ValidationError

__all__ = [
    "DVGParams",
    "QParams",
    "PathSample",
    "step_state",
    "simulate",
    "terminal_log_return",
    "submodel",
    "stationary_mean",
    "conditional_variance",
]


class StationarityWarning(UserWarning):
    pass


def _check_dynamic(p, errors):
    if not p.a > 0:
        errors.append(f"a must be > 0, got {p.a}")
    if not p.sigma >= 0:
        errors.append(f"sigma must be >= 0, got {p.sigma}")
    for name in ("alpha0", "alpha1", "beta1"):
        if not getattr(p, name) >= 0:
            errors.append(f"{name} must be >= 0, got {getattr(p, name)}")
    if not p.h1 > 0:
        errors.append(f"h1 must be > 0, got {p.h1}")
    for f in fields(p):
        v = getattr(p, f.name)
        if isinstance(v, float) and not math.isfinite(v):
            errors.append(f"{f.name} must be finite, got {v}")


def _warn_stationarity(p):
    persistence = p.alpha1 * p.a + p.beta1
    if persistence >= 1 and (p.alpha0 > 0 or p.alpha1 > 0):
        warnings.warn(
            f"alpha1*a + beta1 = {persistence:.6g} >= 1: the state has no finite long-run mean",
            StationarityWarning, stacklevel=3)


@dataclass(frozen=True)
class DVGParams:
    """Historical-measure parameters.  ``sigma = 0`` is the Gamma-Garch submodel."""

    r: float = 0.0
    lam: float = 0.0
    sigma: float = 0.1
    a: float = 1.0
    alpha0: float = 0.0
    alpha1: float = 0.0
    beta1: float = 0.0
    h1: float = 1.0

    measure = "P"

    def __post_init__(self):
        errors = []
        _check_dynamic(self, errors)
        if errors:
            raise ValidationError("invalid DVGParams: " + "; ".join(errors), errors)
        _warn_stationarity(self)

    @classmethod
    def identified(cls, r, lam, sigma, alpha0, alpha1, beta1, h1):
        """Fix the redundant scale by a = 1/(sigma^2 + lam^2), so Var_{t-1}(Y_t) = h_t."""
        return cls(r=r, lam=lam, sigma=sigma, a=1.0 / (sigma ** 2 + lam ** 2),
                   alpha0=alpha0, alpha1=alpha1, beta1=beta1, h1=h1)

    @property
    def compensator(self) -> float:
        return 0.0


@dataclass(frozen=True)
class QParams:
    """Risk-neutral parameters.

    ``lam`` defaults to -sigma**2/2, the value produced by the Esscher
    transform.  It only needs to be given explicitly for ``sigma = 0``
    (the Gamma-Garch comparator) or other mean-correcting martingale
    measures, in which case the compensator ``a log(1 - lam - sigma^2/2)``
    is added to the drift.
    """

    r: float = 0.0
    sigma: float = 0.1
    a: float = 1.0
    alpha0: float = 0.0
    alpha1: float = 0.0
    beta1: float = 0.0
    h1: float = 1.0
    lam: float | None = None

    measure = "Q"

    def __post_init__(self):
        if self.lam is None:
            object.__setattr__(self, "lam", -self.sigma ** 2 / 2)
        errors = []
        _check_dynamic(self, errors)
        if not 1 - self.lam - self.sigma ** 2 / 2 > 0:
            errors.append("1 - lam - sigma^2/2 must be > 0 for E[exp(Y)] to exist")
        if errors:
            raise ValidationError("invalid QParams: " + "; ".join(errors), errors)
        _warn_stationarity(self)

    @classmethod
    def identified(cls, r, sigma, alpha0, alpha1, beta1, h1, lam=None):
        lam_ = -sigma ** 2 / 2 if lam is None else lam
        return cls(r=r, sigma=sigma, a=1.0 / (sigma ** 2 + lam_ ** 2), alpha0=alpha0,
                   alpha1=alpha1, beta1=beta1, h1=h1, lam=lam)

    @property
    def is_esscher(self) -> bool:
        return self.lam == -self.sigma ** 2 / 2

    @property
    def compensator(self) -> float:
        if self.is_esscher:
            return 0.0
        return self.a * math.log(1 - self.lam - self.sigma ** 2 / 2)


@dataclass(frozen=True, eq=False)
class PathSample:
    """Simulated paths; arrays have shape (n_paths, T) and column j is period t = j + 1."""

    Y: np.ndarray
    V: np.ndarray
    h: np.ndarray

    @property
    def n_paths(self) -> int:
        return self.Y.shape[0]

    @property
    def T(self) -> int:
        return self.Y.shape[1]

    def path(self, i: int) -> "PathSample":
        return PathSample(self.Y[i:i + 1], self.V[i:i + 1], self.h[i:i + 1])

    def log_price(self, s0: float = 1.0) -> np.ndarray:
        return math.log(s0) + np.cumsum(self.Y, axis=1)

    def to_csv(self, path) -> None:
        """Write columns t,Y,V,h (plus a leading ``path`` column for several paths)."""
        multi = self.n_paths > 1
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow((["path"] if multi else []) + ["t", "Y", "V", "h"])
            for i in range(self.n_paths):
                for j in range(self.T):
                    row = [j + 1, repr(float(self.Y[i, j])), repr(float(self.V[i, j])),
                           repr(float(self.h[i, j]))]
                    w.writerow(([i] if multi else []) + row)

    @classmethod
    def from_csv(cls, path) -> "PathSample":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        if not rows:
            raise ValidationError(f"{path}: no rows")
        pid = [int(r.get("path", 0)) for r in rows]
        n = max(pid) + 1
        T = len(rows) // n
        arr = {k: np.array([float(r[k]) for r in rows]).reshape(n, T) for k in ("Y", "V", "h")}
        return cls(**arr)


def step_state(params, h_t, V_t):
    """h_{t+1} = alpha0 + alpha1 V_t + beta1 h_t."""
    return params.alpha0 + params.alpha1 * V_t + params.beta1 * h_t


def stationary_mean(params) -> float:
    """Fixed point of E[h_{t+1}] = alpha0 + (alpha1 a + beta1) E[h_t]."""
    persistence = params.alpha1 * params.a + params.beta1
    if persistence >= 1:
        return math.inf if params.alpha0 > 0 else params.h1
    return params.alpha0 / (1 - persistence)


def conditional_variance(params, h):
    """Var_{t-1}(Y_t) = (sigma^2 + lam^2) a h_t."""
    return (params.sigma ** 2 + params.lam ** 2) * params.a * np.asarray(h)


def submodel(kind: str, base):
    """Restrict ``base`` to one of the nested models ``"iid-vg"`` or ``"gamma-garch"``."""
    if kind == "iid-vg":
        return replace(base, alpha0=0.0, alpha1=0.0, beta1=1.0)
    if kind == "gamma-garch":
        if isinstance(base, QParams):
            # keep the martingale: lam survives the restriction, the compensator absorbs it
            return replace(base, sigma=0.0, lam=base.lam)
        return replace(base, sigma=0.0)
    raise ValidationError(f"unknown submodel {kind!r}; expected 'iid-vg' or 'gamma-garch'")


def _run(params, T, n_paths, seed, h1, block_size, keep):
    if T < 1 or n_paths < 1:
        raise ValidationError(f"need T >= 1 and n_paths >= 1, got T={T}, n_paths={n_paths}")
    h_start = params.h1 if h1 is None else h1
    n_blocks = -(-n_paths // block_size)
    children = np.random.SeedSequence(seed).spawn(n_blocks)
    if keep:
        Y = np.empty((n_paths, T))
        V = np.empty((n_paths, T))
        H = np.empty((n_paths, T))
    total = np.zeros(n_paths)
    omega = params.compensator
    for b, child in enumerate(children):
        rng = np.random.Generator(np.random.PCG64(child))
        lo, hi = b * block_size, min((b + 1) * block_size, n_paths)
        m = hi - lo
        h = np.broadcast_to(np.asarray(h_start, dtype=float), (m,)).copy()
        acc = np.zeros(m)
        for t in range(T):
            v = rng.standard_gamma(params.a * h)
            z = rng.standard_normal(m)
            y = params.r + omega * h + params.lam * v + params.sigma * np.sqrt(v) * z
            if keep:
                H[lo:hi, t] = h
                V[lo:hi, t] = v
                Y[lo:hi, t] = y
            acc += y
            h = step_state(params, h, v)
        total[lo:hi] = acc
    if keep:
        return PathSample(Y=Y, V=V, h=H)
    return total


def simulate(params, T: int, n_paths: int = 1, seed: int = 0, h1=None,
             block_size: int = 10_000) -> PathSample:
    """Simulate ``n_paths`` independent paths of length ``T``.

    Paths are generated in blocks, each driven by its own child stream spawned
    from ``numpy.random.SeedSequence(seed)``, so results are reproducible and
    blocks could be farmed out independently.  Gamma variates come from
    numpy's Marsaglia-Tsang sampler (with the shape-boost for shape < 1).
    """
    return _run(params, T, n_paths, seed, h1, block_size, keep=True)


def terminal_log_return(params, T: int, n_paths: int, seed: int = 0, h1=None,
                        block_size: int = 10_000) -> np.ndarray:
    """log(S_T / S_0) for each path; same random streams as :func:`simulate`."""
    return _run(params, T, n_paths, seed, h1, block_size, keep=False)
