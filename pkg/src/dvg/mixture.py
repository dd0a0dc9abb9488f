"""Variance-Gamma normal variance-mean mixtures.

A VG variable is built as

    Y = mu0 + mu * V + sigma * sqrt(V) * Z,   V ~ Gamma(a, rate=b),  Z ~ N(0, 1)

and its moment generating function is available in closed form,

    M(c) = exp(c * mu0) * (b / (b - c*mu - c**2 * sigma**2 / 2)) ** a.

The density has no elementary form, so it is evaluated as a finite mixture of
normals: the Gamma integral is replaced by a Gauss-Laguerre rule.  The rule
may carry a generalised weight ``u**alpha * exp(-u)``; choosing
``alpha = a - 1`` absorbs the whole Gamma kernel into the weights and the
resulting mixture probabilities sum to one exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammaln, logsumexp

from .errors import BranchCutError, ConvergenceError, DomainError, ValidationError

__all__ = [
    "VGParams",
    "SVGParams",
    "QuadratureRule",
    "gauss_laguerre",
    "laguerre_eval",
    "vg_mgf",
    "vg_log_mgf",
    "vg_density",
    "vg_logdensity",
    "vg_moments",
    "vg_sample",
    "shifted_gamma_density",
]

# relative distance to the negative real axis below which a complex power is refused
BRANCH_TOL = 1e-12


@dataclass(frozen=True)
class VGParams:
    """Static VG parameters; ``b`` is a rate, so E[V] = a / b."""

    mu0: float = 0.0
    mu: float = 0.0
    sigma: float = 1.0
    a: float = 1.0
    b: float = 1.0

    def __post_init__(self):
        errors = []
        if not self.sigma >= 0:
            errors.append(f"sigma must be >= 0, got {self.sigma}")
        if not self.a > 0:
            errors.append(f"a must be > 0, got {self.a}")
        if not self.b > 0:
            errors.append(f"b must be > 0, got {self.b}")
        if errors:
            raise ValidationError("invalid VGParams: " + "; ".join(errors), errors)

    def sum_of(self, n: int) -> "VGParams":
        """Law of the sum of ``n`` i.i.d. copies."""
        return VGParams(n * self.mu0, self.mu, self.sigma, n * self.a, self.b)


@dataclass(frozen=True)
class SVGParams:
    """Standardised VG: mean 0, variance 1, asymmetry ``alpha`` and shape ``k``."""

    alpha: float = 0.0
    k: float = 1.0

    def __post_init__(self):
        if not self.k > 0:
            raise ValidationError(f"k must be > 0, got {self.k}")
        if not self.k > self.alpha ** 2:
            raise ValidationError(
                f"SVG requires k > alpha**2, got k={self.k}, alpha={self.alpha}")

    @property
    def sigma(self) -> float:
        return math.sqrt(1.0 - self.alpha ** 2 / self.k)

    def to_vg(self) -> VGParams:
        return VGParams(mu0=-self.alpha, mu=self.alpha, sigma=self.sigma, a=self.k, b=self.k)

    @property
    def skewness(self) -> float:
        return self.alpha * (3 * self.k - self.alpha ** 2) / self.k ** 2

    @property
    def kurtosis(self) -> float:
        # re-derived from the m.g.f.; see vg_moments
        k, a2 = self.k, self.alpha ** 2
        return 3.0 * (1.0 + (2 * a2 ** 2 + (k - a2) * (k + 3 * a2)) / k ** 3)


# ---------------------------------------------------------------------------
# Gauss-Laguerre quadrature
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Gauss-Laguerre rule for the probability weight u**alpha e**-u / Gamma(alpha+1).

    For ``alpha = 0`` this is the classical rule and ``weights`` are the usual
    Gauss-Laguerre weights.  For other ``alpha`` the weights are divided by
    Gamma(alpha + 1) so they always sum to one, which keeps them finite for
    very large ``alpha``.
    """

    nodes: np.ndarray
    weights: np.ndarray
    alpha: float = 0.0

    @property
    def order(self) -> int:
        return len(self.nodes)

    @property
    def log_weights(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.weights)

    def integrate(self, f) -> float:
        """Approximate E[f(U)] for U ~ Gamma(alpha + 1, 1)."""
        return float(np.dot(self.weights, f(self.nodes)))

    def to_text(self) -> str:
        lines = [f"# gauss-laguerre n={self.order} alpha={self.alpha!r}"]
        lines += [f"{float(x)!r} {float(w)!r}" for x, w in zip(self.nodes, self.weights)]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "QuadratureRule":
        alpha = 0.0
        rows = []
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                for tok in line[1:].split():
                    if tok.startswith("alpha="):
                        alpha = float(tok[6:])
                continue
            x, w = line.split()
            rows.append((float(x), float(w)))
        arr = np.array(rows, dtype=float)
        return cls(nodes=arr[:, 0].copy(), weights=arr[:, 1].copy(), alpha=alpha)


_RESCALE = 1e150


def laguerre_eval(n: int, x, alpha: float = 0.0):
    """Return (log|L_n|, sign L_n, L_n / L_{n-1}) of the generalised Laguerre polynomial.

    Uses the three-term recurrence with periodic rescaling so that
    ``n`` in the hundreds does not overflow.
    """
    x = np.asarray(x, dtype=float)
    p_prev = np.zeros_like(x)
    p = np.ones_like(x)
    log_scale = np.zeros_like(x)
    for j in range(1, n + 1):
        p_prev, p = p, ((2 * j - 1 + alpha - x) * p - (j - 1 + alpha) * p_prev) / j
        big = np.abs(p) > _RESCALE
        if np.any(big):
            p = np.where(big, p / _RESCALE, p)
            p_prev = np.where(big, p_prev / _RESCALE, p_prev)
            log_scale = log_scale + np.where(big, math.log(_RESCALE), 0.0)
    with np.errstate(divide="ignore"):
        return np.log(np.abs(p)) + log_scale, np.sign(p), p / p_prev if n else p


def _initial_guess(i: int, n: int, alpha: float, roots: list) -> float:
    # standard asymptotic starting values (Stroud & Secrest)
    if i == 0:
        return (1 + alpha) * (3 + 0.92 * alpha) / (1 + 2.4 * n + 1.8 * alpha)
    if i == 1:
        return roots[0] + (15 + 6.25 * alpha) / (1 + 0.9 * alpha + 2.5 * n)
    ai = i - 1
    step = ((1 + 2.55 * ai) / (1.9 * ai) + 1.26 * ai * alpha / (1 + 3.5 * ai)) / (1 + 0.3 * alpha)
    return roots[i - 1] + step * (roots[i - 1] - roots[i - 2])


def _laguerre_ratio(z: float, n: int, alpha: float):
    p1, p2 = 1.0, 0.0
    for j in range(1, n + 1):
        p2, p1 = p1, ((2 * j - 1 + alpha - z) * p1 - (j - 1 + alpha) * p2) / j
        if abs(p1) > _RESCALE:
            p1 /= _RESCALE
            p2 /= _RESCALE
    return p1, p2


def _newton_root(z: float, n: int, alpha: float, found=(), maxit: int = 100) -> float:
    # Newton on L_n deflated by the roots already found, so it cannot fall back onto them
    last = math.inf
    for _ in range(maxit):
        p1, p2 = _laguerre_ratio(z, n, alpha)
        if p1 == 0.0:
            return z
        # x L_n' = n L_n - (n + alpha) L_{n-1}
        dlog = (n * p1 - (n + alpha) * p2) / (z * p1)
        dlog -= sum(1.0 / (z - r) for r in found)
        dz = 1.0 / dlog
        z_new = z - dz
        if z_new <= 0:
            z_new = z / 2
        step = abs(dz)
        if step <= 1e-14 * z_new:
            return z_new
        if step < 1e-10 * z_new and step >= last:
            # step no longer shrinks: sitting in the rounding noise of L_n
            return z_new
        last = step
        z = z_new
    raise ConvergenceError(
        f"Laguerre Newton iteration did not converge: n={n}, alpha={alpha}, root index "
        f"{len(found)}, last z={z!r}")


def _roots_from_guesses(n: int, alpha: float) -> np.ndarray:
    roots: list[float] = []
    for i in range(n):
        z = _initial_guess(i, n, alpha, roots)
        if roots and z <= roots[-1]:
            z = roots[-1] * 1.01 + 1e-3
        roots.append(_newton_root(z, n, alpha, roots))
    x = np.array(roots)
    if np.any(np.diff(x) <= 0):
        raise ConvergenceError(f"Laguerre roots for n={n}, alpha={alpha} are not strictly increasing")
    return x


def _roots_from_jacobi(n: int, alpha: float) -> np.ndarray:
    # eigenvalues of the Jacobi matrix as starting values, then Newton polish
    i = np.arange(n)
    diag = 2 * i + alpha + 1
    off = np.sqrt(np.arange(1, n) * (np.arange(1, n) + alpha))
    seeds = np.linalg.eigvalsh(np.diag(diag) + np.diag(off, 1) + np.diag(off, -1))
    x = np.array([_newton_root(float(z), n, alpha) for z in seeds])
    if np.any(np.diff(x) <= 0):
        raise ConvergenceError(f"Laguerre roots for n={n}, alpha={alpha} are not strictly increasing")
    return x


@lru_cache(maxsize=256)
def _gauss_laguerre_cached(n: int, alpha: float):
    try:
        x = _roots_from_guesses(n, alpha)
    except ConvergenceError:
        # the asymptotic starting values degrade for very large alpha
        x = _roots_from_jacobi(n, alpha)
    log_l, _, _ = laguerre_eval(n + 1, x, alpha)
    log_w = (gammaln(n + alpha + 1) - gammaln(n + 1) - gammaln(alpha + 1)
             + np.log(x) - 2 * math.log(n + 1) - 2 * log_l)
    w = np.exp(log_w)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_laguerre(n: int, alpha: float = 0.0) -> QuadratureRule:
    """n-point Gauss-Laguerre rule.

    Nodes are the roots of L_n^(alpha), found by Newton iteration on the
    three-term recurrence.  Weights follow

        w_i = Gamma(n+alpha+1) / (n! Gamma(alpha+1)) * x_i / ((n+1)**2 L_{n+1}(x_i)**2),

    which for ``alpha = 0`` is the familiar x_i / ((n+1)^2 L_{n+1}(x_i)^2).
    Weights of far nodes underflow to zero for n above roughly 180.
    """
    if not isinstance(n, (int, np.integer)) or not 1 <= n <= 256:
        raise ValidationError(f"quadrature order must be an integer in [1, 256], got {n!r}")
    if not alpha > -1:
        raise ValidationError(f"alpha must be > -1, got {alpha}")
    x, w = _gauss_laguerre_cached(int(n), float(alpha))
    return QuadratureRule(nodes=x, weights=w, alpha=float(alpha))


def _resolve_rule(q, shape: float) -> QuadratureRule:
    if isinstance(q, QuadratureRule):
        return q
    return gauss_laguerre(int(q), shape - 1.0)


# ---------------------------------------------------------------------------
# m.g.f. and moments
# ---------------------------------------------------------------------------

def _check_branch(z, what="argument"):
    z = np.asarray(z)
    bad = (z.real <= 0) & (np.abs(z.imag) <= BRANCH_TOL * np.maximum(np.abs(z), 1e-300))
    if np.any(bad):
        offending = z[bad].ravel()[0] if z.ndim else z
        raise BranchCutError(f"{what} {complex(offending)} lies on the principal branch cut",
                             argument=complex(offending))


def vg_log_mgf(p: VGParams, c):
    """Principal-branch log of the VG m.g.f.; accepts real or complex, scalar or array."""
    c_arr = np.asarray(c)
    denom = p.b - c_arr * p.mu - c_arr ** 2 * p.sigma ** 2 / 2
    if not np.iscomplexobj(c_arr):
        if np.any(denom <= 0):
            bad = c_arr[denom <= 0].ravel()[0] if c_arr.ndim else c_arr
            raise DomainError(
                f"m.g.f. does not exist at c={float(bad)}: b - c*mu - c^2 sigma^2/2 <= 0")
        out = c_arr * p.mu0 - p.a * np.log(denom / p.b)
    else:
        _check_branch(denom, "b - c*mu - c^2 sigma^2/2 =")
        # numpy's complex-by-real division is not exact, so split the parts
        out = c_arr * p.mu0 - p.a * np.log(denom.real / p.b + 1j * (denom.imag / p.b))
    return out if c_arr.ndim else out[()]


def vg_mgf(p: VGParams, c):
    """exp(c mu0) * (b / (b - c mu - c^2 sigma^2 / 2))**a."""
    out = np.exp(vg_log_mgf(p, c))
    if np.ndim(out) == 0:
        return complex(out) if np.iscomplexobj(out) else float(out)
    return out


def vg_moments(p: VGParams):
    """Mean, variance, skewness and (non-excess) kurtosis.

    The kurtosis numerator uses 4 b sigma^2 mu^2; the cross term follows from
    the fourth cumulant 6 a (mu^4 + 2 b sigma^2 mu^2 + b^2 sigma^4 / 2) / b^4.
    """
    mu, s2, a, b = p.mu, p.sigma ** 2, p.a, p.b
    spread = mu ** 2 + b * s2
    mean = p.mu0 + a * mu / b
    var = a * spread / b ** 2
    if spread == 0:
        return mean, var, 0.0, 3.0
    skew = mu * (2 * mu ** 2 + 3 * b * s2) / (math.sqrt(a) * spread ** 1.5)
    kurt = 3 * (1 + (2 * mu ** 4 + b ** 2 * s2 ** 2 + 4 * b * s2 * mu ** 2) / (a * spread ** 2))
    return mean, var, skew, kurt


# ---------------------------------------------------------------------------
# density
# ---------------------------------------------------------------------------

def shifted_gamma_density(p: VGParams, y):
    """Density of mu0 + mu * Gamma(a, b): the sigma = 0 member of the family."""
    y = np.asarray(y, dtype=float)
    if p.mu == 0:
        raise DomainError("sigma = 0 and mu = 0 gives a point mass, which has no density")
    v = (y - p.mu0) / p.mu
    out = np.zeros_like(v)
    pos = v > 0
    vp = v[pos]
    out[pos] = np.exp(p.a * math.log(p.b) + (p.a - 1) * np.log(vp) - p.b * vp
                      - gammaln(p.a)) / abs(p.mu)
    return out if out.ndim else out[()]


def vg_logdensity(p: VGParams, y, q=64):
    """Log of the quadrature approximation to the VG density.

    ``q`` is either a :class:`QuadratureRule` or an order; an order builds the
    rule with ``alpha = a - 1`` so that the Gamma kernel is integrated exactly.
    Far tails may return ``-inf`` when every mixture component underflows.
    """
    y = np.asarray(y, dtype=float)
    if p.sigma == 0:
        with np.errstate(divide="ignore"):
            return np.log(shifted_gamma_density(p, y))
    rule = _resolve_rule(q, p.a)
    x = rule.nodes
    # u = b s turns the Gamma(a, b) kernel into u^(a-1) e^-u / Gamma(a)
    log_mass = (rule.log_weights + gammaln(rule.alpha + 1) - gammaln(p.a)
                + (p.a - 1 - rule.alpha) * np.log(x))
    s = x / p.b
    var = p.sigma ** 2 * s
    resid = y[..., None] - p.mu0 - p.mu * s
    with np.errstate(over="ignore"):
        log_comp = -0.5 * np.log(2 * np.pi * var) - resid ** 2 / (2 * var)
    out = logsumexp(log_mass + log_comp, axis=-1)
    return out if out.ndim else float(out)


def vg_density(p: VGParams, y, q=64):
    """VG density at ``y``; see :func:`vg_logdensity` for the quadrature choice."""
    if p.sigma == 0:
        return shifted_gamma_density(p, y)
    out = np.exp(vg_logdensity(p, y, q))
    return out if np.ndim(out) else float(out)


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

def vg_sample(p: VGParams, rng: np.random.Generator, size=None):
    """Draw mu0 + mu V + sigma sqrt(V) Z with V ~ Gamma(a, b), Z ~ N(0, 1)."""
    v = rng.gamma(p.a, 1.0 / p.b, size=size)
    z = rng.standard_normal(size=size)
    return p.mu0 + p.mu * v + p.sigma * np.sqrt(v) * z
