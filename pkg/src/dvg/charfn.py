"""Conditional m.g.f. of the terminal log-price by backward coefficient recursion.

    E_t[S_T^c] = S_t^c exp(A(t; T, c) + B(t; T, c) h_{t+1})

with A(T) = B(T) = 0 and, one period back,

    A(t) = c r + A(t+1) + alpha0 B(t+1)
    B(t) = beta1 B(t+1) + c omega - a Log[1 - (c lam + alpha1 B(t+1) + c^2 sigma^2 / 2)]

``omega`` is the risk-neutral drift compensator (zero for the historical and
the Esscher measures).  Each complex argument is handled independently; the
functions broadcast over arrays of ``c``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BranchCutError

__all__ = ["CoefPath", "coef_recursion", "terminal_mgf", "log_terminal_mgf", "iid_coefficients"]

# |Arg| may not get closer to pi than this
CUT_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class CoefPath:
    """Coefficients indexed by periods remaining: ``A[k] = A(T - k; T, c)``."""

    c: np.ndarray
    A: np.ndarray
    B: np.ndarray
    min_cut_distance: float

    @property
    def horizon(self) -> int:
        return self.A.shape[0] - 1

    def at_remaining(self, k: int):
        return self.A[k], self.B[k]


def _log_arg(model, c, B_next):
    return 1.0 - (c * model.lam + model.alpha1 * B_next + c * c * model.sigma ** 2 / 2)


def _guard(arg, step):
    dist = np.pi - np.abs(np.angle(arg))
    bad = (dist < CUT_TOL) | (arg == 0)
    if np.any(bad):
        where = np.flatnonzero(np.ravel(bad))[0]
        z = complex(np.ravel(arg)[where])
        raise BranchCutError(
            f"log argument {z} touches the principal branch cut at step {step} "
            f"(periods remaining)", step=step, argument=z)
    return float(np.min(dist)) if np.size(dist) else np.pi


def coef_recursion(model, steps: int, c, compensated: bool | None = None) -> CoefPath:
    """Run the A/B recursion ``steps`` periods back from the terminal date.

    ``compensated`` switches on Kahan summation for A; by default it is used
    only for horizons above 1000 periods.
    """
    c = np.asarray(c, dtype=complex)
    if steps < 0:
        raise ValueError(f"steps must be >= 0, got {steps}")
    if compensated is None:
        compensated = steps > 1000
    A = np.zeros((steps + 1,) + c.shape, dtype=complex)
    B = np.zeros_like(A)
    omega = model.compensator
    min_dist = np.pi
    comp = np.zeros(c.shape, dtype=complex)
    for k in range(1, steps + 1):
        B_next = B[k - 1]
        arg = _log_arg(model, c, B_next)
        min_dist = min(min_dist, _guard(arg, k))
        B[k] = model.beta1 * B_next + c * omega - model.a * np.log(arg)
        inc = c * model.r + model.alpha0 * B_next
        if compensated:
            y = inc - comp
            s = A[k - 1] + y
            comp = (s - A[k - 1]) - y
            A[k] = s
        else:
            A[k] = A[k - 1] + inc
    return CoefPath(c=c, A=A, B=B, min_cut_distance=min_dist)


def _final_coefficients(model, steps, c):
    """A, B at t only, without storing the path (used on large pricing grids)."""
    if hasattr(model, "coefficients"):
        return model.coefficients(steps, c)
    c = np.asarray(c, dtype=complex)
    A = np.zeros(c.shape, dtype=complex)
    B = np.zeros(c.shape, dtype=complex)
    base = 1.0 - (c * model.lam + c * c * model.sigma ** 2 / 2)
    drift = c * model.r
    comp = c * model.compensator
    for k in range(1, steps + 1):
        arg = base - model.alpha1 * B
        # same test as _guard without computing the angle: |Im| < tan(CUT_TOL) |Re| on Re < 0
        if np.any((arg.real <= 0) & (np.abs(arg.imag) <= CUT_TOL * -arg.real)):
            _guard(arg, k)
        A += drift + model.alpha0 * B
        B = model.beta1 * B + comp - model.a * np.log(arg)
    return A, B


def log_terminal_mgf(model, s_t, h_next, steps: int, c):
    """log E_t[S_T^c] (principal log of S_t, exact A and B)."""
    A, B = _final_coefficients(model, steps, c)
    return np.asarray(c) * np.log(s_t) + A + B * h_next


def terminal_mgf(model, s_t, h_next, steps: int, c):
    """E_t[S_T^c] = S_t^c exp(A(t;T,c) + B(t;T,c) h_{t+1})."""
    out = np.exp(log_terminal_mgf(model, s_t, h_next, steps, c))
    if np.ndim(out) == 0:
        return complex(out)
    return out


def iid_coefficients(model, steps: int, c):
    """Closed-form A, B for alpha0 = alpha1 = 0, beta1 = 1."""
    c = np.asarray(c, dtype=complex)
    A = c * steps * model.r
    B = steps * (c * model.compensator
                 - model.a * np.log(1 - c * model.lam - c * c * model.sigma ** 2 / 2))
    return A, B
