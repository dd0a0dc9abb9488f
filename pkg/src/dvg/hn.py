"""Heston-Nandi Garch(1,1) in risk-neutral form, used as a calibration comparator.

    Y_t = r - h_t / 2 + sqrt(h_t) z_t
    h_{t+1} = omega + beta h_t + alpha (z_t - gamma sqrt(h_t))^2

Its terminal m.g.f. is exponential-affine in h_{t+1} with the recursion

    A(t) = A(t+1) + c r + omega B(t+1) - 1/2 log(1 - 2 alpha B(t+1))
    B(t) = c (gamma - 1/2) - gamma^2 / 2 + beta B(t+1)
           + (c - gamma)^2 / (2 (1 - 2 alpha B(t+1)))
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BranchCutError, ValidationError

__all__ = ["HNRiskNeutral"]


@dataclass(frozen=True)
class HNRiskNeutral:
    r: float = 0.0
    omega: float = 1e-6
    alpha: float = 1e-6
    beta: float = 0.8
    gamma: float = 100.0
    h1: float = 1e-4

    measure = "Q"

    def __post_init__(self):
        errors = []
        for name in ("omega", "alpha", "beta"):
            if not getattr(self, name) >= 0:
                errors.append(f"{name} must be >= 0, got {getattr(self, name)}")
        if not self.h1 > 0:
            errors.append(f"h1 must be > 0, got {self.h1}")
        if errors:
            raise ValidationError("invalid HNRiskNeutral: " + "; ".join(errors), errors)

    @property
    def persistence(self) -> float:
        return self.beta + self.alpha * self.gamma ** 2

    def coefficients(self, steps: int, c):
        c = np.asarray(c, dtype=complex)
        A = np.zeros(c.shape, dtype=complex)
        B = np.zeros(c.shape, dtype=complex)
        g = self.gamma
        for k in range(1, steps + 1):
            d = 1.0 - 2.0 * self.alpha * B
            if np.any((d.real <= 0) & (np.abs(d.imag) <= 1e-12 * np.abs(d))):
                raise BranchCutError(f"1 - 2 alpha B on the branch cut at step {k}", step=k)
            A = A + c * self.r + self.omega * B - 0.5 * np.log(d)
            B = c * (g - 0.5) - 0.5 * g * g + self.beta * B + 0.5 * (c - g) ** 2 / d
        return A, B

    def simulate_terminal(self, steps: int, n_paths: int, seed: int = 0, h1=None):
        """log(S_T / S_t) draws, for cross-checking the recursion."""
        rng = np.random.default_rng(seed)
        h = np.full(n_paths, self.h1 if h1 is None else h1, dtype=float)
        total = np.zeros(n_paths)
        for _ in range(steps):
            z = rng.standard_normal(n_paths)
            sq = np.sqrt(h)
            total += self.r - h / 2 + sq * z
            h = self.omega + self.beta * h + self.alpha * (z - self.gamma * sq) ** 2
        return total

    def stationary_variance(self) -> float:
        p = self.persistence
        return math.inf if p >= 1 else (self.omega + self.alpha) / (1 - p)
