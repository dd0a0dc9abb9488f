"""From historical to risk-neutral dynamics with the conditional Esscher transform.

The Esscher parameter theta* solves M(theta + 1) / M(theta) = e^r step by
step.  Under the tilted measure each step is again VG, with drift
lambda_Q = -sigma_Q^2 / 2, so discounted prices are martingales.
"""

import math

from dvg.charfn import terminal_mgf
from dvg.dynamics import DVGParams
from dvg.esscher import esscher_map, lambda_q_closed_form, to_risk_neutral

p = DVGParams(r=0.0, lam=0.0, sigma=0.1, a=3.0, alpha0=0.05, alpha1=0.12, beta1=0.08, h1=0.15)
m = esscher_map(p)
print(f"theta* = {m.theta_star}")
print(f"lambda_Q = {m.lambdaQ:.6f}, sigma_Q = {m.sigmaQ:.6f}, D(theta*) = {m.denominator:.6f}")
print(f"-sigma_Q^2 / 2 = {-m.sigmaQ ** 2 / 2:.6f}")
print(f"lambda_Q from the closed form in (lambda, sigma): {lambda_q_closed_form(0.0, 0.1):.6f}")

# A skewed daily-scale model
p = DVGParams(r=1e-4, lam=-0.002, sigma=0.012, a=1 / (0.012 ** 2 + 0.002 ** 2), alpha0=6e-6,
              alpha1=7e-6, beta1=0.85, h1=1.2e-4)
q = to_risk_neutral(p)
print(f"\nP: {p}\nQ: {q}")
for steps in (1, 21, 252):
    ratio = terminal_mgf(q, 100.0, q.h1, steps, 1.0).real / (100.0 * math.exp(q.r * steps))
    print(f"E_Q[S_T] / (S e^(rT)) after {steps:3d} steps: {ratio:.15f}")
