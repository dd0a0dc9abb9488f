"""Variance-Gamma building blocks: moments, densities and Gauss-Laguerre quadrature.

The VG law is a normal variance-mean mixture with a Gamma mixing variable.
Its density has no elementary closed form, so it is evaluated by integrating
the normal kernel against the Gamma density with a generalized
Gauss-Laguerre rule.
"""

import math

import numpy as np

from dvg.mixture import SVGParams, VGParams, gauss_laguerre, vg_density, vg_moments

# A VG law: Y = mu0 + mu V + sigma sqrt(V) Z with V ~ Gamma(a, b)
p = VGParams(mu0=0.0, mu=-0.1, sigma=0.2, a=2.0, b=2.0)
mean, var, skew, kurt = vg_moments(p)
print(f"VG{(p.mu0, p.mu, p.sigma, p.a, p.b)}: mean {mean:.5f}, variance {var:.5f}, "
      f"skewness {skew:.4f}, kurtosis {kurt:.4f}")

# Moments checked against a numerical derivative of the log m.g.f.
h = 1e-3
from dvg.mixture import vg_log_mgf
k2 = (vg_log_mgf(p, h) - 2 * vg_log_mgf(p, 0.0) + vg_log_mgf(p, -h)) / h ** 2
print(f"second cumulant from the m.g.f.: {float(k2):.5f}")

# The standardized SVG(alpha, k) law used for GARCH innovations
s = SVGParams(alpha=-0.219, k=1.30)
print(f"\nSVG(-0.219, 1.30): skewness {s.skewness:.3f}, kurtosis {s.kurtosis:.3f}")

# Quadrature rules: the two-node rule has nodes 2 -/+ sqrt(2)
r = gauss_laguerre(2)
print(f"\n2-node Laguerre rule: nodes {r.nodes}, weights {r.weights}")
print(f"closed form:          nodes {[2 - math.sqrt(2), 2 + math.sqrt(2)]}")

# Density accuracy improves with the number of nodes
y = np.linspace(-1.0, 1.0, 9)
ref = vg_density(p, y, 128)
for n in (4, 10, 32, 64):
    err = np.max(np.abs(vg_density(p, y, n) - ref))
    print(f"n = {n:3d}: max density error vs n = 128 on the grid: {err:.2e}")
