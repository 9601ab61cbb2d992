"""Spline rate functions: evaluation, exact integration, gradients.

Rates are sums of exponentiated coefficients times a clamped cubic B-spline
basis, so they stay positive and the all-zero coefficient vector is the
constant rate 1. Integrals come from the antiderivative basis and are exact.
"""
import numpy as np

import csbm

basis = csbm.SplineBasis.uniform(nbasis=8)
print(f"basis: degree {basis.degree}, {basis.nbasis} functions on "
      f"[{basis.t_min:g}, {basis.t_max:g}]")

grid = np.linspace(0.0, 24.0, 9)
print("partition of unity:", np.allclose(basis.design(
    np.linspace(0, 24, 1000)).sum(axis=1), 1.0, atol=1e-12))

flat = np.zeros(8)
print("zero coefficients -> rate 1 everywhere:",
      np.allclose(csbm.rate_eval(basis, flat, grid), 1.0))
print("exposure over the full clock:",
      csbm.rate_integral(basis, flat, 0.0, 24.0))

# a late-clock surge: low early, sharp rise near the limit
surge = np.log([0.3, 0.3, 0.35, 0.4, 0.5, 0.7, 1.4, 4.0])
print("\nlate-surge rate on a coarse grid:")
for t in grid:
    print(f"  t={t:4.1f}  rate {csbm.rate_eval(basis, surge, float(t)):6.3f}")
print("expected events in (18, 24]:",
      round(csbm.rate_integral(basis, surge, 18.0, 24.0), 4))

# the gradient of the exposure integral is exp(c_p) * int B_p, handy for
# quasi-Newton fitting; check one entry against a finite difference
grad = csbm.rate_gradient(basis, surge, (3.0, 17.0))
h = 1e-6
bump = surge.copy()
bump[4] += h
fd = (csbm.rate_integral(basis, bump, 3.0, 17.0)
      - csbm.rate_integral(basis, surge, 3.0, 17.0)) / h
print(f"\nd exposure / d c_4: analytic {grad[4]:.8f}, forward diff {fd:.8f}")
