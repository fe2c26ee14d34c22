"""Mehler kernel tables and the second heat coefficient.

Every closed-form Gaussian moment and sinh convolution is checked against
quadrature, the odd coefficient is evaluated both in simplified and
three-term form, and the master integral is confirmed to equal 1.
"""

import numpy as np

from diractrace import heatkernel as hk

mu = (1.0,)
print("Gaussian moments vs quadrature (m=1, mu=1, s=0.4, t=1):")
for kind, k, l in (("const", 1, 1), ("x2", 1, 1), ("x4", 1, 1), ("x2x2", 1, 2)):
    a = hk.gaussian_moment(kind, k, l, 0.4, 1.0, mu)
    b = hk.gaussian_moment_quadrature(kind, k, l, 0.4, 1.0, mu)
    print(f"  {kind:5s}: closed {a:.10f}  quadrature {b:.10f}  err {abs(a - b):.1e}")

print("\nsinh convolutions vs quadrature (mu=1, t=1):")
for kind in (1, 2, 3, 4):
    a = hk.sinh_integral(kind, 1.0, 1.0)
    b = hk.sinh_integral_quadrature(kind, 1.0, 1.0)
    print(f"  kind {kind}: {a:.10f}  err {abs(a - b):.1e}")

A = np.zeros((3, 3, 3))
A[1, 0, 1], A[0, 1, 1] = 1.0, -1.0
jet = hk.JetData((1.0,), A)
print("\nodd heat coefficient (m=1, A_101=1):")
for t in (0.5, 1.0, 2.0):
    v = hk.u1_pointwise(jet, t)
    w = hk.u1_pointwise_three_term(jet, t)
    print(f"  t={t}: u1 = {v:+.8f}, three-term route {w:+.8f}, even part {hk.u1_even_part(jet, t):.1f}")

print(f"\nmaster integral int (1/u)[1/u - u/sinh^2 u] du = {hk.master_integral_quadrature():.9f}")
print(f"time-integrated u1: {hk.u1_time_integral(jet):.10f} "
      f"(closed form -1/(8 pi^2) = {-1 / (8 * np.pi ** 2):.10f})")

p = hk.HeatParams(0.6, (1.1,))
res = hk.heat_equation_residual_fd(p, np.array([-0.1, 0.25, 0.15]))
print(f"\nheat equation residual at a sample point: {res:.1e}")
