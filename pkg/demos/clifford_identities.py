"""Gamma matrices, quantization of forms, and almost diagonalization.

Walk through the spin representation for a few dimensions: anticommutation,
the top-product trace, Hodge-dual/adjoint relations, and the unitary family
that nearly diagonalizes Clifford multiplication over the sphere.
"""

import itertools

import numpy as np

from diractrace import clifford as cl

for m in (1, 2, 3):
    gs = cl.all_gammas(m)
    worst = 0.0
    for i in range(2 * m + 1):
        for j in range(2 * m + 1):
            R = gs[i] @ gs[j] + gs[j] @ gs[i] + 2 * (i == j) * np.eye(2 ** m)
            worst = max(worst, np.abs(R).max())
    paired = gs[0].copy()
    for j in range(1, m + 1):
        paired = paired @ gs[j] @ gs[j + m]
    print(f"m={m}: anticommutation error {worst:.1e}, "
          f"tr[g0 (g1 g{m + 1}) ... ] = {np.trace(paired):.1f} "
          f"(expected {2 ** m / 1j ** (m + 1):.1f})")

m = 2
rng = np.random.default_rng(0)
print("\nHodge dual and adjoint on random forms (m=2):")
for k in (1, 2, 3):
    coeffs = {i: rng.normal() for i in itertools.combinations(range(5), k)}
    om = cl.ExteriorElement(m, coeffs)
    lhs = cl.clifford_quantize(cl.hodge_dual(om))
    rhs = cl.hodge_orientation_sign(m) * 1j ** (m + 1) * (-1) ** (k * (k + 1) // 2) \
        * cl.clifford_quantize(om)
    M = cl.clifford_quantize(om)
    adj = np.abs(M.conj().T - cl.exterior_adjoint_sign(k) * M).max()
    print(f"  degree {k}: dual error {np.abs(lhs - rhs).max():.1e}, adjoint error {adj:.1e}")

print("\nAlmost diagonalization over the sphere (m=1, rho=0.1):")
for t in (0.0, 0.6, 1.0):
    th = np.array([-0.5, np.sqrt(0.75) * 0.8, np.sqrt(0.75) * 0.6])
    V, a0, a1 = cl.almost_diagonalizer(th, t, 0.1, 1)
    R = V.conj().T @ cl.clifford_vector(th, 1) @ V
    R -= a0 * cl.gamma(0, 1) + a1 * sum(th[j] * cl.gamma(j, 1) for j in (1, 2))
    print(f"  t={t:.1f}: (a0, a1) = ({a0:+.3f}, {a1:+.3f}), residual {np.abs(R).max():.1e}")
