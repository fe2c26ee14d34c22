"""Classify linearized return maps and compute the orbit-sum factors.

A block normal form is assembled, hidden behind a random symplectic
conjugation, recovered by the classifier, and then fed to the determinant
and index routines entering the orbit sum.
"""

import numpy as np

from diractrace import symplectic as sy

d = sy.BlockDecomposition(elliptic=(1.1,), pos_hyp=(0.7,), loxodromic=((0.5, 1.0),))
print("planted decomposition:", d)

rng = np.random.default_rng(1)
M = sy.assemble_normal_form(d)
C = sy.random_symplectic(d.m, rng)
P = C @ M @ np.linalg.inv(C)
recovered = sy.classify_return_map(P)
print("recovered:           ", recovered)

print("\nnon-resonance certificate:", sy.check_nonresonant(recovered, coeff_bound=30))

for ell in (1, 2, 3):
    det = sy.det_one_minus(recovered, ell)
    direct = abs(np.linalg.det(np.eye(2 * d.m) - np.linalg.matrix_power(P, ell)))
    print(f"iterate {ell}: |det(1 - P^l)| block {det:.6f} direct {direct:.6f} "
          f"maslov {sy.maslov_index(recovered, ell)}")

print("\npath-winding validators (fix the index conventions):")
print("  elliptic beta=1.0, l=1:", sy.path_maslov_index("elliptic", 1.0, 1))
print("  elliptic beta=1.0, l=7:", sy.path_maslov_index("elliptic", 1.0, 7))
print("  pos_hyp alpha=0.8, l=3:", sy.path_maslov_index("pos_hyp", 0.8, 3))
print("  neg_hyp alpha=0.5, l=2:", sy.path_maslov_index("neg_hyp", 0.5, 2))
