"""Desk-scale spectral toolkit for model magnetic Dirac operators.

Subpackages:

- clifford: spin representation, gamma matrices, quantization of forms,
  almost diagonalization over the sphere
- landau: model magnetic Dirac spectrum on R^m and its truncated-matrix oracle
- heatkernel: Mehler kernels, Gaussian/sinh integral tables, the second heat
  coefficient, eta smoothing
- symplectic: return-map classification, non-resonance certificates,
  determinant/Maslov factors, the model Reeb flow
- weylseries: graded Weyl algebra, Koszul complexes, Hodge decomposition,
  Birkhoff normal form
- gutzwiller: two-sided trace comparison on solvable models, spectral eta
- cli: batch front-end
"""

from . import clifford, gutzwiller, heatkernel, landau, symplectic, weylseries

__all__ = [
    "clifford",
    "landau",
    "heatkernel",
    "symplectic",
    "weylseries",
    "gutzwiller",
]

__version__ = "0.1.0"
