"""Exact model Dirac spectrum vs a truncated-matrix eigensolve.

The model operator on R^m has eigenvalues +-sqrt(mu.tau h) with
multiplicities 2^{Z_tau - 1}; a dense/sparse Hermite-basis matrix reproduces
them below a truncation-safe cutoff.
"""

import numpy as np

from diractrace import landau

p = landau.ModelParams((1.0,), 0.04)
print("model spectrum, m=1, mu=1, h=0.04, cutoff 0.3:")
for line in landau.model_spectrum(p, 0.3):
    print(f"  {line.value:+.5f}  x{line.multiplicity}  tau={line.label.tau} ({line.label.sign})")

print("\noracle comparison (basis_cut=40):")
for m, h in ((1, 0.04), (2, 0.04)):
    mu = tuple(1.0 + 0.3 * np.arange(m))
    p = landau.ModelParams(mu, h)
    cutoff = landau.safe_cutoff(p, max_states=36)
    vals = landau.truncated_eigenvalues(p, 40, cutoff)
    pred = []
    for line in landau.model_spectrum(p, cutoff):
        pred += [line.value] * line.multiplicity
    pred = np.sort(pred)
    print(f"  m={m}: {len(vals)} eigenvalues below {cutoff:.3f}, "
          f"max deviation {np.abs(vals - pred).max():.2e}")

print("\nscaling: spectrum(mu, 4h) = 2 spectrum(mu, h)")
p1 = landau.ModelParams((1.0,), 0.01)
p2 = landau.ModelParams((1.0,), 0.04)
v1 = np.array([l.value for l in landau.model_spectrum(p1, 0.3)])
v2 = np.array([l.value for l in landau.model_spectrum(p2, 0.6)])
print(f"  entrywise error {np.abs(2 * v1 - v2).max():.2e}")
