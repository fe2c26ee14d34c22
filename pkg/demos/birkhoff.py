"""Graded Weyl algebra and the order-by-order normal form.

Shows the canonical commutator, the filtration bound for commutators, the
two routes to the twisted Laplacian, a Hodge decomposition, and one full
normalization run with its residual scaling.
"""

import numpy as np

import diractrace.weylseries as W
from diractrace.weylseries import FormalSeries as F, KoszulElement as K

model = W.WeylModel(m=1, mu=(1.3,), L=1.0, elliptic=(np.sqrt(2.0),))

x = F.variable(1, 5, "x1")
xi = F.variable(1, 5, "xi1")
c = W.weyl_star(x, xi) - W.weyl_star(xi, x)
print("x * xi - xi * x =", {str(mon): v for mon, v in c.terms.items()})

e = K(1, 5, {(1,): F.variable(1, 5, "x1")})
d1 = W.twisted_laplacian(e, model)
d2 = W.twisted_laplacian_formula(e, model)
print("twisted Laplacian, two routes, difference:", (d1 - d2).max_abs())

rng = np.random.default_rng(0)
basis = W._koszul_basis(1, 3, 3, degree=1)
mon, idx = basis[rng.integers(len(basis))]
be = W._basis_element(mon, idx, 1, 3)
probe = W.koszul_apply("i_x", W.koszul_apply("twisted_w_d", be, model), model)
p1, p2, harm = W.hodge_decompose(probe, 3, model)
print("hodge split of an exact element: |harmonic| =", harm.max_abs())

# normalize a conjugated perturbation of the model symbol
N, T = 3, 4
H1 = W.c0_quantize(W.model_symbol(model, T), model)
fstar = F(1, T, {W.Monomial(0, 0, (2,), (1,), (0,), (0,)): 0.04})
D = W._conjugate_scalar(H1, -1.0 * fstar, T)
f, a, om, res = W.birkhoff_normal_form(D, N, model)
print(f"normalized to weight {N}; residual magnitude {res.max_abs():.2e}")

p0 = {"u": 0.37, "x1": [0.21], "xi1": [-0.33], "x2": [0.27], "xi2": [0.19], "h": 0.11}
vals = []
eps_list = (0.1, 0.05, 0.025)
for eps in eps_list:
    pt = {"u": eps * p0["u"], "x1": [eps * p0["x1"][0]], "xi1": [eps * p0["xi1"][0]],
          "x2": [eps * p0["x2"][0]], "xi2": [eps * p0["xi2"][0]], "h": eps ** 2 * p0["h"]}
    vals.append(np.abs(W.evaluate_series(res, pt)).max())
slope = np.polyfit(np.log(eps_list), np.log(vals), 1)[0]
print(f"residual scaling slope {slope:.2f} (weights beyond {N} scale like eps^{N + 1})")
