"""Linearized return maps: classification, non-resonance, determinant and
Maslov factors, and the model Reeb flow on S^1 x R^{2m}.

Coordinates on R^{2m} are (x_1, ..., x_2m) with symplectic form
omega = sum_j dx_j ^ dx_{j+m}; the standard matrix is J = [[0, I], [-I, 0]].
Hamiltonian fields use the convention i_H omega = df, which is the one
forced on the transverse part of the model Reeb field by i_R da = 0.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm, polar

__all__ = [
    "NonSymplecticError",
    "DegenerateSpectrumError",
    "DegenerateIterateError",
    "BlockDecomposition",
    "OrbitRecord",
    "ContactModelSpec",
    "standard_J",
    "classify_return_map",
    "assemble_normal_form",
    "random_symplectic",
    "check_nonresonant",
    "det_one_minus",
    "maslov_index",
    "path_maslov_index",
    "hamiltonian_field",
    "quadratic_values",
    "model_reeb_flow",
    "return_map_closed_form",
    "return_map_relation_check",
    "decomposition_to_json",
    "matrix_from_text",
]


class NonSymplecticError(ValueError):
    pass


class DegenerateSpectrumError(ValueError):
    pass


class DegenerateIterateError(ValueError):
    pass


def standard_J(m):
    J = np.zeros((2 * m, 2 * m))
    J[:m, m:] = np.eye(m)
    J[m:, :m] = -np.eye(m)
    return J


@dataclass(frozen=True)
class BlockDecomposition:
    elliptic: tuple = ()       # angles beta in (0, 2pi)
    pos_hyp: tuple = ()        # exponents alpha > 0
    neg_hyp: tuple = ()        # exponents alpha > 0 (block is -P^{+,h})
    loxodromic: tuple = ()     # pairs (alpha0 > 0, beta0 in (0, pi))

    def __post_init__(self):
        object.__setattr__(self, "elliptic", tuple(float(b) for b in self.elliptic))
        object.__setattr__(self, "pos_hyp", tuple(float(a) for a in self.pos_hyp))
        object.__setattr__(self, "neg_hyp", tuple(float(a) for a in self.neg_hyp))
        object.__setattr__(
            self, "loxodromic", tuple((float(a), float(b)) for a, b in self.loxodromic)
        )

    @property
    def m(self):
        return (
            len(self.elliptic)
            + len(self.pos_hyp)
            + len(self.neg_hyp)
            + 2 * len(self.loxodromic)
        )


@dataclass
class OrbitRecord:
    T_prim: float
    L_prim: float
    ell: int
    decomp: BlockDecomposition
    maslov: int = None
    amplitude: float = field(default=None)

    def __post_init__(self):
        if self.ell < 1:
            raise ValueError("iterate count must be >= 1")
        if self.maslov is None:
            self.maslov = maslov_index(self.decomp, self.ell)

    @property
    def T(self):
        return self.ell * self.T_prim

    @property
    def L(self):
        return self.ell * self.L_prim


# --- classification -------------------------------------------------------

def _krein_angle(w, V, lam, J):
    # angle in (0, 2pi) of the Krein-positive member of the pair (lam, conj lam)
    for cand in (lam, np.conj(lam)):
        i = np.argmin(np.abs(w - cand))
        v = V[:, i]
        s = np.imag(v @ (J @ v.conj()))
        if s > 0:
            return float(np.angle(w[i]) % (2 * np.pi))
    raise DegenerateSpectrumError("no Krein-positive eigenvector found")


def classify_return_map(P, tol=1e-8):
    """Partition the spectrum of a symplectic matrix into block data.

    Elliptic angles are read from the Krein-positive eigenvalue of each unit
    circle pair, so the paper's rotation block with angle beta classifies to
    beta (not 2 pi - beta) under any real symplectic conjugation.
    """
    P = np.asarray(P, dtype=float)
    n = P.shape[0]
    if P.shape != (n, n) or n % 2:
        raise NonSymplecticError("P must be a 2m x 2m real matrix")
    m = n // 2
    J = standard_J(m)
    if np.abs(P.T @ J @ P - J).max() > 1e-10:
        raise NonSymplecticError("P^T J P != J")
    w, V = np.linalg.eig(P)
    if np.min(np.abs(w - 1.0)) < tol:
        raise DegenerateSpectrumError("eigenvalue within tolerance of 1")
    ws = sorted(w, key=lambda z: (z.real, z.imag))
    for i in range(len(ws) - 1):
        if abs(ws[i] - ws[i + 1]) < tol:
            raise DegenerateSpectrumError("eigenvalue collision within tolerance")

    elliptic, pos_hyp, neg_hyp, lox = [], [], [], []
    used = np.zeros(len(w), dtype=bool)
    for i, lam in enumerate(w):
        if used[i]:
            continue
        if abs(abs(lam) - 1.0) < tol:
            jport = np.argmin(np.abs(w - np.conj(lam)) + used * 1e9)
            used[i] = used[jport] = True
            elliptic.append(_krein_angle(w, V, lam, J))
        elif abs(lam.imag) < tol * max(1.0, abs(lam)):
            jport = np.argmin(np.abs(w - 1.0 / lam.real) + used * 1e9)
            used[i] = used[jport] = True
            if lam.real > 0:
                pos_hyp.append(abs(np.log(lam.real)))
            else:
                neg_hyp.append(abs(np.log(-lam.real)))
        else:
            for q in (lam, np.conj(lam), 1.0 / lam, np.conj(1.0 / lam)):
                jq = np.argmin(np.abs(w - q) + used * 1e9)
                used[jq] = True
            lox.append((abs(np.log(abs(lam))), abs(np.angle(lam))))
    return BlockDecomposition(
        elliptic=sorted(elliptic),
        pos_hyp=sorted(pos_hyp),
        neg_hyp=sorted(neg_hyp),
        loxodromic=sorted(lox),
    )


def _pair_slots(d):
    # coordinate pair index layout following the model quadratics:
    # elliptic pairs first, then hyperbolic (+ then -), loxodromic on the
    # last pairs counting down, two pairs per quartet
    m = d.m
    slots = {}
    nxt = 0
    for k, b in enumerate(d.elliptic):
        slots[("e", k)] = nxt
        nxt += 1
    for k, a in enumerate(d.pos_hyp):
        slots[("h+", k)] = nxt
        nxt += 1
    for k, a in enumerate(d.neg_hyp):
        slots[("h-", k)] = nxt
        nxt += 1
    for k in range(len(d.loxodromic)):
        slots[("l", k)] = (m - 2 * k - 2, m - 2 * k - 1)  # pair indices (0-based)
    return slots


def assemble_normal_form(d):
    """Block normal-form matrix of a decomposition on pairs (x_j, x_{j+m})."""
    m = d.m
    P = np.eye(2 * m)
    slots = _pair_slots(d)

    def put2(i, B):
        idx = [i, i + m]
        P[np.ix_(idx, idx)] = B

    for k, b in enumerate(d.elliptic):
        put2(slots[("e", k)], np.array([[np.cos(b), -np.sin(b)], [np.sin(b), np.cos(b)]]))
    for k, a in enumerate(d.pos_hyp):
        put2(slots[("h+", k)], np.diag([np.exp(a), np.exp(-a)]))
    for k, a in enumerate(d.neg_hyp):
        put2(slots[("h-", k)], -np.diag([np.exp(a), np.exp(-a)]))
    for k, (a0, b0) in enumerate(d.loxodromic):
        i1, i2 = slots[("l", k)]
        R = np.array([[np.cos(b0), -np.sin(b0)], [np.sin(b0), np.cos(b0)]])
        q = [i1, i2]
        p = [i1 + m, i2 + m]
        P[np.ix_(q, q)] = np.exp(-a0) * R
        P[np.ix_(p, p)] = np.exp(a0) * R
    return P


def random_symplectic(m, rng, scale=0.4):
    """Random element of Sp(2m, R) as exp(J S), S symmetric."""
    S = rng.normal(scale=scale, size=(2 * m, 2 * m))
    S = 0.5 * (S + S.T)
    return expm(standard_J(m) @ S)


# --- non-resonance --------------------------------------------------------

def _integer_relation(values, coeff_bound, tol):
    values = np.asarray(values, dtype=float)
    k = len(values)
    if k == 0:
        return None
    # exhaustive scan over the coefficient box, chunked on the leading entry
    B = coeff_bound
    if k == 1:
        return None if abs(values[0]) >= tol else (1,)
    tail = np.stack(
        np.meshgrid(*([np.arange(-B, B + 1)] * (k - 1)), indexing="ij"), axis=-1
    ).reshape(-1, k - 1)
    tail_dot = tail @ values[1:]
    tail_l1 = np.abs(tail).sum(axis=1)
    best = None
    for c0 in range(0, B + 1):
        lhs = np.abs(c0 * values[0] + tail_dot)
        ok = lhs < tol * (c0 + tail_l1)
        if c0 == 0:
            ok &= tail_l1 > 0
        if np.any(ok):
            idx = np.where(ok)[0]
            j = idx[np.argmin(tail_l1[idx] + c0)]
            cand = (c0,) + tuple(int(x) for x in tail[j])
            if best is None or sum(map(abs, cand)) < sum(map(abs, best)):
                best = cand
    return best


def check_nonresonant(d, coeff_bound, tol=1e-9):
    """Certify rational independence of the exponent and angle sets.

    Scans integer vectors c with |c|_inf <= coeff_bound against
    {alpha_j^+} u {alpha_j^-} u {alpha_j^0} and {2 pi} u {beta_j} u {beta_j^0};
    a relation |c . v| < tol |c|_1 is returned, otherwise a certificate.
    """
    if coeff_bound < 1:
        raise ValueError("coeff_bound must be >= 1")
    exps = list(d.pos_hyp) + list(d.neg_hyp) + [a for a, _ in d.loxodromic]
    angs = [2 * np.pi] + list(d.elliptic) + [b for _, b in d.loxodromic]
    rel = _integer_relation(exps, coeff_bound, tol)
    if rel is not None:
        return {"resonant": True, "set": "exponents", "relation": rel}
    rel = _integer_relation(angs, coeff_bound, tol)
    if rel is not None:
        return {"resonant": True, "set": "angles", "relation": rel}
    return {"resonant": False, "coeff_bound": coeff_bound, "tol": tol}


# --- determinant and Maslov factors --------------------------------------

def det_one_minus(d, ell):
    """|det(1 - P^ell)| as a product over normal-form blocks."""
    if ell < 1:
        raise ValueError("ell must be >= 1")
    out = 1.0
    for b in d.elliptic:
        s = np.sin(0.5 * ell * b)
        if abs(s) < 1e-12:
            raise DegenerateIterateError(f"elliptic angle {b} degenerate at iterate {ell}")
        out *= 4.0 * s * s
    for a in d.pos_hyp:
        out *= 4.0 * np.sinh(0.5 * ell * a) ** 2
    for a in d.neg_hyp:
        if ell % 2:
            out *= 4.0 * np.cosh(0.5 * ell * a) ** 2
        else:
            out *= 4.0 * np.sinh(0.5 * ell * a) ** 2
    for a0, b0 in d.loxodromic:
        out *= abs(1 - np.exp(ell * (a0 + 1j * b0))) ** 2
        out *= abs(1 - np.exp(ell * (-a0 + 1j * b0))) ** 2
    return float(out)


def maslov_index(d, ell):
    """Per-block index entering the phase e^{i pi m / 2} of the orbit sum.

    Elliptic blocks contribute 1 + 2 floor(ell beta / 2 pi), matching the
    phase of the regularized transverse mode sum; hyperbolic and loxodromic
    blocks contribute 0; a negative hyperbolic block contributes ell from
    its half-turn generator.
    """
    if ell < 1:
        raise ValueError("ell must be >= 1")
    total = 0
    for b in d.elliptic:
        if abs(np.sin(0.5 * ell * b)) < 1e-12:
            raise DegenerateIterateError(f"elliptic angle {b} degenerate at iterate {ell}")
        total += 1 + 2 * int(np.floor(ell * b / (2 * np.pi)))
    total += ell * len(d.neg_hyp)
    return total


def _polar_angle_2x2(M):
    # rotation angle of the orthogonal polar factor of a 2x2 symplectic matrix
    return np.arctan2(M[1, 0] - M[0, 1], M[0, 0] + M[1, 1])


def path_maslov_index(kind, param, ell, steps=4000):
    """Winding-count index of the generated block path, fixing conventions.

    Follows the path t -> Phi(t), t in [0, ell], through the block flow and
    accumulates the continuous polar-rotation angle Delta.  Elliptic
    endpoints give 2 floor(Delta / 2 pi) + 1; real-spectrum endpoints give
    round(Delta / pi).
    """
    ts = np.linspace(0.0, ell, steps + 1)
    if kind == "elliptic":
        beta = param
        mats = [np.array([[np.cos(beta * t), -np.sin(beta * t)],
                          [np.sin(beta * t), np.cos(beta * t)]]) for t in ts]
    elif kind == "pos_hyp":
        alpha = param
        mats = [np.diag([np.exp(alpha * t), np.exp(-alpha * t)]) for t in ts]
    elif kind == "neg_hyp":
        # rotation by pi t composed with the hyperbolic stretch
        alpha = param
        mats = []
        for t in ts:
            R = np.array([[np.cos(np.pi * t), -np.sin(np.pi * t)],
                          [np.sin(np.pi * t), np.cos(np.pi * t)]])
            mats.append(R @ np.diag([np.exp(alpha * t), np.exp(-alpha * t)]))
    else:
        raise ValueError(f"unknown block kind {kind!r}")
    angles = np.unwrap([_polar_angle_2x2(M) for M in mats])
    delta = angles[-1] - angles[0]
    end_eigs = np.linalg.eigvals(mats[-1])
    if abs(abs(end_eigs[0]) - 1.0) < 1e-9:
        return 2 * int(np.floor(delta / (2 * np.pi))) + 1
    return int(np.round(delta / np.pi))


# --- model contact form and Reeb flow -------------------------------------

def _bump(u):
    # smooth bump supported on (0, 1)
    out = np.zeros_like(u, dtype=float)
    inside = (u > 0) & (u < 1)
    ui = u[inside] if np.ndim(u) else (u if 0 < u < 1 else None)
    if np.ndim(u):
        out[inside] = np.exp(-1.0 / (ui * (1.0 - ui)))
        return out
    return np.exp(-1.0 / (u * (1.0 - u))) if 0 < u < 1 else 0.0


_BUMP_NORM = None


def _bump_norm():
    global _BUMP_NORM
    if _BUMP_NORM is None:
        from scipy.integrate import quad
        _BUMP_NORM = quad(lambda s: _bump(s), 0.0, 1.0, epsabs=1e-14, epsrel=1e-14)[0]
    return _BUMP_NORM


def chi_minus(theta):
    """Unit-mass smooth profile supported in (0, 1/2)."""
    return _bump(2.0 * theta) * 2.0 / _bump_norm()


def chi_plus(theta):
    """Unit-mass smooth profile supported in (1/2, 1)."""
    return _bump(2.0 * theta - 1.0) * 2.0 / _bump_norm()


@dataclass
class ContactModelSpec:
    """Model contact form (T + chi^- Q^{h,-} + chi^+ phi^+) dtheta + lambda_0.

    phi_plus maps a tuple of exponents over the quadratic generators of the
    decomposition to a coefficient; the linear term must match the block
    data (beta_j for elliptic, alpha_j for hyperbolic, (alpha0, beta0) for
    loxodromic pairs).
    """

    T_gamma: float
    decomp: BlockDecomposition
    phi_plus: dict = None  # exponent tuple over generators -> coefficient

    def __post_init__(self):
        gens = self.generator_names()
        if self.phi_plus is None:
            self.phi_plus = {}
            for i, g in enumerate(gens):
                e = [0] * len(gens)
                e[i] = 1
                self.phi_plus[tuple(e)] = self.linear_coefficient(g)
        for exps in self.phi_plus:
            if len(exps) != len(gens):
                raise ValueError("phi_plus exponent length mismatch")
        for i, g in enumerate(gens):
            e = tuple(1 if k == i else 0 for k in range(len(gens)))
            got = self.phi_plus.get(e, 0.0)
            want = self.linear_coefficient(g)
            if abs(got - want) > 1e-12:
                raise ValueError(
                    f"phi_plus linear term for {g} is {got}, decomposition wants {want}"
                )

    def generator_names(self):
        d = self.decomp
        names = [("e", k) for k in range(len(d.elliptic))]
        names += [("h", k) for k in range(len(d.pos_hyp) + len(d.neg_hyp))]
        for k in range(len(d.loxodromic)):
            names += [("lRe", k), ("lIm", k)]
        return names

    def linear_coefficient(self, g):
        d = self.decomp
        kind, k = g
        if kind == "e":
            return d.elliptic[k]
        if kind == "h":
            hyp = list(d.pos_hyp) + list(d.neg_hyp)
            return hyp[k]
        if kind == "lRe":
            return d.loxodromic[k][0]
        return d.loxodromic[k][1]


def quadratic_values(spec, x):
    """Values of the model quadratics at x, keyed by generator name."""
    d = spec.decomp
    m = d.m
    x = np.asarray(x, dtype=float)
    slots = _pair_slots(d)
    vals = {}
    for k in range(len(d.elliptic)):
        i = slots[("e", k)]
        vals[("e", k)] = 0.5 * (x[i] ** 2 + x[i + m] ** 2)
    nh = len(d.pos_hyp)
    for k in range(nh + len(d.neg_hyp)):
        i = slots[("h+", k)] if k < nh else slots[("h-", k - nh)]
        vals[("h", k)] = x[i] * x[i + m]
    for k in range(len(d.loxodromic)):
        i1, i2 = slots[("l", k)]
        q1, q2, p1, p2 = x[i1], x[i2], x[i1 + m], x[i2 + m]
        vals[("lRe", k)] = q2 * p1 - q1 * p2
        vals[("lIm", k)] = q1 * p1 + q2 * p2
    return vals


def _quad_gradients(spec, x):
    d = spec.decomp
    m = d.m
    slots = _pair_slots(d)
    grads = {}
    for k in range(len(d.elliptic)):
        i = slots[("e", k)]
        g = np.zeros(2 * m)
        g[i], g[i + m] = x[i], x[i + m]
        grads[("e", k)] = g
    nh = len(d.pos_hyp)
    for k in range(nh + len(d.neg_hyp)):
        i = slots[("h+", k)] if k < nh else slots[("h-", k - nh)]
        g = np.zeros(2 * m)
        g[i], g[i + m] = x[i + m], x[i]
        grads[("h", k)] = g
    for k in range(len(d.loxodromic)):
        i1, i2 = slots[("l", k)]
        g = np.zeros(2 * m)
        g[i2], g[i1 + m], g[i1], g[i2 + m] = x[i1 + m], x[i2], -x[i2 + m], -x[i1]
        grads[("lRe", k)] = g
        g = np.zeros(2 * m)
        g[i1], g[i1 + m], g[i2], g[i2 + m] = x[i1 + m], x[i1], x[i2 + m], x[i2]
        grads[("lIm", k)] = g
    return grads


def phi_plus_value_grad(spec, x):
    """phi^+(Q(x)) and its x-gradient."""
    gens = spec.generator_names()
    Q = quadratic_values(spec, x)
    dQ = _quad_gradients(spec, x)
    val = 0.0
    grad = np.zeros_like(np.asarray(x, dtype=float))
    for exps, c in spec.phi_plus.items():
        mono = c
        for g, e in zip(gens, exps):
            mono *= Q[g] ** e
        val += mono
        for i, (g, e) in enumerate(zip(gens, exps)):
            if e == 0:
                continue
            part = c * e * Q[g] ** (e - 1)
            for g2, e2 in zip(gens, exps):
                if g2 != g:
                    part *= Q[g2] ** e2
            grad += part * dQ[g]
    return val, grad


def q_hminus_value_grad(spec, x):
    """Q^{h,-} = (pi/2) sum over negative hyperbolic pairs of (x_i^2 + x_{i+m}^2)."""
    d = spec.decomp
    m = d.m
    slots = _pair_slots(d)
    x = np.asarray(x, dtype=float)
    val = 0.0
    grad = np.zeros(2 * m)
    for k in range(len(d.neg_hyp)):
        i = slots[("h-", k)]
        val += 0.5 * np.pi * (x[i] ** 2 + x[i + m] ** 2)
        grad[i] += np.pi * x[i]
        grad[i + m] += np.pi * x[i + m]
    return val, grad


def hamiltonian_field(grad, m):
    """H with i_H omega = df: H^{x_j} = df/dx_{j+m}, H^{x_{j+m}} = -df/dx_j."""
    H = np.empty_like(grad)
    H[:m] = grad[m:]
    H[m:] = -grad[:m]
    return H


def _radial_term(spec, x):
    # (1/2) sum_j (x_j phi_{x_j} + x_{j+m} phi_{x_{j+m}}) for phi = phi^+
    _, grad = phi_plus_value_grad(spec, x)
    return 0.5 * float(np.dot(x, grad))


def return_time_formula(spec, x):
    """T_Sigma = T_gamma + phi^+ - (1/2) sum x_j phi^+_{x_j} at the section point."""
    val, grad = phi_plus_value_grad(spec, x)
    return spec.T_gamma + val - 0.5 * float(np.dot(x, grad))


def _rk4(f, x, s0, s1, steps):
    h = (s1 - s0) / steps
    s = s0
    for _ in range(steps):
        k1 = f(s, x)
        k2 = f(s + 0.5 * h, x + 0.5 * h * k1)
        k3 = f(s + 0.5 * h, x + 0.5 * h * k2)
        k4 = f(s + h, x + h * k3)
        x = x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        s += h
    return x


def model_reeb_flow(spec, z0, steps=2000, chart_radius=10.0):
    """Integrate the model Reeb field through one theta-period.

    Returns (return_point, return_time).  The trajectory is parametrized by
    theta: dx/dtheta = chi^-(theta) H_{Q^{h,-}} on (0, 1/2) and
    chi^+(theta) H_{phi^+} on (1/2, 1); time accumulates as
    dt/dtheta = T_gamma + chi^+(theta) T_Sigma^+(x).
    """
    m = spec.decomp.m
    z0 = np.asarray(z0, dtype=float)
    if z0.shape != (2 * m,):
        raise ValueError(f"z0 must be a point of R^{2*m} on the section")
    if steps < 1000:
        raise ValueError("integrator needs at least 1000 steps per period")
    if np.linalg.norm(z0) > chart_radius:
        raise ValueError("start point outside the chart")

    def f_minus(theta, x):
        _, grad = q_hminus_value_grad(spec, x)
        return chi_minus(theta) * hamiltonian_field(grad, m)

    def f_plus(theta, x):
        _, grad = phi_plus_value_grad(spec, x)
        return chi_plus(theta) * hamiltonian_field(grad, m)

    n1 = steps // 2
    x_half = _rk4(f_minus, z0, 0.0, 0.5, n1)
    x_one = _rk4(f_plus, x_half, 0.5, 1.0, steps - n1)
    if np.linalg.norm(x_one) > chart_radius:
        raise RuntimeError("trajectory left the chart")

    # dt/dtheta = T + chi^+ T_Sigma^+(x); T_Sigma^+ is conserved on the
    # second half, and the first half contributes T/2 exactly
    t_sigma_plus = phi_plus_value_grad(spec, x_half)[0] - _radial_term(spec, x_half)
    return_time = spec.T_gamma + t_sigma_plus
    return x_one, float(return_time)


def return_map_closed_form(spec, z0, steps=4000):
    """e^{H_{phi^+}} o e^{H_{Q^{h,-}}} by integrating the two autonomous flows."""
    m = spec.decomp.m

    def g_minus(_, x):
        return hamiltonian_field(q_hminus_value_grad(spec, x)[1], m)

    def g_plus(_, x):
        return hamiltonian_field(phi_plus_value_grad(spec, x)[1], m)

    mid = _rk4(g_minus, np.asarray(z0, dtype=float), 0.0, 1.0, steps)
    return _rk4(g_plus, mid, 0.0, 1.0, steps)


def _lambda0(x, v, m):
    # lambda_0(v) at x for lambda_0 = (1/2) sum (x_j dx_{j+m} - x_{j+m} dx_j)
    return 0.5 * (np.dot(x[:m], v[m:]) - np.dot(x[m:], v[:m]))


def return_map_relation_check(spec, sample_points, steps=2000, fd=1e-5):
    """Max residual of P_Sigma^* lambda_0 - lambda_0 - dT_Sigma over samples.

    Pullback and differential are computed by central finite differences of
    the integrated return map and return time.
    """
    m = spec.decomp.m
    worst = 0.0
    for z in sample_points:
        z = np.asarray(z, dtype=float)
        z1, _ = model_reeb_flow(spec, z, steps)
        for k in range(2 * m):
            e = np.zeros(2 * m)
            e[k] = fd
            zp, tp = model_reeb_flow(spec, z + e, steps)
            zm, tm = model_reeb_flow(spec, z - e, steps)
            dP = (zp - zm) / (2 * fd)
            dT = (tp - tm) / (2 * fd)
            res = _lambda0(z1, dP, m) - _lambda0(z, e / fd, m) - dT
            worst = max(worst, abs(res))
    return worst


# --- serialization --------------------------------------------------------

def decomposition_to_json(d):
    return json.dumps(
        {
            "elliptic": list(d.elliptic),
            "pos_hyp": list(d.pos_hyp),
            "neg_hyp": list(d.neg_hyp),
            "loxodromic": [list(p) for p in d.loxodromic],
        }
    )


def matrix_from_text(text):
    """Parse a plain-text row-major matrix (whitespace rows/newlines) or JSON."""
    text = text.strip()
    if text.startswith("["):
        return np.asarray(json.loads(text), dtype=float)
    rows = [[float(tok) for tok in line.split()] for line in text.splitlines() if line.strip()]
    return np.asarray(rows, dtype=float)
