"""Spin representation of the odd Clifford algebra and its quantization maps.

The spin space for dimension n = 2m+1 is the exterior algebra on m creation
directions w_1, ..., w_m, with basis w_k = w_1^{k_1} ^ ... ^ w_m^{k_m}
ordered lexicographically in the bit string k (k_1 most significant).  All
matrices below are dense complex 2^m x 2^m arrays in that basis.
"""

from __future__ import annotations

import itertools
import json

import numpy as np

__all__ = [
    "spin_basis",
    "spin_dim",
    "gamma",
    "sigma",
    "all_gammas",
    "ExteriorElement",
    "clifford_quantize",
    "clifford_quantize_sa",
    "hodge_dual",
    "exterior_adjoint_sign",
    "clifford_vector",
    "almost_diagonalizer",
    "exact_diagonalizer",
    "matrix_to_json",
    "matrix_from_json",
]


def spin_dim(m):
    return 2 ** m


def spin_basis(m):
    """Bit strings (k_1,...,k_m) indexing the spinor basis, lexicographic."""
    return list(itertools.product((0, 1), repeat=m))


def _rank(bits):
    r = 0
    for b in bits:
        r = 2 * r + b
    return r


def _wedge_matrix(j, m):
    # creation operator w_j ^ .  on the lexicographic basis, fermionic sign
    N = spin_dim(m)
    A = np.zeros((N, N), dtype=complex)
    for bits in spin_basis(m):
        if bits[j - 1]:
            continue
        sign = (-1) ** sum(bits[: j - 1])
        new = list(bits)
        new[j - 1] = 1
        A[_rank(new), _rank(bits)] = sign
    return A


def _contraction_matrix(j, m):
    # annihilation i_{wbar_j} dual to _wedge_matrix under <wbar_j, w_k> = delta_jk
    return _wedge_matrix(j, m).T.copy()


def gamma(j, m):
    """Clifford matrix c(e_j), 0 <= j <= 2m, rank 2^m.

    e_0 acts by -i on even wedge degree and +i on odd degree; for 1 <= j <= m
    c(e_j) = -i (w_j ^ + i_{wbar_j}) and c(e_{j+m}) = w_j ^ - i_{wbar_j}.
    Satisfies gamma_i gamma_j + gamma_j gamma_i = -2 delta_ij.
    """
    if not (0 <= j <= 2 * m):
        raise ValueError(f"gamma index {j} out of range for m={m}")
    if j == 0:
        diag = [(-1j) if sum(bits) % 2 == 0 else 1j for bits in spin_basis(m)]
        return np.diag(np.asarray(diag, dtype=complex))
    if j <= m:
        w = _wedge_matrix(j, m)
        return -1j * (w + w.T)
    w = _wedge_matrix(j - m, m)
    return w - w.T + 0j


def sigma(j, m):
    """sigma_j = i gamma_j (self-adjoint)."""
    return 1j * gamma(j, m)


def all_gammas(m):
    return [gamma(j, m) for j in range(2 * m + 1)]


class ExteriorElement:
    """Element of the complexified exterior algebra on e_0, ..., e_2m.

    Stored as a map from strictly increasing index tuples to complex
    coefficients; zero coefficients are dropped.
    """

    def __init__(self, m, coefficients=None):
        self.m = m
        self.coefficients = {}
        if coefficients:
            for idx, c in coefficients.items():
                self[idx] = c

    def __setitem__(self, idx, c):
        idx = tuple(idx)
        if any(not (0 <= i <= 2 * self.m) for i in idx):
            raise ValueError(f"index set {idx} out of range for m={self.m}")
        if list(idx) != sorted(set(idx)):
            raise ValueError(f"index set {idx} must be strictly increasing")
        if c == 0:
            self.coefficients.pop(idx, None)
        else:
            self.coefficients[idx] = complex(c)

    def __getitem__(self, idx):
        return self.coefficients.get(tuple(idx), 0j)

    def items(self):
        return self.coefficients.items()

    def degree_part(self, k):
        return ExteriorElement(
            self.m, {i: c for i, c in self.coefficients.items() if len(i) == k}
        )

    def degrees(self):
        return sorted({len(i) for i in self.coefficients})

    def is_real(self, tol=0.0):
        return all(abs(c.imag) <= tol for c in self.coefficients.values())

    def __add__(self, other):
        out = ExteriorElement(self.m, dict(self.coefficients))
        for idx, c in other.items():
            out[idx] = out[idx] + c
        return out

    def __rmul__(self, scalar):
        return ExteriorElement(
            self.m, {i: scalar * c for i, c in self.coefficients.items()}
        )


def clifford_quantize(omega, m=None):
    """Clifford quantization c(omega): products of gammas in sorted index order."""
    if m is None:
        m = omega.m
    if m != omega.m:
        raise ValueError(f"element has m={omega.m}, representation asked m={m}")
    gammas = all_gammas(m)
    N = spin_dim(m)
    out = np.zeros((N, N), dtype=complex)
    for idx, c in omega.items():
        M = np.eye(N, dtype=complex)
        for i in idx:
            M = M @ gammas[i]
        out += c * M
    return out


def clifford_quantize_sa(omega, m=None):
    """Degreewise c_0(omega) = i^{k(k+1)/2} c(omega); real even/odd inputs give self-adjoint output."""
    if m is None:
        m = omega.m
    N = spin_dim(m)
    out = np.zeros((N, N), dtype=complex)
    for k in omega.degrees():
        out += (1j) ** (k * (k + 1) // 2) * clifford_quantize(omega.degree_part(k), m)
    return out


def exterior_adjoint_sign(k):
    """Sign in c(omega)^* = (-1)^{k(k+1)/2} c(omega) for real degree-k omega."""
    return (-1) ** (k * (k + 1) // 2)


def hodge_orientation_sign(m):
    """Orientation factor in c(*omega) = sign i^{m+1} (-1)^{k(k+1)/2} c(omega).

    Products of gammas are taken in ascending index order, under which the
    top element quantizes to (-1)^{m(m-1)/2} / i^{m+1}; inverting a degree-k
    product contributes the remaining (-1)^{m+1}.  Equals +1 for m = 1, 2.
    """
    return (-1) ** (m * (m - 1) // 2 + m + 1)


def hodge_dual(omega):
    """Hodge star w.r.t. the orientation e_0 ^ ... ^ e_2m."""
    m = omega.m
    full = list(range(2 * m + 1))
    out = ExteriorElement(m)
    for idx, c in omega.items():
        comp = tuple(i for i in full if i not in idx)
        perm = list(idx) + list(comp)
        # parity of the permutation sorting (idx, comp) into (0, ..., 2m)
        sign, seen = 1, list(perm)
        for i in range(len(seen)):
            while seen[i] != i:
                j = seen[i]
                seen[i], seen[j] = seen[j], seen[i]
                sign = -sign
        out[comp] = out[comp] + sign * c
    return out


def clifford_vector(theta, m):
    """c(theta) = sum_j theta_j gamma_j for theta in R^{2m+1}."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (2 * m + 1,):
        raise ValueError(f"theta must have length {2 * m + 1}")
    gammas = all_gammas(m)
    return sum(t * g for t, g in zip(theta, gammas))


# --- almost diagonalization of c(theta) over the sphere -----------------

def _smoothstep(s):
    # C^infty step: 0 for s <= 0, 1 for s >= 1
    s = np.clip(s, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        a = np.where(s > 0, np.exp(-1.0 / np.maximum(s, 1e-300)), 0.0)
        b = np.where(s < 1, np.exp(-1.0 / np.maximum(1.0 - s, 1e-300)), 0.0)
    return a / (a + b)


def _chi1_rho(t0, rho):
    # identity below 1-rho, constant -1 above 1-rho/2, smooth in between
    s = _smoothstep((t0 - (1.0 - rho)) / (rho / 2.0))
    return (1.0 - s) * t0 + s * (-1.0)


def _chi0(t):
    # even bump, 1 on [-1/2, 1/2], supported in (-1, 1)
    return _smoothstep(2.0 * (1.0 - np.abs(t)))


def exact_diagonalizer(theta, m):
    """The map v(theta) with v* c(theta) v = -gamma_0, valid away from the north pole."""
    theta = np.asarray(theta, dtype=float)
    t0 = theta[0]
    if t0 >= 1.0 - 1e-12:
        raise ValueError("exact diagonalizer is singular at the north pole")
    v = np.sqrt((1.0 - t0) / 2.0) * sigma(0, m)
    c = 1.0 / np.sqrt(2.0 * (1.0 - t0))
    for j in range(1, 2 * m + 1):
        v = v - c * theta[j] * sigma(j, m)
    return v


def almost_diagonalizer(theta, t, rho, m):
    """Unitary v and scalars (a0, a1) with v* c(theta) v = a0 gamma_0 + a1 sum theta_j gamma_j.

    Follows the cutoff construction: the singular exact diagonalizer is
    composed with a family of sphere maps that retract the north polar cap,
    interpolating from v = sigma_0 at t <= 1/2.  Both |a0| and |a1| stay
    below (8/rho)^{1/2}.

    Parameters
    ----------
    theta : array, unit vector in R^{2m+1}
    t : float in [0, 1], interpolation parameter
    rho : float in (0, 1/8), polar cap size

    Returns
    -------
    (v, a0, a1) with v unitary.
    """
    theta = np.asarray(theta, dtype=float)
    if not (0.0 < rho < 0.125):
        raise ValueError("rho must lie in (0, 1/8)")
    if not (0.0 <= t <= 1.0):
        raise ValueError("t must lie in [0, 1]")
    if abs(np.linalg.norm(theta) - 1.0) > 1e-12:
        raise ValueError("theta must be a unit vector")
    t0 = theta[0]

    a = (1.0 - _chi0(t)) ** 2
    chi1 = a * _chi1_rho(t0, rho) - (1.0 - a)
    # chi2 = sqrt((1 - chi1^2)/(1 - t0^2)); both factors vanish together at t0 = +-1
    num = 1.0 - chi1 ** 2
    den = 1.0 - t0 ** 2
    if den < 1e-13:
        # limit value: below the cap chi1 = a*t0 - (1-a) and the ratio is finite
        chi2 = np.sqrt(max(a * (1.0 - a * t0 + (1.0 - a)) / 2.0, 0.0)) if t0 < 0 else 0.0
    else:
        chi2 = np.sqrt(max(num, 0.0) / den)

    image = np.empty_like(theta)
    image[0] = chi1
    image[1:] = chi2 * theta[1:]
    v = exact_diagonalizer(image, m)

    a0 = -t0 * chi1 - (1.0 - t0 ** 2) * chi2
    a1 = chi1 - t0 * chi2
    return v, float(a0), float(a1)


# --- serialization -------------------------------------------------------

def matrix_to_json(M):
    """Row-major JSON array of [re, im] pairs."""
    M = np.asarray(M, dtype=complex)
    payload = {
        "shape": list(M.shape),
        "entries": [[float(z.real), float(z.imag)] for z in M.ravel(order="C")],
    }
    return json.dumps(payload)


def matrix_from_json(s):
    payload = json.loads(s)
    flat = np.array([complex(re, im) for re, im in payload["entries"]], dtype=complex)
    return flat.reshape(payload["shape"], order="C")
