"""Model magnetic Dirac operator on R^m: exact spectrum and a truncated-matrix oracle.

The operator is D = sum_j sqrt(mu_j/2) [gamma_{2j} (h d/dx_j) + i gamma_{2j-1} x_j]
acting on L^2(R^m) tensor the 2^m spin space.  Its spectrum consists of the
zero mode and the pairs +-sqrt(mu.tau h), tau a multi-index, each with
multiplicity 2^{Z_tau - 1} where Z_tau counts the nonzero entries of tau.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .clifford import all_gammas, spin_dim

__all__ = [
    "ModelParams",
    "LandauLabel",
    "EigenLine",
    "model_spectrum",
    "build_dirac_matrix",
    "ladder_matrices",
    "truncated_eigenvalues",
    "landau_projector",
    "spectrum_to_csv",
    "spectrum_to_json",
    "EnumerationBoundError",
]


class EnumerationBoundError(RuntimeError):
    """Raised when a spectral cutoff would enumerate more lines than allowed."""


@dataclass(frozen=True)
class ModelParams:
    mu: tuple
    h: float

    def __post_init__(self):
        mu = tuple(float(x) for x in self.mu)
        if not mu or any(x <= 0 for x in mu):
            raise ValueError("mu must be a nonempty list of positive reals")
        if list(mu) != sorted(mu):
            raise ValueError("mu must be sorted ascending")
        if not (self.h > 0):
            raise ValueError("h must be positive")
        object.__setattr__(self, "mu", mu)

    @property
    def m(self):
        return len(self.mu)


@dataclass(frozen=True)
class LandauLabel:
    tau: tuple
    sign: str  # '+', '-' or 'zero-mode'

    def __post_init__(self):
        tau = tuple(int(t) for t in self.tau)
        object.__setattr__(self, "tau", tau)
        is_zero = all(t == 0 for t in tau)
        if (self.sign == "zero-mode") != is_zero:
            raise ValueError("sign 'zero-mode' exactly when tau = 0")


@dataclass(frozen=True)
class EigenLine:
    value: float
    multiplicity: int
    label: object = None


def _z_count(tau):
    return sum(1 for t in tau if t != 0)


def model_spectrum(p, energy_cutoff, max_lines=200_000):
    """All eigenvalue lines with |value| <= energy_cutoff, sorted ascending.

    Enumeration of multi-indices is graded lexicographic by mu.tau, then
    lexicographic in tau, so the output ordering is deterministic.
    """
    if not (energy_cutoff > 0):
        raise ValueError("energy_cutoff must be positive")
    mu, h, m = p.mu, p.h, p.m
    lam_max = energy_cutoff ** 2 / h  # mu.tau <= lam_max
    bounds = [int(np.floor(lam_max / mu_j)) for mu_j in mu]
    est = np.prod([b + 1.0 for b in bounds])
    if est > max_lines:
        raise EnumerationBoundError(
            f"cutoff {energy_cutoff} would enumerate about {est:.3g} multi-indices "
            f"(bound {max_lines})"
        )
    taus = []
    for tau in itertools.product(*(range(b + 1) for b in bounds)):
        lam = sum(mu_j * t for mu_j, t in zip(mu, tau))
        if lam <= lam_max + 1e-300:
            taus.append((lam, tau))
    taus.sort(key=lambda pair: (pair[0], pair[1]))

    lines = [
        EigenLine(0.0, 1, LandauLabel((0,) * m, "zero-mode")),
    ]
    for lam, tau in taus:
        if all(t == 0 for t in tau):
            continue
        val = float(np.sqrt(lam * h))
        mult = 2 ** (_z_count(tau) - 1)
        lines.append(EigenLine(-val, mult, LandauLabel(tau, "-")))
        lines.append(EigenLine(val, mult, LandauLabel(tau, "+")))
    lines.sort(key=lambda l: (l.value, l.label.tau if isinstance(l.label, LandauLabel) else ()))
    return [l for l in lines if abs(l.value) <= energy_cutoff + 1e-15]


def ladder_matrices(h, basis_cut):
    """1-axis lowering/raising matrices A, A* on Hermite levels 0..basis_cut-1.

    A = h d/dx + x and A* = -h d/dx + x act by A psi_k = sqrt(2hk) psi_{k-1},
    A* psi_k = sqrt(2h(k+1)) psi_{k+1}.
    """
    k = np.arange(1, basis_cut)
    low = sp.diags(np.sqrt(2 * h * k), 1)
    return low.tocsr(), low.T.tocsr()


def _assemble_dirac(p, basis_cut, pair_for):
    mu, h, m = p.mu, p.h, p.m
    gammas = all_gammas(m)
    eye_h = sp.identity(basis_cut, format="csr")
    D = None
    for j in range(1, m + 1):
        A, Ad = ladder_matrices(h, basis_cut)
        hdx = 0.5 * (A - Ad)   # h d/dx_j
        x = 0.5 * (A + Ad)     # x_j
        ops_dx = [eye_h] * m
        ops_x = [eye_h] * m
        ops_dx[j - 1] = hdx
        ops_x[j - 1] = x
        kron_dx = ops_dx[0]
        kron_x = ops_x[0]
        for o1, o2 in zip(ops_dx[1:], ops_x[1:]):
            kron_dx = sp.kron(kron_dx, o1, format="csr")
            kron_x = sp.kron(kron_x, o2, format="csr")
        i_even, i_odd = pair_for(j)
        g_even = gammas[i_even]
        g_odd_i = 1j * gammas[i_odd]
        if abs(g_even.imag).max() == 0 and abs(g_odd_i.imag).max() == 0:
            g_even, g_odd_i = g_even.real, g_odd_i.real
        term = np.sqrt(mu[j - 1] / 2.0) * (
            sp.kron(sp.csr_matrix(g_even), kron_dx, format="csr")
            + sp.kron(sp.csr_matrix(g_odd_i), kron_x, format="csr")
        )
        D = term if D is None else D + term
    return D.tocsr()


def build_dirac_matrix(p, basis_cut):
    """Truncated matrix of the model Dirac operator in the Hermite x spin basis.

    D = sum_j sqrt(mu_j/2) [gamma_{2j} (h d/dx_j) + i gamma_{2j-1} x_j], with
    basis ordering: spin index (lexicographic bit string) tensor Hermite
    levels nu in {0..basis_cut-1}^m, nu_1 slowest.  Self-adjoint exactly.
    """
    if basis_cut < 2:
        raise ValueError("basis_cut must be >= 2")
    return _assemble_dirac(p, basis_cut, lambda j: (2 * j, 2 * j - 1))


def _build_dirac_matrix_real(p, basis_cut):
    # same operator up to a spin-space unitary relabeling of the gamma pairs
    # ((j+m, j) instead of (2j, 2j-1)); real symmetric, same spectrum
    m = p.m
    return _assemble_dirac(p, basis_cut, lambda j: (j + m, j))


def _shell_mask(m, basis_cut, shells=2):
    mask = np.zeros([basis_cut] * m, dtype=bool)
    for ax in range(m):
        sl = [slice(None)] * m
        sl[ax] = slice(basis_cut - shells, basis_cut)
        mask[tuple(sl)] = True
    return np.tile(mask.ravel(), spin_dim(m))


def safe_cutoff(p, max_states=48):
    """Largest spectral cutoff whose line count stays below max_states."""
    vals = [0.0]
    for l in model_spectrum(p, 4.0 * np.sqrt(sum(p.mu) * p.h) + 1.0, max_lines=10 ** 7):
        vals += [abs(l.value)] * l.multiplicity
    vals = np.sort(vals)
    top = vals[min(len(vals), max_states) - 1]
    # place the cutoff in the middle of the gap above the retained block
    above = vals[vals > top + 1e-12]
    return float(0.5 * (top + above[0])) if len(above) else float(top + 0.5)


def truncated_eigenvalues(p, basis_cut, energy_cutoff, shell_tol=1e-6, k_extra=48):
    """Truncation-safe eigenvalues of the truncated Dirac matrix below the cutoff.

    An eigenvalue cluster is resolved against spectral pollution by
    diagonalizing the top-shell mass form on the near-degenerate subspace:
    directions with less than shell_tol boundary mass are trusted.  The
    truncated matrix carries boundary artifacts exactly degenerate with true
    lines (tensor products with top-shell kernel vectors), so a vector-wise
    filter would discard mixed pairs.
    """
    D = _build_dirac_matrix_real(p, basis_cut)
    n = D.shape[0]
    expected = sum(l.multiplicity for l in model_spectrum(p, energy_cutoff))
    if n <= 1600:
        vals, vecs = np.linalg.eigh(D.toarray())
    else:
        k = min(n - 2, 2 * expected + k_extra)
        # sigma just off zero: the spectrum is {0} U {|v| >= sqrt(mu_1 h)}
        sigma = 1e-4 * np.sqrt(p.mu[0] * p.h)
        vals, vecs = spla.eigsh(D, k=k, sigma=sigma, which="LM")
        if np.abs(vals).max() <= energy_cutoff:
            raise EnumerationBoundError(
                "eigensolver window does not cover the requested cutoff; "
                "raise k_extra or lower the cutoff"
            )
    order = np.argsort(vals)
    vals, vecs = vals[order], vecs[:, order]
    mask = _shell_mask(p.m, basis_cut)

    keep_vals = []
    scale = max(1.0, np.abs(vals).max())
    i = 0
    while i < len(vals):
        j = i + 1
        while j < len(vals) and vals[j] - vals[j - 1] < 1e-9 * scale:
            j += 1
        if abs(vals[i]) <= energy_cutoff:
            V = vecs[:, i:j]
            Q = V[mask].conj().T @ V[mask]
            mass = np.linalg.eigvalsh(Q) if j - i > 1 else np.array([Q[0, 0].real])
            n_clean = int(np.sum(mass.real < shell_tol))
            keep_vals.extend([float(np.mean(vals[i:j]))] * n_clean)
        i = j
    return np.array(keep_vals)


def landau_projector(p, tau, basis_cut):
    """Projector onto the Hermite level tau (full spin fiber), rank 2^m."""
    m = p.m
    tau = tuple(int(t) for t in tau)
    if len(tau) != m or any(t < 0 for t in tau):
        raise ValueError("tau must be a multi-index of length m")
    if max(tau) >= basis_cut:
        raise ValueError(f"tau {tau} beyond truncation {basis_cut}")
    diags = []
    for t in tau:
        d = np.zeros(basis_cut)
        d[t] = 1.0
        diags.append(sp.diags(d))
    P = diags[0]
    for d in diags[1:]:
        P = sp.kron(P, d, format="csr")
    return sp.kron(sp.identity(spin_dim(m), format="csr"), P, format="csr")


# --- export ---------------------------------------------------------------

def _line_row(l):
    label = l.label if isinstance(l.label, LandauLabel) else None
    return {
        "value": l.value,
        "multiplicity": l.multiplicity,
        "tau": list(label.tau) if label else None,
        "sign": label.sign if label else None,
    }


def spectrum_to_json(lines):
    return json.dumps([_line_row(l) for l in lines])


def spectrum_to_csv(lines):
    buf = io.StringIO()
    w = csv.writer(buf, quoting=csv.QUOTE_MINIMAL, lineterminator="\r\n")
    w.writerow(["value", "multiplicity", "tau", "sign"])
    for l in lines:
        r = _line_row(l)
        tau = " ".join(str(t) for t in r["tau"]) if r["tau"] is not None else ""
        w.writerow([f"{r['value']:.17g}", r["multiplicity"], tau, r["sign"] or ""])
    return buf.getvalue()
