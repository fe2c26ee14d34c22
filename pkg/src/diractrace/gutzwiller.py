"""Two-sided trace comparison on the solvable circle/elliptic models, and the
spectral-eta bookkeeping.

The model spectrum is that of the effective Hamiltonian acting on the lowest
Landau sector: lines -(1/L)(2 pi h k + T + sum_j beta_j (n_j + 1/2) h) over
circle modes k and transverse oscillator modes n.  The orbit-sum side carries
phase e^{i ell T / h}, per-block amplitude 1/(2 |sin(ell beta/2)|) and the
half-integer Maslov phase; their equality with the mode sum is Poisson
summation, which the tests use as the ground-truth oracle.
"""

from __future__ import annotations

import csv
import io
import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .heatkernel import eta_smoothed, eta_sign_sum, eta_arithmetic_progression
from .landau import EigenLine
from .symplectic import BlockDecomposition, OrbitRecord, check_nonresonant, det_one_minus, maslov_index

__all__ = [
    "SmoothBump",
    "Window",
    "ModelGeometry",
    "ResonantModelError",
    "CoverageError",
    "ModeLabel",
    "model_eigenvalues",
    "spectral_side",
    "geometric_side",
    "orbit_terms",
    "trace_compare",
    "eta_limit_check",
    "report_to_json",
    "report_to_csv",
]


class ResonantModelError(ValueError):
    pass


class CoverageError(RuntimeError):
    pass


def _smoothstep(s):
    s = np.clip(s, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        a = np.where(s > 0, np.exp(-1.0 / np.maximum(s, 1e-300)), 0.0)
        b = np.where(s < 1, np.exp(-1.0 / np.maximum(1.0 - s, 1e-300)), 0.0)
    return a / (a + b)


@dataclass(frozen=True)
class SmoothBump:
    """C-infinity bump: 1 on |x - center| <= plateau, 0 outside halfwidth."""

    center: float
    halfwidth: float
    plateau: float

    def __post_init__(self):
        if not (0 < self.plateau < self.halfwidth):
            raise ValueError("need 0 < plateau < halfwidth")

    def __call__(self, x):
        s = (np.abs(np.asarray(x) - self.center) - self.plateau) / (
            self.halfwidth - self.plateau
        )
        return _smoothstep(1.0 - s)

    @property
    def support(self):
        return (self.center - self.halfwidth, self.center + self.halfwidth)


class SampledWindowFunction:
    """Smooth interpolant through samples of a compactly supported function."""

    def __init__(self, xs, ys):
        from scipy.interpolate import CubicSpline

        self.xs = np.asarray(xs, dtype=float)
        self.ys = np.asarray(ys, dtype=float)
        self._spline = CubicSpline(self.xs, self.ys, bc_type="clamped")
        self.support = (float(self.xs[0]), float(self.xs[-1]))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        lo, hi = self.support
        inside = (x > lo) & (x < hi)
        out = np.zeros_like(x, dtype=float)
        out[inside] = self._spline(x[inside])
        return out


@dataclass
class Window:
    """Test windows of the trace: f on the rescaled spectral axis, theta on
    the length axis (a bump equal to 1 near its designated center), the
    evaluation point lambda, and h."""

    f: object
    theta: object
    lam: float
    h: float
    fourier_nodes: int = 400

    def __post_init__(self):
        self._nodes, self._weights = np.polynomial.legendre.leggauss(self.fourier_nodes)
        lo, hi = self.theta.support
        self._xi = 0.5 * (hi - lo) * self._nodes + 0.5 * (hi + lo)
        self._wxi = 0.5 * (hi - lo) * self._weights
        self._thv = self.theta(self._xi)

    def theta_check(self, s):
        """(1/2 pi) int e^{i s xi} theta(xi) d xi by Gauss-Legendre."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        ph = np.exp(1j * np.outer(s, self._xi))
        return (ph @ (self._wxi * self._thv)) / (2 * np.pi)

    def theta_int(self):
        return float(np.sum(self._wxi * self._thv))

    def theta_sq_int(self):
        return float(np.sum(self._wxi * self._thv ** 2))


@dataclass(frozen=True)
class ModeLabel:
    k: int
    n: tuple


@dataclass
class ModelGeometry:
    """All-elliptic solvable model: periods, transverse angles, base data."""

    L_gamma: float
    T_gamma: float
    transverse: BlockDecomposition = field(default_factory=BlockDecomposition)
    mu: tuple = (1.0,)

    def __post_init__(self):
        if self.transverse.pos_hyp or self.transverse.neg_hyp or self.transverse.loxodromic:
            raise ResonantModelError(
                "quantized transverse spectra exist only for all-elliptic models"
            )

    @property
    def betas(self):
        return self.transverse.elliptic

    def certificate(self, coeff_bound=40, tol=1e-9):
        return check_nonresonant(self.transverse, coeff_bound, tol)


def _k_range(g, w, n_shift, pad=4):
    # integer k with f(lambda_{k,n}/sqrt h) possibly nonzero
    lo, hi = w.f.support
    h, L, T = w.h, g.L_gamma, g.T_gamma
    # lambda = -(2 pi h k + T + n_shift h)/L in sqrt(h) * [lo, hi]
    vals = [(-s * np.sqrt(h) * L - T - n_shift * h) / (2 * np.pi * h) for s in (lo, hi)]
    kmin = int(np.floor(min(vals))) - pad
    kmax = int(np.ceil(max(vals))) + pad
    return kmin, kmax


def model_eigenvalues(g, w=None, k_range=None, n_max=0, max_lines=5_000_000):
    """EigenLines -(1/L)(2 pi h k + T + sum beta_j (n_j + 1/2) h).

    The Fourier range is either given or derived from the window's f
    support; each transverse block is enumerated up to n_max.
    """
    betas = g.betas
    d = len(betas)
    lines = []
    n_iter = [0] * d if d else [()]
    import itertools

    ns = list(itertools.product(range(n_max + 1), repeat=d))
    count = 0
    for n in ns:
        shift = sum(b * (nj + 0.5) for b, nj in zip(betas, n))
        if k_range is None:
            if w is None:
                raise ValueError("need a window or an explicit k_range")
            kmin, kmax = _k_range(g, w, shift)
        else:
            kmin, kmax = k_range
        count += kmax - kmin + 1
        if count > max_lines:
            raise RuntimeError("line enumeration bound exceeded")
        for k in range(kmin, kmax + 1):
            val = -(2 * np.pi * w.h * k + g.T_gamma + shift * w.h) / g.L_gamma \
                if w is not None else -(2 * np.pi * k + g.T_gamma + shift) / g.L_gamma
            lines.append(EigenLine(float(val), 1, ModeLabel(k, tuple(n))))
    return lines


def spectral_side(eigs, w):
    """sum over lines of mult f(lambda_i/sqrt h) (1/h) theta_check((lam sqrt h - lambda_i)/h).

    The eigenvalue list must cover the support of the integrand; the
    estimated boundary tail is checked against 1e-10.
    """
    h = w.h
    vals = np.array([l.value for l in eigs])
    mult = np.array([l.multiplicity for l in eigs], dtype=float)
    fv = w.f(vals / np.sqrt(h))
    live = np.abs(fv) > 0
    if not np.any(live):
        return 0.0 + 0.0j
    # coverage: f must vanish identically at both ends of the supplied list
    order = np.argsort(vals)
    f_sorted = np.abs(fv[order])
    edge = max(f_sorted[0], f_sorted[-1])
    if edge > 1e-10:
        raise CoverageError(f"spectral list does not cover supp f (edge mass {edge:.2e})")
    s = (w.lam * np.sqrt(h) - vals[live]) / h
    tc = w.theta_check(s)
    return complex(np.sum(mult[live] * fv[live] * tc) / h)


class _WindowQuad:
    # reusable s-grid data for the window factors at fixed (g, w)
    def __init__(self, g, w, ell_max=80):
        h, L = w.h, g.L_gamma
        lo, hi = w.f.support
        s_halfrange = (abs(w.lam) + max(abs(lo), abs(hi))) / np.sqrt(h) + 1.0
        nodes = min(max(800, int(10 * s_halfrange + 8 * ell_max * L)), 6000)
        xs, ws_ = np.polynomial.legendre.leggauss(nodes)
        self.s = s_halfrange * xs
        self.wq = s_halfrange * ws_
        self.tcfv = w.theta_check(self.s) * w.f(w.lam - self.s * np.sqrt(h))
        self.L = L
        self.lam_phase = w.lam / np.sqrt(h)

    def factor(self, ell):
        val = np.sum(self.wq * self.tcfv * np.exp(-1j * ell * self.L * self.s))
        return np.exp(1j * ell * self.L * self.lam_phase) * complex(val)


def _window_factor(g, w, ell, exact=True, quad=None):
    # I_ell = e^{i ell L lam / sqrt h} int theta_check(s) f(lam - s sqrt h) e^{-i ell L s} ds
    h, L = w.h, g.L_gamma
    if not exact:
        return w.f(w.lam) * complex(w.theta(ell * L)) * np.exp(1j * ell * L * w.lam / np.sqrt(h))
    if quad is None:
        quad = _WindowQuad(g, w)
    return quad.factor(ell)


def orbit_terms(g, w, ells, exact=True, mode_weight=1.0, quad=None):
    """Paper-shaped orbit contributions (L/2 pi h) e^{i ell T/h} (prod block
    phases/amplitudes) I_ell, keyed by the iterate.

    ell = 0 is the local term: its transverse factor is the weighted mode
    count mode_weight instead of the regularized geometric series.
    """
    if exact and quad is None:
        quad = _WindowQuad(g, w)
    out = {}
    for ell in ells:
        if ell == 0:
            out[0] = (
                g.L_gamma / (2 * np.pi * w.h)
                * mode_weight
                * _window_factor(g, w, 0, exact=exact, quad=quad)
            )
            continue
        block = 1.0 + 0.0j
        for b in g.betas:
            sn = np.sin(0.5 * ell * b)
            if abs(sn) < 1e-12:
                raise ResonantModelError(f"degenerate iterate {ell} for angle {b}")
            block *= 1j / (2.0 * sn)
        amp = g.L_gamma / (2 * np.pi * w.h)
        phase = np.exp(1j * ell * g.T_gamma / w.h)
        out[ell] = amp * phase * block * _window_factor(g, w, ell, exact=exact, quad=quad)
    return out


def orbit_sum_adaptive(g, w, exact=True, mode_weight=1.0, tol=1e-13, ell_max=60,
                       block_weights=None):
    """Local term plus iterates, extended until the terms are negligible.

    block_weights: optional callable ell -> transverse factor, overriding the
    regularized geometric series (used for ramp-weighted mode sums).
    """
    quad = _WindowQuad(g, w, ell_max=ell_max) if True else None
    total = orbit_terms(g, w, [0], exact=True, mode_weight=mode_weight, quad=quad)[0]
    scale = max(abs(total), 1e-300)
    dead = 0
    for ell in range(1, ell_max + 1):
        if block_weights is None:
            t = orbit_terms(g, w, [ell, -ell], exact=True, quad=quad)
            inc = t[ell] + t[-ell]
        else:
            amp = g.L_gamma / (2 * np.pi * w.h)
            inc = sum(
                amp * np.exp(1j * l * g.T_gamma / w.h) * block_weights(l) * quad.factor(l)
                for l in (ell, -ell)
            )
        total += inc
        scale = max(scale, abs(total))
        if abs(inc) < tol * scale:
            dead += 1
            if dead >= 3:
                break
        else:
            dead = 0
    return total


def geometric_side(orbits, local, w, order=0, g=None):
    """Local term plus the dynamical orbit sum at the requested order.

    orbits: OrbitRecord list (iterates of the primitive model orbit); local:
    callback (w -> complex) or None for windows supported away from zero
    length; order=0 uses the leading window factor f(lam) theta(L_gamma),
    order='exact' the full quadrature factor.
    """
    total = 0.0 + 0.0j
    if local is not None:
        total += local(w)
    exact = order == "exact"
    for orb in orbits:
        if g is None:
            gg = ModelGeometry(orb.L_prim, orb.T_prim, orb.decomp)
        else:
            gg = g
        lo, hi = w.theta.support
        if not exact and (orb.L < lo or orb.L > hi):
            continue
        term = orbit_terms(gg, w, [orb.ell], exact=exact)[orb.ell]
        if orb.amplitude is None:
            orb.amplitude = (orb.L_prim / (2 * np.pi)) * float(
                np.abs(w.theta(orb.L))
            ) / np.sqrt(det_one_minus(orb.decomp, orb.ell))
        total += term
    return total


def _ramp_weights(n_max, n_flat):
    # smooth transverse cutoff: 1 up to n_flat, C-infinity decay to 0 at n_max
    n = np.arange(n_max + 1, dtype=float)
    return _smoothstep((n_max - n) / max(n_max - n_flat, 1))


def trace_compare(g, w_builder, h_list, ell_window=None, n_flat=300, n_max=900,
                  coeff_bound=40):
    """Spectral vs orbit-sum comparison per h; returns report rows.

    For a circle model (no transverse blocks) both sides are computed
    exactly and agree to Poisson tails.  With elliptic blocks the spectral
    side is the ramp-weighted transverse mode sum and the geometric side the
    leading-order orbit formula, so the error decays like sqrt(h).
    """
    cert = g.certificate(coeff_bound=coeff_bound)
    if cert["resonant"]:
        raise ResonantModelError(f"resonant transverse data: {cert['relation']}")
    d = len(g.betas)
    rows = []
    for h in h_list:
        w = w_builder(h)
        if d == 0:
            lines = model_eigenvalues(g, w)
            spec = spectral_side(lines, w)
            geo = orbit_sum_adaptive(g, w, exact=True)
        else:
            weights = _ramp_weights(n_max, n_flat)
            spec = 0.0 + 0.0j
            import itertools

            for n in itertools.product(range(n_max + 1), repeat=d):
                wn = float(np.prod([weights[nj] for nj in n]))
                if wn == 0.0:
                    continue
                shift = sum(b * (nj + 0.5) for b, nj in zip(g.betas, n))
                kmin, kmax = _k_range(g, w, shift)
                lines = [
                    EigenLine(
                        float(-(2 * np.pi * h * k + g.T_gamma + shift * h) / g.L_gamma),
                        1,
                        ModeLabel(k, n),
                    )
                    for k in range(kmin, kmax + 1)
                ]
                spec += wn * spectral_side(lines, w)
            # local term with the weighted mode count, exact window factor;
            # dynamical iterates at the requested leading order
            mode_weight = float(np.sum(weights)) ** d
            geo_local = orbit_terms(g, w, [0], exact=True, mode_weight=mode_weight)[0]
            lo, hi = w.theta.support
            ells = [l for l in range(1, int(np.ceil(hi / g.L_gamma)) + 1)
                    if lo <= l * g.L_gamma <= hi]
            geo_dyn = sum(orbit_terms(g, w, ells, exact=False).values()) if ells else 0.0
            geo = geo_local + geo_dyn
        abs_err = abs(spec - geo)
        rel_err = abs_err / max(abs(spec), 1e-300)
        row = {"h": h, "spectral": spec, "geometric": geo,
               "abs_err": abs_err, "rel_err": rel_err}
        if d:
            # error of the leading dynamical amplitudes, relative to the
            # dynamical term itself: the matched orders cancel, leaving the
            # O(sqrt h) window corrections
            row["dyn_rel_err"] = abs_err / max(abs(geo_dyn), 1e-300)
        rows.append(row)
    if len(rows) >= 2:
        key = "dyn_rel_err" if d else "abs_err"
        hs = np.array([r["h"] for r in rows])
        es = np.array([max(r[key], 1e-300) for r in rows])
        slope = float(np.polyfit(np.log(hs), np.log(es), 1)[0])
    else:
        slope = None
    return {"rows": rows, "error_slope": slope, "certificate": cert}


def u0_extract(g, w_builder, h_list, lam_values, n_flat=60, n_max=200):
    """Leading local density u0(lam) per transverse mode.

    The window theta equals 1 near 0 and is supported below the primitive
    length; the exactly computable dynamical iterates are subtracted before
    reading off the local term, leaving (L/2 pi) f(lam) up to superpolynomial
    tails.
    """
    d = len(g.betas)
    weights = _ramp_weights(n_max, n_flat) if d else None
    out = {}
    for lam in lam_values:
        vals = []
        for h in h_list:
            w = w_builder(h, lam)
            if d == 0:
                lines = model_eigenvalues(g, w)
                s = spectral_side(lines, w)
                norm = 1.0
                dyn = orbit_sum_adaptive(g, w) - orbit_terms(g, w, [0], exact=True)[0]
            else:
                import itertools

                ns = np.arange(n_max + 1)
                s = 0.0 + 0.0j
                norm = 0.0
                for n in itertools.product(range(n_max + 1), repeat=d):
                    wn = float(np.prod([weights[nj] for nj in n]))
                    if wn == 0.0:
                        continue
                    shift = sum(b * (nj + 0.5) for b, nj in zip(g.betas, n))
                    kmin, kmax = _k_range(g, w, shift)
                    lines = [
                        EigenLine(
                            float(-(2 * np.pi * h * k + g.T_gamma + shift * h) / g.L_gamma),
                            1, ModeLabel(k, n))
                        for k in range(kmin, kmax + 1)
                    ]
                    s += wn * spectral_side(lines, w)
                    norm += wn

                def block_w(l):
                    t = 1.0 + 0.0j
                    for b in g.betas:
                        t *= complex(np.sum(weights * np.exp(1j * l * b * (ns + 0.5))))
                    return t

                dyn = orbit_sum_adaptive(
                    g, w, mode_weight=norm, block_weights=block_w
                ) - orbit_terms(g, w, [0], exact=True, mode_weight=norm)[0]
            vals.append(h * (s - dyn) / norm)
        out[lam] = complex(np.mean(vals))
    return out


def eta_limit_check(g, h_list, eps_factor=4.0, k_span=30000, reference_volume=None):
    """Per-h smoothed eta of the lowest-sector model spectrum vs the closed
    form for a two-sided progression; the compact-manifold volume limit is
    reported as a flag, not asserted (it is not desk reproducible).
    """
    m = len(g.mu)
    rows = []
    for h in h_list:
        a = 2 * np.pi * h / g.L_gamma
        shift = sum(b * 0.5 for b in g.betas) * h
        b = (g.T_gamma + shift) / g.L_gamma
        lines = [
            EigenLine(float(-(a * k + b)), 1, ModeLabel(k, ()))
            for k in range(-k_span, k_span + 1)
        ]
        eps = eps_factor / (a * k_span)
        eta_sm = eta_smoothed(lines, eps)
        # descending progression: eta{-(a k + b)} = -(1 - 2 frac(b/a))
        eta_closed = -eta_arithmetic_progression(a, b)
        rows.append(
            {
                "h": h,
                "eta_smoothed": eta_sm,
                "eta_closed_form": eta_closed,
                "abs_err": abs(eta_sm - eta_closed),
                "h_m_eta": h ** m * eta_sm,
            }
        )
    seq = [r["h_m_eta"] for r in rows]
    converged = len(seq) >= 3 and abs(seq[-1] - seq[-2]) < 0.5 * abs(seq[-2] - seq[-3]) + 1e-12
    report = {
        "rows": rows,
        "extrapolation_converged": bool(converged),
        "volume_limit_reference": (
            None
            if reference_volume is None
            else -0.5 * m / (2 * np.pi) ** (m + 1) * reference_volume
        ),
        "note": (
            "compact-manifold volume limit is not desk reproducible; the "
            "substitute checks are the progression closed form and the "
            "master-integral identity"
        ),
    }
    if not converged:
        warnings.warn("h^m eta sequence did not extrapolate; reported as-is")
    return report


# --- report export ----------------------------------------------------------

def report_to_json(report):
    def enc(x):
        if isinstance(x, complex):
            return {"re": x.real, "im": x.imag}
        return x

    rows = [{k: enc(v) for k, v in r.items()} for r in report["rows"]]
    payload = dict(report)
    payload["rows"] = rows
    return json.dumps(payload, default=str)


def report_to_csv(report):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    keys = list(report["rows"][0].keys()) if report["rows"] else []
    cols = []
    for k in keys:
        if isinstance(report["rows"][0][k], complex):
            cols += [f"{k}_re", f"{k}_im"]
        else:
            cols.append(k)
    w.writerow(cols)
    for r in report["rows"]:
        row = []
        for k in keys:
            v = r[k]
            if isinstance(v, complex):
                row += [f"{v.real:.17g}", f"{v.imag:.17g}"]
            else:
                row.append(f"{v:.17g}" if isinstance(v, float) else v)
        w.writerow(row)
    return buf.getvalue()
