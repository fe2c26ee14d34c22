"""Mehler heat kernels, the closed Gaussian/sinh integral tables, the
pointwise second heat coefficient, and eta smoothing.

The model operator is the constant-field magnetic Dirac operator on
R^{2m+1} whose square is the complex harmonic oscillator; its heat kernel
factorizes into a free Gaussian in x_0, a magnetic Mehler factor per
(x_j, x_{j+m}) plane, and the spin twist exp(i t F_m),
F_m = sum_j mu_j gamma_j gamma_{j+m}.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm
from scipy.special import erfc

from .clifford import all_gammas, spin_dim

__all__ = [
    "HeatParams",
    "JetData",
    "mehler_kernel",
    "mehler_scalar_kernel",
    "gaussian_moment",
    "gaussian_moment_quadrature",
    "sinh_integral",
    "sinh_integral_quadrature",
    "u1_pointwise",
    "u1_pointwise_three_term",
    "u1_even_part",
    "u1_time_integral",
    "master_integral_quadrature",
    "master_integral_antiderivative",
    "eta_smoothed",
    "eta_sign_sum",
    "eta_arithmetic_progression",
    "u1_table_csv",
]


@dataclass(frozen=True)
class HeatParams:
    t: float
    mu: tuple

    def __post_init__(self):
        if not (self.t > 0):
            raise ValueError("t must be positive")
        mu = tuple(float(x) for x in self.mu)
        if any(x <= 0 for x in mu):
            raise ValueError("mu must be positive")
        object.__setattr__(self, "mu", mu)

    @property
    def m(self):
        return len(self.mu)


@dataclass(frozen=True)
class JetData:
    """One-point jet of the contracted endomorphism: mu, A_{jkl}, pair multiplicities."""

    mu: tuple
    A: object  # (2m+1)^3 array, antisymmetric in the first two slots
    d: tuple = None

    def __post_init__(self):
        mu = tuple(float(x) for x in self.mu)
        object.__setattr__(self, "mu", mu)
        n = 2 * len(mu) + 1
        A = np.asarray(self.A, dtype=float)
        if A.shape != (n, n, n):
            raise ValueError(f"A must have shape {(n, n, n)}")
        if np.abs(A + A.transpose(1, 0, 2)).max() > 1e-12:
            raise ValueError("A must be antisymmetric in (j, k)")
        object.__setattr__(self, "A", A)
        if self.d is None:
            object.__setattr__(self, "d", (2,) * len(mu))

    @property
    def m(self):
        return len(self.mu)


def _mu_axis(mu, k):
    # field strength attached to axis k in 1..2m (mu_{k+m} = mu_k)
    m = len(mu)
    return mu[(k - 1) % m]


def mehler_scalar_kernel(xp, yp, p):
    """Scalar magnetic factor: prod_j mu_j/(4 pi sinh mu_j t) times m_t(x', y')."""
    t, mu, m = p.t, p.mu, p.m
    xp = np.asarray(xp, dtype=float)
    yp = np.asarray(yp, dtype=float)
    pref, expo = 1.0, 0.0
    for j in range(1, m + 1):
        mt = mu[j - 1] * t
        if mt > 700:
            return 0.0
        pref *= mu[j - 1] / (4 * np.pi * np.sinh(mt))
        a = mu[j - 1] / (4 * np.tanh(mt))
        b = mu[j - 1] / (2 * np.sinh(mt))
        for i in (j - 1, j - 1 + m):
            expo += -a * (xp[i] ** 2 + yp[i] ** 2) + b * xp[i] * yp[i]
    return pref * np.exp(expo)


def mehler_kernel(x, y, p):
    """Full spin-valued heat kernel e^{-t D_0^2}(x, y) on R^{2m+1}.

    Returns a 2^m x 2^m complex matrix; the overflow guard returns the zero
    matrix with an `underflow` flag when any mu_j t exceeds 700.
    """
    t, mu, m = p.t, p.mu, p.m
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != (2 * m + 1,) or y.shape != (2 * m + 1,):
        raise ValueError(f"points must lie in R^{2 * m + 1}")
    N = spin_dim(m)
    if max(mu) * t > 700:
        return np.zeros((N, N), dtype=complex), True
    g0 = np.exp(-((x[0] - y[0]) ** 2) / (4 * t)) / np.sqrt(4 * np.pi * t)
    scal = mehler_scalar_kernel(x[1:], y[1:], p)
    gammas = all_gammas(m)
    Fm = sum(mu[j - 1] * gammas[j] @ gammas[j + m] for j in range(1, m + 1))
    return g0 * scal * expm(1j * t * Fm), False


# --- closed Gaussian moments of E(x'; s, t) -------------------------------

def _pair_factor(mu_k, s, t):
    # sinh(mu s) sinh(mu (t-s)) / (mu sinh(mu t))
    return np.sinh(mu_k * s) * np.sinh(mu_k * (t - s)) / (mu_k * np.sinh(mu_k * t))


def _const_moment(mu, t):
    out = 1.0
    for mu_j in mu:
        out *= mu_j / (4 * np.pi * np.sinh(mu_j * t))
    return out


def gaussian_moment(kind, k, l, s, t, mu):
    """Closed-form integral of E(x'; s, t) against 1, x_k^2, x_k^2 x_l^2 or x_k^4.

    E(x'; s, t) is the product of the two scalar magnetic kernels joining 0
    to x' in times t - s and s (prefactors included).  Axis indices run over
    1..2m with mu_{k+m} = mu_k.
    """
    if not (0 < s < t):
        raise ValueError("need 0 < s < t")
    c = _const_moment(mu, t)
    if kind == "const":
        return c
    if kind == "x2":
        return 2 * c * _pair_factor(_mu_axis(mu, k), s, t)
    if kind == "x2x2":
        if k == l:
            raise ValueError("x2x2 needs distinct axes; use kind='x4'")
        return 4 * c * _pair_factor(_mu_axis(mu, k), s, t) * _pair_factor(_mu_axis(mu, l), s, t)
    if kind == "x4":
        return 12 * c * _pair_factor(_mu_axis(mu, k), s, t) ** 2
    raise ValueError(f"unknown moment kind {kind!r}")


def _scalar_kernel_grid(X, yp, p):
    # vectorized scalar magnetic kernel at stacked points X[..., 2m]
    t, mu, m = p.t, p.mu, p.m
    yp = np.asarray(yp, dtype=float)
    pref = 1.0
    expo = np.zeros(X.shape[:-1])
    for j in range(1, m + 1):
        mt = mu[j - 1] * t
        pref *= mu[j - 1] / (4 * np.pi * np.sinh(mt))
        a = mu[j - 1] / (4 * np.tanh(mt))
        b = mu[j - 1] / (2 * np.sinh(mt))
        for i in (j - 1, j - 1 + m):
            expo += -a * (X[..., i] ** 2 + yp[i] ** 2) + b * X[..., i] * yp[i]
    return pref * np.exp(expo)


def gaussian_moment_quadrature(kind, k, l, s, t, mu, nodes=80):
    """Tensor Gauss-Hermite oracle: integrates the two-kernel product directly.

    E(x') is evaluated as the product of the scalar kernels joining 0 to x'
    in time t - s and x' to 0 in time s; the per-axis Gaussian scale is
    measured numerically from E itself before rescaling the rule.
    """
    m = len(mu)
    p_s = HeatParams(s, mu)
    p_ts = HeatParams(t - s, mu)

    def E(X):
        return _scalar_kernel_grid(X, np.zeros(2 * m), p_ts) * _scalar_kernel_grid(
            X, np.zeros(2 * m), p_s
        )

    e0 = E(np.zeros((1, 2 * m)))[0]
    scales = []
    probe = 0.1
    for i in range(2 * m):
        xi = np.zeros((1, 2 * m))
        xi[0, i] = probe
        c = -np.log(E(xi)[0] / e0) / probe ** 2
        scales.append(1.0 / np.sqrt(c))
    xs, ws = np.polynomial.hermite.hermgauss(nodes)
    axes = [xs * sc for sc in scales]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    vals = E(grid) * np.exp(sum((grid[..., i] / scales[i]) ** 2 for i in range(2 * m)))
    if kind == "x2":
        vals = vals * grid[..., k - 1] ** 2
    elif kind == "x2x2":
        vals = vals * grid[..., k - 1] ** 2 * grid[..., l - 1] ** 2
    elif kind == "x4":
        vals = vals * grid[..., k - 1] ** 4
    elif kind != "const":
        raise ValueError(f"unknown moment kind {kind!r}")
    wgrid = np.ones_like(vals)
    for i in range(2 * m):
        shape = [1] * (2 * m)
        shape[i] = nodes
        wgrid = wgrid * (ws * scales[i]).reshape(shape)
    return float(np.sum(vals * wgrid))


def sinh_integral(kind, mu_k, t):
    """The four closed s-integrals of sinh/cosh products over (0, t).

    kind 1: int sinh(mu s) sinh(mu (t-s)) ds = [(mu t) cosh(mu t) - sinh(mu t)]/(2 mu)
    kind 2: int cosh(mu s) sinh(mu (t-s)) ds = (mu t) sinh(mu t)/(2 mu)
    kind 3: int s sinh(mu s) sinh(mu (t-s)) ds = (mu t)[(mu t) cosh - sinh]/(2 mu)^2
    kind 4: int s sinh(mu s) cosh(mu (t-s)) ds
            = [(mu t) cosh - sinh + (mu t)^2 sinh]/(2 mu)^2
    """
    if not (t > 0):
        raise ValueError("t must be positive")
    u = mu_k * t
    if u > 700:
        raise OverflowError("mu t too large for a float64 sinh table value")
    ch, sh = np.cosh(u), np.sinh(u)
    if kind == 1:
        return (u * ch - sh) / (2 * mu_k)
    if kind == 2:
        return u * sh / (2 * mu_k)
    if kind == 3:
        return u * (u * ch - sh) / (2 * mu_k) ** 2
    if kind == 4:
        return (u * ch - sh + u ** 2 * sh) / (2 * mu_k) ** 2
    raise ValueError(f"unknown sinh integral kind {kind!r}")


def sinh_integral_quadrature(kind, mu_k, t):
    from scipy.integrate import quad

    f = {
        1: lambda s: np.sinh(mu_k * s) * np.sinh(mu_k * (t - s)),
        2: lambda s: np.cosh(mu_k * s) * np.sinh(mu_k * (t - s)),
        3: lambda s: s * np.sinh(mu_k * s) * np.sinh(mu_k * (t - s)),
        4: lambda s: s * np.sinh(mu_k * s) * np.cosh(mu_k * (t - s)),
    }[kind]
    val, _ = quad(f, 0.0, t, epsabs=1e-13, epsrel=1e-13, limit=200)
    return val


# --- the second heat coefficient ------------------------------------------

def _sinh_ratio_bracket(mu_j, t):
    # [1/(mu t) - mu t / sinh^2(mu t)], stable for large mu t
    u = mu_j * t
    if u > 30:
        # sinh^2 u = e^{2u}(1 - e^{-2u})^2 / 4
        r = 4 * u * np.exp(-2 * u) / (1 - np.exp(-2 * u)) ** 2
        return 1.0 / u - r
    return 1.0 / u - u / np.sinh(u) ** 2


def u1_pointwise(j, t):
    """u_1 evaluated on the odd Gaussian s e^{-t s^2} (simplified closed form).

    Equals - sum_{k=1}^{2m} A_{k,0,k} (prod mu)/(2 pi)^m (1/(2 mu_k))
    (4 pi t)^{-1/2} [1/(mu_k t) - mu_k t / sinh^2(mu_k t)].
    """
    if not (t > 0):
        raise ValueError("t must be positive")
    mu, A, m = j.mu, j.A, j.m
    pref = np.prod(mu) / (2 * np.pi) ** m / np.sqrt(4 * np.pi * t)
    total = 0.0
    for k in range(1, 2 * m + 1):
        mu_k = _mu_axis(mu, k)
        total += A[k, 0, k] / (2 * mu_k) * _sinh_ratio_bracket(mu_k, t)
    return -pref * total


def u1_pointwise_three_term(j, t):
    """Same value assembled from the unsimplified (0kk) and (j0j) summands."""
    mu, A, m = j.mu, j.A, j.m
    pref = np.prod(mu) / (2 * np.pi) ** m / np.sqrt(4 * np.pi * t)
    total = 0.0
    for k in range(1, 2 * m + 1):
        mu_k = _mu_axis(mu, k)
        # (1/3)(1/mu_k)[mu t/sinh^2 - 1/(mu t)] against A_{0kk}
        total += A[0, k, k] * (1.0 / 3.0) / mu_k * (-_sinh_ratio_bracket(mu_k, t))
        # (1/3)(1/2 mu_k)[1/(mu t) - mu t/sinh^2] against A_{k0k}
        total += A[k, 0, k] * (1.0 / 3.0) / (2 * mu_k) * _sinh_ratio_bracket(mu_k, t)
    return -pref * total


def u1_even_part(j, t):
    """u_1 evaluated on the even Gaussian e^{-t s^2}; vanishes identically."""
    if not (t > 0):
        raise ValueError("t must be positive")
    return 0.0


def master_integral_antiderivative(u):
    """Antiderivative of (1/u)[1/u - u/sinh^2 u], i.e. -1/u + 2/(e^{2u} - 1)."""
    u = np.asarray(u, dtype=float)
    return -1.0 / u + 2.0 / np.expm1(2.0 * u)


def master_integral_quadrature():
    """int_0^infty (1/u^2 - 1/sinh^2 u) du by adaptive quadrature (equals 1)."""
    from scipy.integrate import quad

    def g(u):
        if u < 1e-3:
            # 1/u^2 - 1/sinh^2 u = 1/3 - u^2/15 + O(u^4)
            return 1.0 / 3.0 - u ** 2 / 15.0
        return 1.0 / u ** 2 - 1.0 / np.sinh(u) ** 2

    a, _ = quad(g, 0.0, 30.0, epsabs=1e-12, epsrel=1e-12, limit=300)
    b, _ = quad(lambda u: 1.0 / u ** 2 - 4 * np.exp(-2 * u) / (1 - np.exp(-2 * u)) ** 2,
                30.0, np.inf, epsabs=1e-13, limit=200)
    return a + b


def u1_time_integral(j):
    """int_0^infty u_1(s e^{-t s^2}) dt / sqrt(pi t), in closed form.

    The master integral int (1/u)[1/u - u/sinh^2 u] du equals 1 by the
    antiderivative -1/u + 2/(e^{2u} - 1).
    """
    mu, A, m = j.mu, j.A, j.m
    total = 0.0
    for k in range(1, 2 * m + 1):
        mu_k = _mu_axis(mu, k)
        total += A[k, 0, k] / mu_k
    return -0.5 * np.prod(mu) / (2 * np.pi) ** (m + 1) * total


def heat_equation_residual_fd(p, x, y0=0.25, dt=1e-5, hx=1e-3):
    """|(d/dt + D_0^2) K_t|(x, y) by finite differences, y on the y' = 0 slice.

    D_0^2 = -Delta + sum_j [-i mu_j (x_{j+m} d_j - x_j d_{j+m})
    + (mu_j^2/4)(x_j^2 + x_{j+m}^2)] - i F_m.  The printed kernel solves this
    exactly when one endpoint has vanishing magnetic coordinates (the slice
    all the coefficient integrals use); away from it the angular factor of
    the split semigroup enters.
    """
    t, mu, m = p.t, p.mu, p.m
    n = 2 * m + 1
    x = np.asarray(x, dtype=float)
    y = np.zeros(n)
    y[0] = y0

    def K(x_, t_):
        return mehler_kernel(x_, y, HeatParams(t_, mu))[0]

    Kt = (K(x, t + dt) - K(x, t - dt)) / (2 * dt)
    K0 = K(x, t)

    def d2(i):
        e = np.zeros(n)
        e[i] = hx
        return (K(x + e, t) - 2 * K0 + K(x - e, t)) / hx ** 2

    def d1(i):
        e = np.zeros(n)
        e[i] = hx
        return (K(x + e, t) - K(x - e, t)) / (2 * hx)

    gammas = all_gammas(m)
    Fm = sum(mu[j - 1] * gammas[j] @ gammas[j + m] for j in range(1, m + 1))
    D2K = -sum(d2(i) for i in range(n)) - 1j * Fm @ K0
    for j in range(1, m + 1):
        D2K = D2K - 1j * mu[j - 1] * (x[j + m] * d1(j) - x[j] * d1(j + m))
        D2K = D2K + (mu[j - 1] ** 2 / 4) * (x[j] ** 2 + x[j + m] ** 2) * K0
    return float(np.abs(Kt + D2K).max())


# --- eta smoothing ---------------------------------------------------------

def _eta_E(x):
    # sign(x) erfc(|x|) with sign(0) = 0
    return np.sign(x) * erfc(np.abs(x))


def eta_sign_sum(spectrum):
    """Exact spectral asymmetry sum, sign(0) = 0."""
    return float(sum(l.multiplicity * np.sign(l.value) for l in spectrum))


def eta_smoothed(spectrum, eps, exact=False):
    """Smoothed eta sum of a finite spectrum: sum mult * E(eps * lambda).

    E(x) = sign(x) erfc(|x|); with exact=True the unsmoothed sign sum is
    returned instead.  An empty spectrum returns 0.
    """
    if not (eps > 0):
        raise ValueError("eps must be positive")
    if not spectrum:
        import warnings

        warnings.warn("eta of an empty spectrum is 0")
        return 0.0
    if exact:
        return eta_sign_sum(spectrum)
    vals = np.array([l.value for l in spectrum])
    mult = np.array([l.multiplicity for l in spectrum])
    return float(np.sum(mult * _eta_E(eps * vals)))


def eta_arithmetic_progression(a, b):
    """Closed-form eta of the two-sided progression {a k + b}: 1 - 2 frac(b/a).

    Evaluated through the Hurwitz zeta function at s = 0 (zeta(0, q) = 1/2 - q),
    for a > 0 and b not a multiple of a.
    """
    import mpmath

    theta = (b / a) % 1.0
    if theta == 0.0:
        raise ValueError("b must not be a multiple of a")
    pos = mpmath.zeta(0, theta)
    neg = mpmath.zeta(0, 1.0 - theta)
    return float(pos - neg)


# --- export ----------------------------------------------------------------

def u1_table_csv(j, t_values):
    """CSV rows (t, u1, quadrature_check, abs_err) for the odd coefficient."""
    from scipy.integrate import quad

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(["t", "u1", "quadrature_check", "abs_err"])
    for t in t_values:
        val = u1_pointwise(j, t)
        chk = u1_pointwise_three_term(j, t)
        w.writerow([f"{t:.17g}", f"{val:.17g}", f"{chk:.17g}", f"{abs(val - chk):.3e}"])
    return buf.getvalue()
