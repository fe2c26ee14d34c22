import numpy as np
import pytest

from diractrace import gutzwiller as gw
from diractrace.landau import EigenLine
from diractrace.symplectic import BlockDecomposition, OrbitRecord


def circle():
    return gw.ModelGeometry(L_gamma=1.0, T_gamma=np.sqrt(3.0))


def elliptic():
    return gw.ModelGeometry(
        L_gamma=1.0,
        T_gamma=np.sqrt(3.0),
        transverse=BlockDecomposition(elliptic=(np.sqrt(2.0),)),
    )


def window(h, lam=0.3, theta_center=1.0):
    return gw.Window(
        gw.SmoothBump(0.0, 1.2, 0.6),
        gw.SmoothBump(theta_center, 0.45, 0.22),
        lam=lam,
        h=h,
    )


def test_window_consistency():
    w = window(0.02)
    assert abs(w.theta_check(0.0)[0] - w.theta_int() / (2 * np.pi)) < 1e-10
    ss = np.linspace(-400, 400, 160001)
    pl = np.trapezoid(np.abs(w.theta_check(ss)) ** 2, ss)
    assert abs(pl - w.theta_sq_int() / (2 * np.pi)) < 1e-8


def test_model_eigenvalues_examples():
    # no transverse blocks: lambda = -(2 pi h k + T)/L, spacing 2 pi h / L
    g = gw.ModelGeometry(L_gamma=1.0, T_gamma=2 * np.pi)
    w = window(0.1)
    lines = gw.model_eigenvalues(g, w, k_range=(-12, -8))
    byk = {l.label.k: l.value for l in lines}
    assert byk[-10] == pytest.approx(0.0, abs=1e-14)
    ks = sorted(byk)
    gaps = np.diff([byk[k] for k in ks])
    assert np.abs(gaps + 2 * np.pi * 0.1).max() < 1e-14
    # one transverse block
    g2 = gw.ModelGeometry(
        L_gamma=1.0, T_gamma=1.0, transverse=BlockDecomposition(elliptic=(1.0,))
    )
    w2 = window(0.01)
    lines = gw.model_eigenvalues(g2, w2, k_range=(0, 0), n_max=0)
    assert lines[0].value == pytest.approx(-(1.0 + 0.005))


def test_spectral_side_trivial_cases():
    w = window(0.02)
    # f vanishes on the whole rescaled range
    lines = [EigenLine(100.0 + k, 1, None) for k in range(5)]
    assert gw.spectral_side(lines, w) == 0.0
    # a single eigenvalue at lam sqrt h gives theta_check(0)/h
    lam_i = w.lam * np.sqrt(w.h)
    pad = [EigenLine(100.0, 1, None), EigenLine(-100.0, 1, None)]
    val = gw.spectral_side([EigenLine(lam_i, 1, None)] + pad, w)
    expect = w.f(w.lam) * w.theta_check(0.0)[0] / w.h
    assert val == pytest.approx(expect, rel=1e-12)


def test_spectral_side_coverage_guard():
    w = window(0.02)
    lines = [EigenLine(0.0, 1, None)]  # f(0) = 1 at the list edge
    with pytest.raises(gw.CoverageError):
        gw.spectral_side(lines, w)


def test_circle_poisson_identity():
    g = circle()
    rep = gw.trace_compare(g, window, [0.05, 0.02, 0.01])
    for r in rep["rows"]:
        assert r["rel_err"] < 1e-6


def test_geometric_side_orbit_records():
    g = circle()
    w = window(0.02)
    orbits = [OrbitRecord(T_prim=g.T_gamma, L_prim=g.L_gamma, ell=ell,
                          decomp=BlockDecomposition()) for ell in (1, 2, 3)]
    total = gw.geometric_side(orbits, None, w, order="exact", g=g)
    direct = sum(gw.orbit_terms(g, w, [1, 2, 3], exact=True).values())
    assert total == pytest.approx(direct)
    # theta supported away from every iterate length: dynamical sum tiny
    w_far = gw.Window(gw.SmoothBump(0.0, 1.2, 0.6), gw.SmoothBump(0.45, 0.04, 0.02),
                      lam=0.3, h=0.02)
    vals = gw.orbit_terms(g, w_far, [1, 2, 3], exact=False)
    assert max(abs(v) for v in vals.values()) < 1e-10


def test_elliptic_amplitude_matches_det_and_maslov():
    # i/(2 sin(l b/2)) = e^{i pi m/2} / sqrt|det(1 - P^l)|
    from diractrace.symplectic import det_one_minus, maslov_index

    d = BlockDecomposition(elliptic=(np.sqrt(2.0),))
    for ell in (1, 2, 3, 5, 9):
        block = 1j / (2 * np.sin(0.5 * ell * np.sqrt(2.0)))
        m = maslov_index(d, ell)
        expect = np.exp(1j * np.pi * m / 2) / np.sqrt(det_one_minus(d, ell))
        assert block == pytest.approx(expect, rel=1e-12)


def test_elliptic_ramp_weighted_identity():
    # ramp-weighted transverse sum vs the regularized geometric series
    beta = np.sqrt(2.0)
    weights = gw._ramp_weights(700, 250)
    ns = np.arange(701)
    for ell in (1, 2, 3):
        t = complex(np.sum(weights * np.exp(1j * ell * beta * (ns + 0.5))))
        closed = 1j / (2 * np.sin(0.5 * ell * beta))
        assert abs(t - closed) < 1e-10


def test_elliptic_trace_compare_slope():
    g = elliptic()
    rep = gw.trace_compare(g, window, [0.05, 0.02, 0.01], n_flat=250, n_max=750)
    assert rep["error_slope"] >= 0.4
    assert not rep["certificate"]["resonant"]


def test_resonant_model_refused():
    g = gw.ModelGeometry(
        L_gamma=1.0, T_gamma=1.0, transverse=BlockDecomposition(elliptic=(np.pi,))
    )
    with pytest.raises(gw.ResonantModelError):
        gw.trace_compare(g, window, [0.05])


def test_hyperbolic_transverse_refused():
    with pytest.raises(gw.ResonantModelError):
        gw.ModelGeometry(
            L_gamma=1.0, T_gamma=1.0, transverse=BlockDecomposition(pos_hyp=(0.5,))
        )


def test_u0_evenness():
    g = circle()

    def wb(h, lam):
        return gw.Window(gw.SmoothBump(0.0, 1.2, 0.6), gw.SmoothBump(0.0, 0.4, 0.2),
                         lam=lam, h=h)

    vals = gw.u0_extract(g, wb, [0.01], [0.5, -0.5, 0.9, -0.9])
    assert abs(vals[0.5] - vals[-0.5]) < 1e-6
    assert abs(vals[0.9] - vals[-0.9]) < 1e-6


def test_eta_limit_check():
    g = circle()
    rep = gw.eta_limit_check(g, [0.05, 0.02, 0.01])
    for r in rep["rows"]:
        assert r["abs_err"] < 1e-6
    assert "not desk reproducible" in rep["note"]
    # symmetric spectrum sanity: eta of a +- symmetric list is 0
    from diractrace.heatkernel import eta_smoothed

    sym = [EigenLine(v, 1, None) for v in (1.0, -1.0, 0.25, -0.25)]
    assert eta_smoothed(sym, 0.05) == 0.0


def test_report_serialization():
    g = circle()
    rep = gw.trace_compare(g, window, [0.05])
    import json

    payload = json.loads(gw.report_to_json(rep))
    assert payload["rows"][0]["spectral"].keys() == {"re", "im"}
    text = gw.report_to_csv(rep)
    assert text.splitlines()[0].startswith("h,spectral_re,spectral_im")


def test_sampled_window_function():
    xs = np.linspace(-1.0, 1.0, 41)
    ys = np.cos(np.pi * xs / 2) ** 2
    ys[0] = ys[-1] = 0.0
    fn = gw.SampledWindowFunction(xs, ys)
    assert fn(0.0) == pytest.approx(1.0, abs=1e-3)
    assert fn(2.0) == 0.0 and fn(-2.0) == 0.0
