import numpy as np
import pytest

from diractrace import symplectic as sy


def random_decomposition(rng, m):
    pairs = m
    lox_n = int(rng.integers(0, pairs // 2 + 1))
    pairs -= 2 * lox_n
    ne = int(rng.integers(0, pairs + 1))
    pairs -= ne
    nph = int(rng.integers(0, pairs + 1))
    nnh = pairs - nph
    return sy.BlockDecomposition(
        elliptic=tuple(rng.uniform(0.1, 2 * np.pi - 0.1, ne)),
        pos_hyp=tuple(rng.uniform(0.1, 1.5, nph)),
        neg_hyp=tuple(rng.uniform(0.1, 1.5, nnh)),
        loxodromic=tuple(
            (rng.uniform(0.1, 1.0), rng.uniform(0.2, np.pi - 0.2)) for _ in range(lox_n)
        ),
    )


def decomposition_close(d1, d2, tol=1e-8):
    if (
        len(d1.elliptic) != len(d2.elliptic)
        or len(d1.pos_hyp) != len(d2.pos_hyp)
        or len(d1.neg_hyp) != len(d2.neg_hyp)
        or len(d1.loxodromic) != len(d2.loxodromic)
    ):
        return False
    ok = all(abs(a - b) < tol for a, b in zip(sorted(d1.elliptic), sorted(d2.elliptic)))
    ok &= all(abs(a - b) < tol for a, b in zip(sorted(d1.pos_hyp), sorted(d2.pos_hyp)))
    ok &= all(abs(a - b) < tol for a, b in zip(sorted(d1.neg_hyp), sorted(d2.neg_hyp)))
    for (a1, b1), (a2, b2) in zip(sorted(d1.loxodromic), sorted(d2.loxodromic)):
        ok &= abs(a1 - a2) < tol and abs(b1 - b2) < tol
    return ok


def test_classify_elliptic_rotation():
    b = 1.1
    P = np.array([[np.cos(b), -np.sin(b)], [np.sin(b), np.cos(b)]])
    d = sy.classify_return_map(P)
    assert d.elliptic == (pytest.approx(1.1),) and not d.pos_hyp


def test_classify_hyperbolic_pair():
    P = np.diag([np.exp(0.7), np.exp(-0.7)])
    assert sy.classify_return_map(P).pos_hyp == (pytest.approx(0.7),)
    assert sy.classify_return_map(-P).neg_hyp == (pytest.approx(0.7),)


def test_classify_loxodromic_block():
    d = sy.BlockDecomposition(loxodromic=((0.5, 1.0),))
    M = sy.assemble_normal_form(d)
    J = sy.standard_J(2)
    assert np.abs(M.T @ J @ M - J).max() < 1e-12
    w = np.linalg.eigvals(M)
    expect = {np.exp(s * 0.5 + 1j * t) for s in (-1, 1) for t in (-1.0, 1.0)}
    for lam in w:
        assert min(abs(lam - e) for e in expect) < 1e-12
    d2 = sy.classify_return_map(M)
    assert d2.loxodromic[0] == (pytest.approx(0.5), pytest.approx(1.0))


def test_classify_rejects_degenerate_and_nonsymplectic():
    with pytest.raises(sy.NonSymplecticError):
        sy.classify_return_map(np.diag([2.0, 2.0]))
    with pytest.raises(sy.DegenerateSpectrumError):
        sy.classify_return_map(np.eye(2))


def test_round_trip_200_random():
    rng = np.random.default_rng(3)
    done = 0
    while done < 200:
        m = int(rng.integers(1, 4))
        d = random_decomposition(rng, m)
        M = sy.assemble_normal_form(d)
        C = sy.random_symplectic(m, rng)
        try:
            d2 = sy.classify_return_map(C @ M @ np.linalg.inv(C))
        except sy.DegenerateSpectrumError:
            continue
        assert decomposition_close(d, d2)
        done += 1


def test_det_one_minus_examples():
    d = sy.BlockDecomposition(elliptic=(np.pi,))
    assert sy.det_one_minus(d, 1) == pytest.approx(4.0)
    d = sy.BlockDecomposition(pos_hyp=(0.7,))
    direct = abs((1 - np.exp(0.7)) * (1 - np.exp(-0.7)))
    assert sy.det_one_minus(d, 1) == pytest.approx(direct, abs=1e-12)


def test_det_one_minus_against_direct_determinants():
    rng = np.random.default_rng(9)
    done = 0
    while done < 100:
        m = int(rng.integers(1, 4))
        d = random_decomposition(rng, m)
        ell = int(rng.integers(1, 4))
        M = sy.assemble_normal_form(d)
        C = sy.random_symplectic(m, rng)
        P = C @ M @ np.linalg.inv(C)
        try:
            block = sy.det_one_minus(d, ell)
        except sy.DegenerateIterateError:
            continue
        direct = abs(np.linalg.det(np.eye(2 * m) - np.linalg.matrix_power(P, ell)))
        assert abs(block - direct) <= 1e-10 * max(1.0, direct)
        assert block > 0
        done += 1


def test_neg_hyp_parity():
    d = sy.BlockDecomposition(neg_hyp=(0.6,))
    assert sy.det_one_minus(d, 1) == pytest.approx(4 * np.cosh(0.3) ** 2)
    assert sy.det_one_minus(d, 2) == pytest.approx(4 * np.sinh(0.6) ** 2)


def test_nonresonance_examples():
    r = sy.check_nonresonant(sy.BlockDecomposition(elliptic=(np.pi,)), 2)
    assert r["resonant"] and r["set"] == "angles"
    r = sy.check_nonresonant(sy.BlockDecomposition(elliptic=(np.pi * np.sqrt(2),)), 50)
    assert not r["resonant"]
    r = sy.check_nonresonant(sy.BlockDecomposition(pos_hyp=(1.0,)), 50)
    assert not r["resonant"]


def test_nonresonance_planted_relations():
    rng = np.random.default_rng(11)
    found = 0
    while found < 5:
        c = rng.integers(-50, 51, size=3)
        if np.all(c == 0):
            continue
        base = rng.uniform(0.5, 2.0, size=3)
        c4 = int(rng.integers(1, 51))
        a4 = -(c @ base) / c4
        if a4 <= 0:
            continue
        d = sy.BlockDecomposition(pos_hyp=tuple(sorted([*base, a4])))
        assert sy.check_nonresonant(d, 50, tol=1e-9)["resonant"]
        found += 1


def test_maslov_per_block():
    d = sy.BlockDecomposition(elliptic=(1.0,))
    assert sy.maslov_index(d, 1) == 1
    assert sy.maslov_index(d, 7) == 1 + 2 * int(np.floor(7 / (2 * np.pi)))
    assert sy.maslov_index(sy.BlockDecomposition(pos_hyp=(0.8,)), 5) == 0
    assert sy.maslov_index(sy.BlockDecomposition(neg_hyp=(0.5,)), 3) == 3


def test_maslov_path_validator():
    assert sy.path_maslov_index("elliptic", 1.0, 1) == 1
    assert sy.path_maslov_index("elliptic", 1.0, 7) == 3
    for b in (0.7, 2.2, 4.4):
        for ell in (1, 2, 5):
            if abs(np.sin(0.5 * ell * b)) < 1e-6:
                continue
            d = sy.BlockDecomposition(elliptic=(b,))
            assert sy.path_maslov_index("elliptic", b, ell) == sy.maslov_index(d, ell)
    assert sy.path_maslov_index("pos_hyp", 0.8, 3) == 0
    assert sy.path_maslov_index("neg_hyp", 0.5, 1) == 1
    assert sy.path_maslov_index("neg_hyp", 0.5, 2) == 2


class TestModelReebFlow:
    def test_elliptic_rotation_and_time(self):
        d = sy.BlockDecomposition(elliptic=(0.9, 1.7))
        spec = sy.ContactModelSpec(T_gamma=2.0, decomp=d)
        z0 = np.array([0.05, -0.03, 0.02, 0.07])
        z1, T = sy.model_reeb_flow(spec, z0, steps=2000)
        out = z0.copy()
        for j, b in enumerate(d.elliptic):
            c, s = np.cos(b), np.sin(b)
            x, y = z0[j], z0[j + 2]
            out[j], out[j + 2] = c * x + s * y, -s * x + c * y
        assert np.abs(z1 - out).max() < 1e-6
        assert T == pytest.approx(2.0, abs=1e-10)

    def test_fixed_point_at_origin(self):
        d = sy.BlockDecomposition(elliptic=(1.3,))
        spec = sy.ContactModelSpec(T_gamma=1.5, decomp=d)
        z1, T = sy.model_reeb_flow(spec, np.zeros(2), steps=1000)
        assert np.abs(z1).max() == 0.0 and T == pytest.approx(1.5)

    def test_quadratics_conserved(self):
        d = sy.BlockDecomposition(elliptic=(1.1,), neg_hyp=(0.6,))
        phi = {(1, 0): 1.1, (0, 1): 0.6, (2, 0): 0.25, (1, 1): -0.15}
        spec = sy.ContactModelSpec(T_gamma=1.5, decomp=d, phi_plus=phi)
        z0 = np.array([0.06, -0.04, 0.03, 0.05])
        z1, T = sy.model_reeb_flow(spec, z0, steps=2000)
        Q0 = sy.quadratic_values(spec, z0)
        Q1 = sy.quadratic_values(spec, z1)
        assert max(abs(Q0[k] - Q1[k]) for k in Q0) < 1e-8
        assert T == pytest.approx(sy.return_time_formula(spec, z0), abs=1e-6)

    def test_matches_composed_hamiltonian_flows(self):
        d = sy.BlockDecomposition(elliptic=(1.1,), neg_hyp=(0.6,))
        phi = {(1, 0): 1.1, (0, 1): 0.6, (2, 0): 0.25, (1, 1): -0.15}
        spec = sy.ContactModelSpec(T_gamma=1.5, decomp=d, phi_plus=phi)
        z0 = np.array([0.06, -0.04, 0.03, 0.05])
        z1, _ = sy.model_reeb_flow(spec, z0, steps=3000)
        z2 = sy.return_map_closed_form(spec, z0, steps=4000)
        assert np.abs(z1 - z2).max() < 1e-6

    def test_linear_phi_linear_term_validated(self):
        d = sy.BlockDecomposition(elliptic=(1.1,))
        with pytest.raises(ValueError):
            sy.ContactModelSpec(T_gamma=1.0, decomp=d, phi_plus={(1,): 0.9})

    def test_step_count_guard(self):
        d = sy.BlockDecomposition(elliptic=(1.1,))
        spec = sy.ContactModelSpec(T_gamma=1.0, decomp=d)
        with pytest.raises(ValueError):
            sy.model_reeb_flow(spec, np.zeros(2), steps=100)


def test_return_map_relation():
    d = sy.BlockDecomposition(elliptic=(1.2,))
    spec = sy.ContactModelSpec(T_gamma=1.5, decomp=d)
    res = sy.return_map_relation_check(spec, [np.array([0.05, -0.08])], steps=1500)
    assert res < 1e-6
    # x = 0 residual vanishes by symmetry
    res0 = sy.return_map_relation_check(spec, [np.zeros(2)], steps=1500)
    assert res0 < 1e-12


def test_serialization():
    d = sy.BlockDecomposition(elliptic=(1.0,), loxodromic=((0.5, 1.0),))
    import json

    payload = json.loads(sy.decomposition_to_json(d))
    assert payload["loxodromic"] == [[0.5, 1.0]]
    M = sy.matrix_from_text("1 0\n0 1")
    assert np.abs(M - np.eye(2)).max() == 0.0
    M = sy.matrix_from_text("[[1, 0], [0, 1]]")
    assert np.abs(M - np.eye(2)).max() == 0.0
