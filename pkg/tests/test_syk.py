from __future__ import annotations

import itertools
import json
import math
import os

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles as O
from qsos.spectra import to_dense
from qsos.syk import (
    GaussianState,
    SykError,
    balanced_coloring_exists,
    canonical_B,
    euler_color,
    excitation_lanczos,
    gaussian_energy,
    gaussian_vs_spectrum,
    matricize,
    matricized_norm,
    moment_bound_experiment,
    pairing_graph,
    pairing_sum,
    pfaffian,
    q6_triangle,
    random_pairing_graph,
    random_pure_gaussian,
    rotate_tensor,
    sample_syk,
    wick_expectation,
)

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")


def dense_gaussian_state(B: np.ndarray) -> np.ndarray:
    """Ground state of (i/4) sum B_lm gamma_l gamma_m built from Kronecker Majoranas."""
    n = B.shape[0]
    g = O.majorana_mats(n // 2)
    H = sum(0.25j * B[l, m] * g[l] @ g[m] for l in range(n) for m in range(n))
    return np.linalg.eigh(H)[1][:, 0]


def dense_expectation(psi, indices, n):
    g = O.majorana_mats(n // 2)
    M = np.eye(len(psi), dtype=complex)
    for i in indices:
        M = M @ g[i]
    return complex(np.vdot(psi, M @ psi))


def test_normalization_and_antisymmetry():
    J = sample_syk(8, 4, seed=1)
    assert J.l2_norm == pytest.approx(1.0, abs=1e-12)
    assert np.linalg.norm(J.full_tensor()) == pytest.approx(1.0, abs=1e-12)
    assert J.coefficient((0, 1, 2, 3)) == pytest.approx(-J.coefficient((1, 0, 2, 3)))
    assert J.coefficient((0, 0, 2, 3)) == 0.0


def test_seed_independence():
    a = sample_syk(16, 4, 0).coeffs
    b = sample_syk(16, 4, 1).coeffs
    assert abs(np.dot(a, b) / (np.linalg.norm(a) * np.linalg.norm(b))) < 0.1


def test_matricizations_preserve_norm():
    J = sample_syk(12, 4, 2)
    for p in range(5):
        assert np.linalg.norm(matricize(J, p)) == pytest.approx(1.0, abs=1e-10)
        assert matricized_norm(J, p) == pytest.approx(np.linalg.norm(matricize(J, p), 2), rel=1e-8)


def test_norm_scaling_two_sizes():
    r16 = [matricized_norm(sample_syk(16, 4, s), 2) for s in range(2)]
    r32 = [matricized_norm(sample_syk(32, 4, s), 2) for s in range(2)]
    assert np.mean(r32) * 32 == pytest.approx(np.mean(r16) * 16, rel=0.5)
    r16 = [matricized_norm(sample_syk(16, 4, s), 1) for s in range(2)]
    r32 = [matricized_norm(sample_syk(32, 4, s), 1) for s in range(2)]
    assert np.mean(r32) * math.sqrt(32) == pytest.approx(np.mean(r16) * math.sqrt(16), rel=0.5)


def test_hamiltonian_matches_full_tensor_sum():
    n = 6
    J = sample_syk(n, 4, 3)
    g = O.majorana_mats(n // 2)
    T = J.full_tensor()
    H = np.zeros_like(g[0])
    for idx in itertools.product(range(n), repeat=4):
        if T[idx] != 0:
            H = H + T[idx] * g[idx[0]] @ g[idx[1]] @ g[idx[2]] @ g[idx[3]]
    assert np.allclose(to_dense(J.hamiltonian()), H, atol=1e-12)


def test_pfaffian_small():
    assert pfaffian(np.array([[0.0, 2.5], [-2.5, 0.0]])) == pytest.approx(2.5)
    A = np.zeros((4, 4))
    A[0, 1], A[1, 0], A[2, 3], A[3, 2] = 2.0, -2.0, 3.0, -3.0
    assert pfaffian(A) == pytest.approx(6.0)
    assert pfaffian(np.zeros((0, 0))) == 1.0
    with pytest.raises(SykError):
        pfaffian(np.ones((2, 2)))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), half=st.integers(1, 6))
def test_pfaffian_squared_is_det(seed, half):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((2 * half, 2 * half))
    A = X - X.T
    pf = pfaffian(A)
    d = np.linalg.det(A)
    assert pf * pf == pytest.approx(d, rel=1e-8, abs=1e-12)


def test_pfaffian_matches_pairing_expansion():
    rng = np.random.default_rng(5)
    X = rng.standard_normal((6, 6))
    A = X - X.T
    # the 15 perfect matchings of six indices, with signs from the crossing count
    direct = 0.0
    for perm in itertools.permutations(range(6)):
        pairs = [perm[i : i + 2] for i in range(0, 6, 2)]
        if all(a < b for a, b in pairs) and [p[0] for p in pairs] == sorted(p[0] for p in pairs):
            inv = sum(1 for i in range(6) for j in range(i + 1, 6) if perm[i] > perm[j])
            direct += (-1) ** inv * np.prod([A[a, b] for a, b in pairs])
    assert pfaffian(A) == pytest.approx(direct)


def test_wick_four_point_formula():
    rng = np.random.default_rng(2)
    st_, _ = random_pure_gaussian(6, rng)
    M = st_.M
    val = wick_expectation(st_, [0, 1, 2, 3])
    assert val == pytest.approx(M[0, 1] * M[2, 3] - M[0, 2] * M[1, 3] + M[0, 3] * M[1, 2])
    assert wick_expectation(st_, []) == 1.0


def test_canonical_state_example():
    B = canonical_B(4)
    psi = dense_gaussian_state(B)
    assert dense_expectation(psi, [0, 1, 2, 3], 4) == pytest.approx(-1.0)
    assert wick_expectation(GaussianState(B), [0, 1, 2, 3]) == pytest.approx(-1.0)


def test_wick_exhaustive_against_dense():
    n = 4
    rng = np.random.default_rng(7)
    for _ in range(5):
        st_, _ = random_pure_gaussian(n, rng)
        psi = dense_gaussian_state(st_.B)
        for length in range(7):
            for idx in itertools.product(range(n), repeat=length):
                ref = dense_expectation(psi, idx, n)
                assert pairing_sum(st_, idx) == pytest.approx(ref, abs=1e-8)
                assert wick_expectation(st_, idx) == pytest.approx(ref, abs=1e-8)


def test_gaussian_energy():
    J = sample_syk(6, 4, 1)
    assert gaussian_energy(GaussianState(np.zeros((6, 6))), J) == 0.0
    rng = np.random.default_rng(3)
    H = to_dense(J.hamiltonian())
    for _ in range(5):
        st_, _ = random_pure_gaussian(6, rng)
        psi = dense_gaussian_state(st_.B)
        assert gaussian_energy(st_, J) == pytest.approx(np.vdot(psi, H @ psi).real, abs=1e-8)


def test_gaussian_below_spectrum():
    r = gaussian_vs_spectrum(10, 50, 0)
    assert abs(r["max_gaussian_energy"]) < r["lambda_max"]


def test_moment_table():
    t = moment_bound_experiment(8, 4, 20, seed=1)
    assert t.max_abs_moment[0] == pytest.approx(1.0)
    J = sample_syk(8, 4, 1)
    rng = np.random.default_rng(2)
    best = max(abs(gaussian_energy(random_pure_gaussian(8, rng)[0], J)) for _ in range(20))
    assert t.max_abs_moment[1] == pytest.approx(best, abs=1e-10)
    assert all(g <= t.lambda_max + 1e-10 for g in t.growth[1:])


def test_rotate_tensor_keeps_spectrum():
    J = sample_syk(8, 4, 4)
    R = np.linalg.qr(np.random.default_rng(0).standard_normal((8, 8)))[0]
    Jr = rotate_tensor(J, R)
    assert Jr.l2_norm == pytest.approx(1.0, abs=1e-10)
    a = np.linalg.eigvalsh(to_dense(J.hamiltonian()))
    b = np.linalg.eigvalsh(to_dense(Jr.hamiltonian()))
    assert np.allclose(a, b, atol=1e-10)


def test_euler_small_graphs():
    g = euler_color(pairing_graph([(0, 4), (1, 5), (2, 6), (3, 7)], 2))
    assert g.is_balanced() and balanced_coloring_exists(g)
    loops = euler_color(pairing_graph([(0, 1), (2, 3)], 1))
    assert sorted(loops.colors) == [0, 1]


def test_euler_random():
    rng = np.random.default_rng(0)
    for _ in range(100):
        g = euler_color(random_pairing_graph(6, rng))
        assert g.is_balanced()


def test_q6_triangle_has_no_balanced_coloring():
    g = q6_triangle()
    assert len(g.edges) == 9 and g.degrees() == [6, 6, 6]
    assert not balanced_coloring_exists(g)
    with pytest.raises(SykError):
        euler_color(g)


def test_lanczos_small():
    tr = excitation_lanczos(5, 3, seed=2)
    assert tr.ritz_max[0] == pytest.approx(tr.start_energy, abs=1e-10)
    assert all(x <= 1e-8 for x in tr.support_leak)
    assert all(a <= b + 1e-12 for a, b in zip(tr.ritz_max, tr.ritz_max[1:]))
    assert tr.ritz_max[-1] <= tr.lambda_max + 1e-10


def test_lanczos_regression_fixture():
    with open(os.path.join(FIXTURES, "syk_lanczos_n13.json")) as fh:
        ref = json.load(fh)
    tr = excitation_lanczos(ref["n_modes"], ref["steps"], ref["seed"])
    assert np.allclose(tr.ratio, ref["ratio"], atol=1e-8)
    assert all(x <= 1e-8 for x in tr.support_leak)
    assert tr.ritz_max[0] == pytest.approx(tr.start_energy, abs=1e-10)
