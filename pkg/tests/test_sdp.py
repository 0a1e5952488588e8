from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qsos.sdp import OPTIMAL, SdpError, SdpProblem, SdpSolution, check_kkt, solve


def eig_problem(c):
    C = np.diag(c).astype(float)
    return SdpProblem.from_dense([C], [[np.eye(len(c))]], [1.0])


def test_eigenvalue_sdp():
    p = eig_problem([1.0, 2.0])
    s = solve(p)
    assert s.status == OPTIMAL
    assert s.primal_objective == pytest.approx(1.0, abs=1e-8)
    assert np.allclose(s.X[0], np.diag([1.0, 0.0]), atol=1e-6)


def test_lambda_min_dual():
    # max lam s.t. C - lam I >= 0 is the dual of the eigenvalue SDP
    s = solve(eig_problem([-3.0, 5.0]))
    assert s.y[0] == pytest.approx(-3.0, abs=1e-7)
    assert s.dual_objective == pytest.approx(-3.0, abs=1e-7)


def test_maximization_sense():
    p = SdpProblem.from_dense([np.diag([1.0, 2.0])], [[np.eye(2)]], [1.0], sense="max")
    assert solve(p).primal_objective == pytest.approx(2.0, abs=1e-7)


def test_kkt_hand_built():
    p = eig_problem([1.0, 2.0])
    sol = SdpSolution([np.diag([1.0, 0.0])], np.array([1.0]), [np.diag([0.0, 1.0])], 1.0, 1.0, 0.0, 0.0, 0.0, 0, OPTIMAL)
    r = check_kkt(p, sol)
    assert max(r.primal_residual, r.dual_residual, r.gap) <= 1e-12
    X = np.diag([1.0, 0.0])
    X[1, 1] += 1e-3
    sol.X = [X]
    assert check_kkt(p, sol).primal_residual == pytest.approx(1e-3 / 2, rel=1e-9)


def test_malformed():
    with pytest.raises(SdpError):
        SdpProblem([np.array([[1.0, 2.0], [0.0, 1.0]])], [np.zeros((1, 4))], [1.0])
    with pytest.raises(SdpError):
        SdpProblem([np.eye(2)], [np.zeros((1, 3))], [1.0])


def test_infeasible_detected():
    # tr X = 1 and tr X = 2
    p = SdpProblem.from_dense([np.eye(2)], [[np.eye(2)], [np.eye(2)]], [1.0, 2.0])
    assert solve(p).status != OPTIMAL


def test_json_round_trip():
    p = eig_problem([1.0, 3.0])
    q = SdpProblem.from_json(p.to_json())
    assert solve(q).primal_objective == pytest.approx(1.0, abs=1e-8)


def brute_force_tiny(C, A, b):
    """min <C, X> over 2x2 PSD X with <A_i, X> = b_i by a fine grid over the PSD cone."""
    best = np.inf
    # parametrize X = [[x, z], [z, y]], x, y >= 0, z^2 <= x y
    for x, y in itertools.product(np.linspace(0, 3, 121), repeat=2):
        r = np.sqrt(x * y)
        for z in np.linspace(-r, r, 41):
            X = np.array([[x, z], [z, y]])
            if all(abs(np.sum(a * X) - bb) < 3e-2 for a, bb in zip(A, b)):
                best = min(best, float(np.sum(C * X)))
    return best


def random_sym(rng, n):
    M = rng.standard_normal((n, n))
    return 0.5 * (M + M.T)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_random_feasible_sdps_satisfy_kkt(seed):
    rng = np.random.default_rng(seed)
    n, m = 4, 3
    X0 = rng.standard_normal((n, n))
    X0 = X0 @ X0.T + np.eye(n)
    A = [np.eye(n)] + [random_sym(rng, n) for _ in range(m - 1)]
    b = [float(np.sum(a * X0)) for a in A]
    S = rng.standard_normal((n, n))
    C = S @ S.T + random_sym(rng, n) * 0.1 + 0.5 * np.eye(n)
    p = SdpProblem.from_dense([C], [[a] for a in A], b)
    s = solve(p)
    assert s.status == OPTIMAL
    r = check_kkt(p, s)
    assert r.gap <= 1e-7 and r.primal_residual <= 1e-7 and r.dual_residual <= 1e-7
    assert r.min_eig_X >= -1e-8 and r.min_eig_Z >= -1e-8
    # weak duality identity on every iterate
    for h in s.history:
        assert h["xz"] >= 0
        assert h["pobj"] - h["dobj"] == pytest.approx(h["xz"] + h["infeas_term"], abs=1e-7 * (1 + abs(h["pobj"])))


def test_block_diagonal():
    C = [np.diag([2.0, 3.0]), np.array([[1.0]])]
    A = [[np.eye(2), np.zeros((1, 1))], [np.zeros((2, 2)), np.eye(1)]]
    s = solve(SdpProblem.from_dense(C, A, [1.0, 2.0]))
    assert s.primal_objective == pytest.approx(4.0, abs=1e-8)


def test_brute_force_tiny():
    rng = np.random.default_rng(11)
    for _ in range(3):
        C = random_sym(rng, 2)
        A = [np.eye(2), random_sym(rng, 2)]
        X0 = np.array([[1.0, 0.2], [0.2, 0.8]])
        b = [float(np.sum(a * X0)) for a in A]
        s = solve(SdpProblem.from_dense([C], [[a] for a in A], b))
        assert s.primal_objective == pytest.approx(brute_force_tiny(C, A, b), abs=0.15)
