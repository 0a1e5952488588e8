from __future__ import annotations

import math

import numpy as np
import pytest

import oracles as O
from qsos.algebra import PAULI, OperatorPolynomial, Z
from qsos.models import tfim_lattice, toy4, two_qubit
from qsos.spectra import (
    SpectraError,
    basis_state,
    expectation,
    extremal_eigs,
    ground_state,
    perturbation_fit,
    to_dense,
    to_linear_operator,
    to_sparse,
)


def test_identity_and_z():
    assert np.allclose(to_dense(OperatorPolynomial.identity(PAULI, 2)), np.eye(4))
    assert np.allclose(to_dense(Z(1, 0)), np.diag([1, -1]))


def test_two_qubit_ground_energy():
    assert extremal_eigs(two_qubit(1.0), "min").emin == pytest.approx(-2 * math.sqrt(1.25), abs=1e-12)


def test_toy4_ground_energy_from_two_level_block():
    eps = 1.5
    oracle = np.linalg.eigvalsh(np.array([[0.0, eps], [eps, 4.0]]))[0]
    assert extremal_eigs(toy4(eps), "min").emin == pytest.approx(oracle, abs=1e-12)
    assert oracle == pytest.approx(-0.5)


def test_zero_polynomial():
    r = extremal_eigs(OperatorPolynomial.zero(PAULI, 2), "both")
    assert r.emin == 0.0 and r.emax == 0.0


def test_expectation():
    assert expectation(Z(3, 0), basis_state(3)) == pytest.approx(1.0)
    assert expectation(OperatorPolynomial.identity(PAULI, 2), basis_state(2, [1])) == pytest.approx(1.0)
    for eps in (0.5, 1.0):
        e, v = ground_state(toy4(eps))
        assert expectation(toy4(eps), v).real == pytest.approx(2 - math.sqrt(4 + eps * eps), abs=1e-10)


def test_basis_state_convention():
    # qubit 0 is the most significant bit
    assert np.argmax(np.abs(basis_state(3, [0]))) == 4


def test_sparse_paths_agree():
    H = tfim_lattice(2, 1.3, dim=3)
    D = to_dense(H)
    assert np.allclose(to_sparse(H).toarray(), D)
    v = np.random.default_rng(0).standard_normal(D.shape[0])
    assert np.allclose(to_linear_operator(H).matvec(v), D @ v)
    dense = extremal_eigs(H, "both")
    lanczos = extremal_eigs(H, "both", dense_dim=16)
    assert lanczos.emin == pytest.approx(dense.emin, abs=1e-9)
    assert lanczos.emax == pytest.approx(dense.emax, abs=1e-9)


def test_pauli_sum_against_kron():
    H = two_qubit(0.7)
    oracle = O.site_op(2, 0, O.SZ) + O.site_op(2, 1, O.SZ) + 0.7 * O.pauli_string(2, {0: "X", 1: "X"})
    assert np.allclose(to_dense(H), oracle)


def test_perturbation_fit():
    grid = np.linspace(-0.4, 0.4, 21)
    fit = perturbation_fit(toy4, grid, 10)
    assert fit.coefficients[0] == pytest.approx(0.0, abs=1e-9)
    assert fit.coefficients[2] == pytest.approx(-0.25, abs=1e-6)
    fit = perturbation_fit(two_qubit, grid, 10)
    assert fit.coefficients[2] == pytest.approx(-0.25, abs=1e-6)
    flat = perturbation_fit(lambda e: Z(1, 0), grid, 3)
    assert np.allclose(flat.coefficients[1:], 0, atol=1e-12)


def test_errors():
    with pytest.raises(SpectraError):
        extremal_eigs(Z(1, 0), "middle")
    with pytest.raises(SpectraError):
        expectation(Z(2, 0), np.ones(3))
    with pytest.raises(SpectraError):
        extremal_eigs(OperatorPolynomial(PAULI, 1, {(1, 0): 1j}))
