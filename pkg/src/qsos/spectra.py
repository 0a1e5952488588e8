"""Exact-diagonalization oracle for operator polynomials.

Qubit ``j`` of an n-qubit system is the most significant bit of the basis
index, so that ``to_dense`` agrees with ``kron(P_0, P_1, ..., P_{n-1})``.
Fermionic polynomials are encoded by Jordan-Wigner with mode ``j`` on qubit
``j``; basis bit value 1 means the mode is occupied.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .algebra import OperatorPolynomial, PAULI, to_pauli

MAX_QUBITS = 14
DENSE_DIM = 4096


class SpectraError(ValueError):
    pass


@dataclass
class SpectralResult:
    emin: float | None
    emax: float | None
    vmin: np.ndarray | None
    vmax: np.ndarray | None
    residuals: dict


@dataclass
class PerturbationFit:
    coefficients: np.ndarray
    residual: float
    energies: np.ndarray


def _reverse_bits(x: int, n: int) -> int:
    return int(format(x, f"0{n}b")[::-1], 2) if n else 0


def _grouped_terms(p: OperatorPolynomial) -> tuple[int, dict]:
    """Pauli form grouped by X mask in basis-bit order: {xmask: [(zmask, coeff)]}."""
    q = to_pauli(p)
    n = q.n
    groups: dict[int, list] = {}
    for (x, z), cf in q.terms.items():
        # letter string = i^{|x&z|} X^x Z^z
        phase = (1, 1j, -1, -1j)[bin(x & z).count("1") % 4]
        xb, zb = _reverse_bits(x, n), _reverse_bits(z, n)
        groups.setdefault(xb, []).append((zb, cf * phase))
    return n, groups


def _diagonals(n: int, groups: dict) -> list[tuple[int, np.ndarray]]:
    s = np.arange(2**n, dtype=np.int64)
    out = []
    for xb, items in groups.items():
        d = np.zeros(2**n, dtype=complex)
        for zb, cf in items:
            sign = 1 - 2 * (np.bitwise_count(s & zb) & 1).astype(np.int8)
            d += cf * sign
        out.append((xb, d))
    return out


def _check_size(n: int, cap: int = MAX_QUBITS) -> None:
    if n > cap:
        raise SpectraError(f"system of {n} qubits/modes exceeds the cap of {cap}")


def to_dense(p: OperatorPolynomial, max_qubits: int = MAX_QUBITS) -> np.ndarray:
    """Dense 2^n x 2^n complex matrix of p."""
    _check_size(p.n, max_qubits)
    n, groups = _grouped_terms(p)
    dim = 2**n
    mat = np.zeros((dim, dim), dtype=complex)
    s = np.arange(dim)
    for xb, d in _diagonals(n, groups):
        mat[s ^ xb, s] += d
    return mat


def to_sparse(p: OperatorPolynomial, max_qubits: int = MAX_QUBITS) -> sp.csr_matrix:
    _check_size(p.n, max_qubits)
    n, groups = _grouped_terms(p)
    dim = 2**n
    s = np.arange(dim)
    rows, cols, vals = [], [], []
    for xb, d in _diagonals(n, groups):
        nz = d != 0
        rows.append((s ^ xb)[nz])
        cols.append(s[nz])
        vals.append(d[nz])
    if not rows:
        return sp.csr_matrix((dim, dim), dtype=complex)
    return sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(dim, dim)
    )


def to_linear_operator(p: OperatorPolynomial, max_qubits: int = MAX_QUBITS) -> spla.LinearOperator:
    """Matrix-free action v -> p v, one permuted diagonal per X mask."""
    _check_size(p.n, max_qubits)
    n, groups = _grouped_terms(p)
    dim = 2**n
    diags = _diagonals(n, groups)
    s = np.arange(dim)
    perms = [(s ^ xb, d) for xb, d in diags]

    def matvec(v):
        v = np.asarray(v).reshape(dim, -1)
        y = np.zeros(v.shape, dtype=complex)
        for perm, d in perms:
            y[perm] += d[:, None] * v
        return y if y.shape[1] > 1 else y[:, 0]

    return spla.LinearOperator((dim, dim), matvec=matvec, matmat=matvec, dtype=complex)


def _hermitian_check(p: OperatorPolynomial) -> None:
    if not p.is_hermitian(1e-10):
        raise SpectraError("operator is not Hermitian")


def extremal_eigs(
    p: OperatorPolynomial,
    which: str = "both",
    seed: int = 0,
    tol: float = 1e-10,
    dense_dim: int = DENSE_DIM,
) -> SpectralResult:
    """Lowest and/or highest eigenpair of a Hermitian polynomial."""
    if which not in ("min", "max", "both"):
        raise SpectraError(f"which must be min, max or both, got {which!r}")
    _hermitian_check(p)
    _check_size(p.n)
    dim = 2**p.n
    if dim <= dense_dim:
        mat = to_dense(p)
        w, v = np.linalg.eigh(mat)
        lo, hi = (w[0], v[:, 0]), (w[-1], v[:, -1])
        op = mat
        apply = lambda x: mat @ x
    else:
        op = to_linear_operator(p)
        apply = op.matvec
        rng = np.random.default_rng(seed)
        v0 = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        lo = hi = None
        if which in ("min", "both"):
            w, v = spla.eigsh(op, k=1, which="SA", v0=v0, tol=tol)
            lo = (w[0], v[:, 0])
        if which in ("max", "both"):
            w, v = spla.eigsh(op, k=1, which="LA", v0=v0, tol=tol)
            hi = (w[0], v[:, 0])
    res = {}
    out = SpectralResult(None, None, None, None, res)
    if which in ("min", "both"):
        out.emin, out.vmin = float(np.real(lo[0])), lo[1]
        res["min"] = float(np.linalg.norm(apply(lo[1]) - lo[0] * lo[1]))
    if which in ("max", "both"):
        out.emax, out.vmax = float(np.real(hi[0])), hi[1]
        res["max"] = float(np.linalg.norm(apply(hi[1]) - hi[0] * hi[1]))
    return out


def spectrum(p: OperatorPolynomial) -> np.ndarray:
    _hermitian_check(p)
    return np.linalg.eigvalsh(to_dense(p))


def ground_state(p: OperatorPolynomial, seed: int = 0) -> tuple[float, np.ndarray]:
    r = extremal_eigs(p, "min", seed=seed)
    return r.emin, r.vmin


def ground_gap(p: OperatorPolynomial) -> float:
    w = spectrum(p)
    return float(w[1] - w[0]) if len(w) > 1 else np.inf


def expectation(p: OperatorPolynomial, state: np.ndarray) -> complex:
    state = np.asarray(state)
    if state.shape[0] != 2**p.n:
        raise SpectraError(f"state of length {state.shape[0]} does not match 2^{p.n}")
    if 2**p.n <= DENSE_DIM:
        hv = to_dense(p) @ state
    else:
        hv = to_linear_operator(p).matvec(state)
    return complex(np.vdot(state, hv))


def basis_state(n: int, occupied: Sequence[int] = ()) -> np.ndarray:
    """Computational basis vector with the listed qubits in state 1."""
    idx = 0
    for j in occupied:
        idx |= 1 << (n - 1 - j)
    v = np.zeros(2**n, dtype=complex)
    v[idx] = 1.0
    return v


def perturbation_fit(
    family: Callable[[float], OperatorPolynomial],
    eps_grid: Sequence[float],
    order: int,
    gap_tol: float = 1e-8,
) -> PerturbationFit:
    """Least-squares polynomial fit of the ground energy E_0(eps) on a grid."""
    if ground_gap(family(0.0)) <= gap_tol:
        raise SpectraError("unperturbed ground state is degenerate")
    eps = np.asarray(eps_grid, dtype=float)
    e = np.array([extremal_eigs(family(x), "min").emin for x in eps])
    V = np.vander(eps, order + 1, increasing=True)
    coef, *_ = np.linalg.lstsq(V, e, rcond=None)
    resid = float(np.sqrt(np.mean((V @ coef - e) ** 2)))
    return PerturbationFit(coef, resid, e)
