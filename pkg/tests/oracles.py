"""Independent dense constructions used as test oracles (Kronecker products only)."""

from __future__ import annotations

import functools

import numpy as np

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
LOWER = np.array([[0, 1], [0, 0]], dtype=complex)  # |0><1|, basis bit 1 = occupied


def kron_all(mats) -> np.ndarray:
    return functools.reduce(np.kron, mats, np.array([[1.0 + 0j]]))


def site_op(n: int, j: int, op: np.ndarray) -> np.ndarray:
    mats = [I2] * n
    mats[j] = op
    return kron_all(mats)


def annihilator(n: int, j: int) -> np.ndarray:
    return kron_all([SZ] * j + [LOWER] + [I2] * (n - j - 1))


def majorana_mats(n: int) -> list[np.ndarray]:
    out = []
    for a in range(n):
        c = annihilator(n, a)
        out.append(c + c.conj().T)
        out.append(1j * (c.conj().T - c))
    return out


def pauli_string(n: int, letters: dict) -> np.ndarray:
    table = {"X": SX, "Y": SY, "Z": SZ}
    return kron_all([table[letters[j]] if j in letters else I2 for j in range(n)])


def expm_herm(H: np.ndarray, t: complex) -> np.ndarray:
    w, V = np.linalg.eigh(H)
    return (V * np.exp(t * w)) @ V.conj().T
