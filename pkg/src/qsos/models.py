"""Hamiltonian builders for the model families used throughout the package."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .algebra import (
    FERMION,
    PAULI,
    AlgebraError,
    bits,
    OperatorPolynomial,
    X,
    Z,
    adjoint,
    fermion_word,
    mask_of,
    number,
    pauli,
)


@dataclass(frozen=True)
class ModelSpec:
    name: str
    params: dict = field(default_factory=dict)


def two_qubit(g: float) -> OperatorPolynomial:
    """Z_0 + Z_1 + g X_0 X_1."""
    return Z(2, 0) + Z(2, 1) + pauli(2, {0: "X", 1: "X"}, g)


def toy4(eps: float) -> OperatorPolynomial:
    """sum_i n_i + eps (cdag_0 cdag_1 cdag_2 cdag_3 + h.c.) on four modes."""
    h = OperatorPolynomial.zero(FERMION, 4)
    for i in range(4):
        h = h + number(4, i)
    pair = fermion_word(4, [(0, True), (1, True), (2, True), (3, True)])
    return h + eps * (pair + adjoint(pair))


def tfim_meanfield(n: int, h: float) -> OperatorPolynomial:
    """-(1/2n) sum_{i,j} Z_i Z_j - h sum_i X_i, the i=j terms included."""
    if n < 1:
        raise AlgebraError("n must be positive")
    H = OperatorPolynomial.identity(PAULI, n, -0.5)
    for i, j in itertools.combinations(range(n), 2):
        H = H + pauli(n, {i: "Z", j: "Z"}, -1.0 / n)
    for i in range(n):
        H = H - h * X(n, i)
    return H


def lattice_sites(L: int, dim: int) -> list[tuple[int, ...]]:
    return list(itertools.product(range(L), repeat=dim))


def tfim_lattice(L: int, h: float, dim: int = 3) -> OperatorPolynomial:
    """-(1/2) sum over ordered nearest-neighbour pairs Z_j Z_k - h sum_j X_j, periodic.

    Each bond appears once per lattice direction, so at L=2 the two
    neighbours in a direction coincide and the bond is counted twice, in
    line with the dispersion a(p)^2 = c - sum_mu cos p_mu.
    """
    if L < 2 or dim < 1:
        raise AlgebraError("lattice needs L >= 2 and dim >= 1")
    sites = lattice_sites(L, dim)
    index = {s: i for i, s in enumerate(sites)}
    n = len(sites)
    H = OperatorPolynomial.zero(PAULI, n)
    terms: dict = {}
    for s in sites:
        for mu in range(dim):
            t = list(s)
            t[mu] = (t[mu] + 1) % L
            a, b = index[s], index[tuple(t)]
            key = (0, (1 << a) | (1 << b))
            terms[key] = terms.get(key, 0.0) - 1.0
    H = OperatorPolynomial(PAULI, n, terms)
    for i in range(n):
        H = H - h * X(n, i)
    return H


def tfim3d(L: int, h: float) -> OperatorPolynomial:
    return tfim_lattice(L, h, dim=3)


def syk(n: int, q: int = 4, seed: int = 0) -> OperatorPolynomial:
    """SYK Hamiltonian on n Majoranas (n/2 modes) with unit-norm coupling tensor."""
    from .syk import sample_syk

    return sample_syk(n, q, seed).hamiltonian()


def quartic_fermion(E: Sequence[float], V: OperatorPolynomial, eps: float) -> OperatorPolynomial:
    """H_0 + eps V with H_0 = sum_j E_j n_j; V must be Hermitian."""
    n = len(E)
    if V.kind != FERMION or V.n != n:
        raise AlgebraError("V must be a fermion polynomial on len(E) modes")
    if any(e <= 0 for e in E):
        raise AlgebraError("unperturbed energies must be positive")
    H0 = OperatorPolynomial.zero(FERMION, n)
    for j, e in enumerate(E):
        H0 = H0 + e * number(n, j)
    return H0 + eps * V


def random_quartic_instance(n: int, seed: int, e_range: tuple[float, float] = (1.0, 2.0)):
    """Random (E, V) with V a Hermitian sum over all normal-ordered quartic monomials."""
    rng = np.random.default_rng(seed)
    E = rng.uniform(*e_range, size=n)
    W: dict = {}
    for p in range(5):
        for cre in itertools.combinations(range(n), p):
            for ann in itertools.combinations(range(n), 4 - p):
                W[(mask_of(cre), mask_of(ann))] = complex(rng.standard_normal(), rng.standard_normal())
    Wp = OperatorPolynomial(FERMION, n, W)
    V = Wp + adjoint(Wp)
    V = V / V.norm1() * n
    return E, V


def shift_modes(p: OperatorPolynomial, step: int = 1) -> OperatorPolynomial:
    """Relabel fermion modes a -> a + step (mod n), re-normal-ordering each word."""
    if p.kind != FERMION:
        raise AlgebraError("shift_modes expects a fermion polynomial")
    n = p.n
    out = OperatorPolynomial(FERMION, n, {})
    for (u, v), coeff in p.terms.items():
        word = [((a + step) % n, True) for a in bits(u)] + [((a + step) % n, False) for a in bits(v)]
        out = out + fermion_word(n, word, coeff)
    return out


def symmetric_quartic_instance(n: int, seed: int):
    """Translation-invariant quartic V conserving charge mod 4, with E_j = 1.

    Only monomials with 0, 2 or 4 creators appear, so V commutes with the
    phase rotation c -> i c; the translation average makes it cyclic in the
    modes. Small random instances (n <= 6) are solved exactly at degree 4, so
    these symmetries are what make n = 7 affordable.
    """
    rng = np.random.default_rng(seed)
    W: dict = {}
    for p in (0, 2, 4):
        for cre in itertools.combinations(range(n), p):
            for ann in itertools.combinations(range(n), 4 - p):
                W[(mask_of(cre), mask_of(ann))] = complex(rng.standard_normal(), rng.standard_normal())
    Wp = OperatorPolynomial(FERMION, n, W)
    V = Wp + adjoint(Wp)
    acc, cur = V, V
    for _ in range(n - 1):
        cur = shift_modes(cur)
        acc = acc + cur
    acc = acc / acc.norm1() * n
    return [1.0] * n, acc


def build_hamiltonian(spec: ModelSpec) -> OperatorPolynomial:
    p = dict(spec.params)
    name = spec.name.replace("-", "_")
    if name == "two_qubit":
        return two_qubit(float(p.get("g", 1.0)))
    if name == "toy4":
        return toy4(float(p.get("eps", 1.0)))
    if name == "tfim_meanfield":
        return tfim_meanfield(int(p["n"]), float(p["h"]))
    if name == "tfim3d":
        return tfim3d(int(p["L"]), float(p["h"]))
    if name == "tfim_lattice":
        return tfim_lattice(int(p["L"]), float(p["h"]), int(p.get("dim", 3)))
    if name == "syk":
        return syk(int(p["n"]), int(p.get("q", 4)), int(p.get("seed", 0)))
    if name == "quartic_fermion":
        if "V" in p:
            return quartic_fermion(p["E"], p["V"], float(p.get("eps", 1.0)))
        gen = symmetric_quartic_instance if p.get("symmetric") else random_quartic_instance
        E, V = gen(int(p["n"]), int(p.get("seed", 0)))
        return quartic_fermion(E, V, float(p.get("eps", 1.0)))
    raise AlgebraError(f"unknown model {spec.name!r}")
