"""Degree-2r moment-matrix relaxations and their sum-of-squares certificates.

Pseudo-expectations are real variables attached to Hermitian-normalized
monomials: Pauli strings as they are, Majorana monomials as
``h_S = i^{floor(d/2)} gamma_S``.  Fermion Hamiltonians are rewritten in
Majorana form before building.  For every pair of basis elements the product
``h_a h_b`` is a single phase times a monomial, so the moment matrix
``M_ab = E[h_a h_b]`` is an affine function of the variables.

The SDP handed to :mod:`qsos.sdp` puts the moment matrix in the dual slack,
``Z = M(y)``, so its primal ``X`` is the Gram matrix of the certificate
``H - lam = sum_alpha w_alpha O_alpha^dag O_alpha``.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from . import sdp as sdpmod
from .algebra import (
    FERMION,
    MAJORANA,
    PAULI,
    AlgebraError,
    OperatorPolynomial,
    bits,
    format_key,
    identity_key,
    key_degree,
    majorana_key_mul,
    mask_of,
    pauli_key_mul,
    popcount,
    to_majorana,
)

GENERAL = "general"
RESTRICTED = "hermitian_restricted"
MAX_BASIS = 5000


class SosError(ValueError):
    pass


# ---------------------------------------------------------------------------
# bases


@dataclass
class MomentBasis:
    kind: str
    n: int
    r: int
    keys: list

    def __len__(self) -> int:
        return len(self.keys)

    def operator(self, i: int) -> OperatorPolynomial:
        """Basis element i; Majorana elements carry the Hermitian phase."""
        k = self.keys[i]
        return OperatorPolynomial(self.kind, self.n, {k: _herm_phase(self.kind, k)})


def _herm_phase(kind: str, key) -> complex:
    if kind == MAJORANA:
        return (1, 1j, -1, -1j)[(popcount(key) // 2) % 4]
    return 1.0


def enumerate_basis(kind: str, n: int, r: int, max_size: int = MAX_BASIS) -> MomentBasis:
    """All monomials of degree <= r, ordered by degree.

    ``n`` counts qubits (pauli) or fermion modes (majorana, fermion).
    """
    if r < 1:
        raise SosError("degree r must be at least 1")
    if kind == PAULI:
        size = sum(math.comb(n, d) * 3**d for d in range(r + 1))
    elif kind == MAJORANA:
        size = sum(math.comb(2 * n, d) for d in range(r + 1))
    elif kind == FERMION:
        size = sum(math.comb(n, s) * math.comb(n, t) for s in range(r + 1) for t in range(r + 1 - s))
    else:
        raise SosError(f"unknown algebra {kind!r}")
    if size > max_size:
        raise SosError(f"basis of size {size} exceeds the guard {max_size}")
    keys: list = []
    if kind == PAULI:
        for d in range(r + 1):
            for sites in itertools.combinations(range(n), d):
                for letters in itertools.product("XYZ", repeat=d):
                    x = z = 0
                    for s, l in zip(sites, letters):
                        if l in "XY":
                            x |= 1 << s
                        if l in "YZ":
                            z |= 1 << s
                    keys.append((x, z))
    elif kind == MAJORANA:
        for d in range(r + 1):
            for idx in itertools.combinations(range(2 * n), d):
                keys.append(mask_of(idx))
    else:
        for d in range(r + 1):
            for s in range(d + 1):
                for cre in itertools.combinations(range(n), s):
                    for ann in itertools.combinations(range(n), d - s):
                        keys.append((mask_of(cre), mask_of(ann)))
    return MomentBasis(kind, n, r, keys)


def _herm_product(kind: str, ka, kb) -> tuple[complex, object]:
    """h_a h_b = phase * h_K for Hermitian-normalized monomials."""
    if kind == PAULI:
        return pauli_key_mul(ka, kb)
    s, k = majorana_key_mul(ka, kb)
    ph = _herm_phase(kind, ka) * _herm_phase(kind, kb) * s / _herm_phase(kind, k)
    return ph, k


def hermitian_coefficients(H: OperatorPolynomial) -> dict:
    """Coefficients of H in the Hermitian-normalized monomials (real for Hermitian H)."""
    out = {}
    for k, c in H.terms.items():
        out[k] = c / _herm_phase(H.kind, k)
    return out


# ---------------------------------------------------------------------------
# symmetries: maps key -> (sign, key) on Hermitian-normalized monomials


@dataclass
class Symmetry:
    name: str
    action: Callable


def translation(perm: Sequence[int], name: str = "translation") -> Symmetry:
    """Site permutation i -> perm[i] on Pauli keys."""
    perm = list(perm)

    def act(key):
        x, z = key
        xn = zn = 0
        for i in bits(x):
            xn |= 1 << perm[i]
        for i in bits(z):
            zn |= 1 << perm[i]
        return 1, (xn, zn)

    return Symmetry(name, act)


def spin_flip() -> Symmetry:
    """Conjugation by prod_i X_i: Y and Z change sign."""
    return Symmetry("spin_flip", lambda key: ((-1) ** popcount(key[1]), key))


def fermion_parity() -> Symmetry:
    """gamma_a -> -gamma_a for all a."""
    return Symmetry("parity", lambda key: ((-1) ** popcount(key), key))


def majorana_signed_permutation(images: Sequence[tuple[int, int]], name: str = "majorana_map") -> Symmetry:
    """gamma_i -> s_i gamma_{pi(i)} with images[i] = (s_i, pi(i))."""
    images = list(images)

    def act(key):
        sign = 1
        seq = []
        for i in bits(key):
            s, j = images[i]
            sign *= s
            seq.append(j)
        inv = sum(1 for x in range(len(seq)) for y in range(x + 1, len(seq)) if seq[x] > seq[y])
        return (-sign if inv & 1 else sign), mask_of(seq)

    return Symmetry(name, act)


def mode_translation(n_modes: int) -> Symmetry:
    """Cyclic relabeling of fermion modes a -> a+1 (mod n)."""
    imgs = []
    for i in range(2 * n_modes):
        a, t = divmod(i, 2)
        imgs.append((1, 2 * ((a + 1) % n_modes) + t))
    return majorana_signed_permutation(imgs, "mode_translation")


def charge_rotation(n_modes: int) -> Symmetry:
    """c_a -> i c_a for every mode (number conservation mod 4)."""
    imgs = []
    for a in range(n_modes):
        imgs.append((-1, 2 * a + 1))  # gamma_{2a} -> -gamma_{2a+1}
        imgs.append((1, 2 * a))  # gamma_{2a+1} -> gamma_{2a}
    return majorana_signed_permutation(imgs, "charge_rotation")


def lattice_translations(L: int, dim: int) -> list[Symmetry]:
    sites = list(itertools.product(range(L), repeat=dim))
    index = {s: i for i, s in enumerate(sites)}
    out = []
    for mu in range(dim):
        perm = []
        for s in sites:
            t = list(s)
            t[mu] = (t[mu] + 1) % L
            perm.append(index[tuple(t)])
        out.append(translation(perm, f"translation_{mu}"))
    return out


def _apply(sym: Symmetry, kind: str, key):
    return sym.action(key)


# ---------------------------------------------------------------------------
# moment problem


@dataclass
class Block:
    U: np.ndarray  # N x d, orthonormal columns (complex)
    complex_: bool


@dataclass
class MomentProblem:
    H: OperatorPolynomial  # in the algebra used for the basis (pauli or majorana)
    basis: MomentBasis
    mode: str
    variables: list  # representative keys, identity first
    var_index: dict  # key -> (reduced var index or -1 for forced zero, sign)
    entries_var: np.ndarray  # N x N reduced variable index (-1 = zero)
    entries_val: np.ndarray  # N x N complex phase (times orbit sign)
    h: np.ndarray  # objective coefficient per reduced variable
    blocks: list[Block]
    sdp: sdpmod.SdpProblem
    symmetry: list = field(default_factory=list)

    @property
    def constant(self) -> float:
        return float(self.h[0])

    def moment_matrix(self, y_reduced: np.ndarray) -> np.ndarray:
        """Complex moment matrix in the original basis from reduced variables (y_0 = 1)."""
        v = np.where(self.entries_var >= 0, y_reduced[np.maximum(self.entries_var, 0)], 0.0)
        return self.entries_val * v

    def variables_from_solution(self, sol: sdpmod.SdpSolution) -> np.ndarray:
        return np.concatenate([[1.0], sol.y])

    def to_json(self) -> str:
        return self.sdp.to_json()


def _orbits(keys: list, syms: list[Symmetry], kind: str):
    """Map every key to (representative, sign, forced_zero) under the generated group."""
    info: dict = {}
    for k in keys:
        if k in info:
            continue
        orbit = {k: 1}
        stack = [k]
        zero = False
        while stack:
            cur = stack.pop()
            for g in syms:
                s, nk = _apply(g, kind, cur)
                s *= orbit[cur]
                if nk in orbit:
                    if orbit[nk] != s:
                        zero = True
                else:
                    orbit[nk] = s
                    stack.append(nk)
        rep = k
        for ok, s in orbit.items():
            info[ok] = (rep, s, zero)
    return info


def _signed_perm(basis: MomentBasis, sym: Symmetry) -> sp.csr_matrix:
    pos = {k: i for i, k in enumerate(basis.keys)}
    N = len(basis)
    rows, vals = np.empty(N, dtype=int), np.empty(N)
    for a, k in enumerate(basis.keys):
        s, nk = _apply(sym, basis.kind, k)
        if nk not in pos:
            raise SosError(f"symmetry {sym.name} does not preserve the basis")
        rows[a] = pos[nk]
        vals[a] = s
    return sp.csr_matrix((vals, (rows, np.arange(N))), shape=(N, N))


def isotypic_blocks(basis: MomentBasis, syms: list[Symmetry]) -> list[np.ndarray]:
    """Joint eigenspaces of commuting signed-permutation representations."""
    N = len(basis)
    spaces = [np.eye(N, dtype=complex)]
    for g in syms:
        R = _signed_perm(basis, g)
        order = 1
        P = R.copy()
        while (P - sp.identity(N)).count_nonzero() and order < 4 * N + 8:
            P = P @ R
            order += 1
        new = []
        for U in spaces:
            RU = U.copy()
            pows = [U]
            for _ in range(order - 1):
                RU = R @ RU
                pows.append(RU)
            for j in range(order):
                w = np.exp(-2j * np.pi * j * np.arange(order) / order)
                PU = sum(wt * pw for wt, pw in zip(w, pows)) / order  # N x d, = P_j U
                # orthonormal basis of range(P_j U)
                if np.linalg.norm(PU) < 1e-10:
                    continue
                Q, s, _ = np.linalg.svd(PU, full_matrices=False)
                rank = int(np.sum(s > 1e-8))
                if rank:
                    new.append(Q[:, :rank])
        spaces = new
    return spaces


def _clean_phase(U: np.ndarray) -> np.ndarray:
    """Rotate columns so blocks are real whenever possible."""
    out = U.copy()
    for j in range(U.shape[1]):
        col = U[:, j]
        i = np.argmax(np.abs(col))
        out[:, j] = col * np.exp(-1j * np.angle(col[i]))
    return out


def _embed(K: np.ndarray, complex_: bool) -> np.ndarray:
    if not complex_:
        return K.real
    return np.block([[K.real, -K.imag], [K.imag, K.real]])


def _assemble(p, q, k, v, d: int, K: int):
    """SDP block data from moment-matrix triplets M_k[p, q] += v."""
    keep = np.abs(v) > 1e-14
    p, q, k, v = p[keep], q[keep], k[keep], v[keep]
    cplx = bool(np.max(np.abs(v.imag), initial=0.0) > 1e-12)
    if cplx:
        D = 2 * d
        rows = np.concatenate([k, k, k, k])
        cols = np.concatenate([p * D + q, p * D + d + q, (d + p) * D + q, (d + p) * D + d + q])
        data = np.concatenate([v.real, -v.imag, v.imag, v.real])
    else:
        D = d
        rows, cols, data = k, p * D + q, v.real
    E = sp.csr_matrix((data, (rows, cols)), shape=(K, D * D))
    E.eliminate_zeros()
    C = E[0].toarray().reshape(D, D)
    return 0.5 * (C + C.T), (-E[1:]).tocsr(), cplx


def _block_triplets(ev: np.ndarray, vals: np.ndarray, U: np.ndarray, K: int):
    """Triplets of U^dag F_k U for all k using sparse products."""
    N, d = U.shape
    Us = sp.csr_matrix(np.where(np.abs(U) > 1e-13, U, 0))
    live = ev >= 0
    a, b = np.nonzero(live)
    F1 = sp.csr_matrix((vals[a, b], (a * K + ev[a, b], b)), shape=(N * K, N))
    P = (F1 @ Us).tocoo()
    ai, ki = np.divmod(P.row, K)
    P2 = sp.csr_matrix((P.data, (ai, ki * d + P.col)), shape=(N, K * d))
    B = (Us.conj().T @ P2).tocoo()
    k, q = np.divmod(B.col, d)
    return B.row, q, k, B.data


def build(
    H: OperatorPolynomial,
    r: int,
    mode: str = GENERAL,
    symmetry: Sequence[Symmetry] | None = None,
    max_basis: int = MAX_BASIS,
) -> MomentProblem:
    """Moment-matrix SDP of degree 2r for a Hermitian H."""
    if mode not in (GENERAL, RESTRICTED):
        raise SosError(f"unknown mode {mode!r}")
    if not H.is_hermitian(1e-10):
        raise SosError("Hamiltonian is not Hermitian")
    Hb = to_majorana(H) if H.kind == FERMION else H
    kind, n = Hb.kind, Hb.n
    if Hb.degree() > 2 * r:
        raise SosError(f"degree {Hb.degree()} of H exceeds 2r = {2 * r}")
    basis = enumerate_basis(kind, n, r, max_basis)
    N = len(basis)
    syms = list(symmetry or [])
    hcoef = hermitian_coefficients(Hb)
    for g in syms:
        for k, c in hcoef.items():
            s, nk = _apply(g, kind, k)
            if abs(hcoef.get(nk, 0.0) - s * c) > 1e-9 * max(1.0, Hb.norm1()):
                raise SosError(f"H is not invariant under {g.name}")

    # products
    var_keys: dict = {identity_key(kind): 0}
    ent_key = np.empty((N, N), dtype=np.int64)
    ent_ph = np.empty((N, N), dtype=complex)
    for a, ka in enumerate(basis.keys):
        for b, kb in enumerate(basis.keys):
            ph, k = _herm_product(kind, ka, kb)
            idx = var_keys.setdefault(k, len(var_keys))
            ent_key[a, b] = idx
            ent_ph[a, b] = ph
    all_keys = list(var_keys)
    for k in hcoef:
        if k not in var_keys:
            raise SosError(f"term {format_key(kind, k)} is not reachable at degree {2 * r}")

    # orbit reduction
    orb = _orbits(all_keys, syms, kind) if syms else {k: (k, 1, False) for k in all_keys}
    reps: dict = {identity_key(kind): 0}
    red_idx = np.empty(len(all_keys), dtype=np.int64)
    red_sign = np.empty(len(all_keys))
    for i, k in enumerate(all_keys):
        rep, s, zero = orb[k]
        if zero:
            red_idx[i], red_sign[i] = -1, 0.0
            continue
        red_idx[i] = reps.setdefault(rep, len(reps))
        red_sign[i] = s
    K = len(reps)
    # objective: E[H] = sum_K c_K y_K = sum_K c_K s_K y_rep(K)
    h = np.zeros(K)
    for k, c in hcoef.items():
        i = var_keys[k]
        if red_idx[i] >= 0:
            h[red_idx[i]] += float(np.real(c * red_sign[i]))
    entries_var = red_idx[ent_key]
    entries_val = ent_ph * red_sign[ent_key]
    if mode == RESTRICTED:
        # variables are real, so Re(M) just keeps the real part of each phase
        entries_val_sdp = entries_val.real.astype(complex)
    else:
        entries_val_sdp = entries_val

    spaces = [_clean_phase(U) for U in isotypic_blocks(basis, syms)] if syms else [np.eye(N, dtype=complex)]
    C_blocks, A_blocks, blocks = [], [], []
    for U in spaces:
        p, q, k, v = _block_triplets(entries_var, entries_val_sdp, U, K)
        C_b, A_b, cplx = _assemble(p, q, k, v, U.shape[1], K)
        C_blocks.append(C_b)
        A_blocks.append(A_b)
        blocks.append(Block(U, cplx))
    if K == 1:
        raise SosError("no free moment variables; H is a constant")
    prob = sdpmod.SdpProblem(C_blocks, A_blocks, -h[1:], "min")
    return MomentProblem(
        Hb, basis, mode, list(reps), {k: (int(red_idx[var_keys[k]]), red_sign[var_keys[k]]) for k in all_keys},
        entries_var, entries_val, h, blocks, prob, syms,
    )


def lower_bound(
    H: OperatorPolynomial,
    r: int,
    mode: str = GENERAL,
    symmetry: Sequence[Symmetry] | None = None,
    gap_tol: float = 1e-8,
    feas_tol: float = 1e-8,
    max_iter: int = 200,
):
    """Return (lam, solution, moment_problem) with lam = h_0 - <C, X>."""
    if all(key_degree(H.kind, k) == 0 for k in H.terms):
        c = float(np.real(H.constant()))
        return c, None, None
    mp = build(H, r, mode, symmetry)
    sol = sdpmod.solve(mp.sdp, gap_tol=gap_tol, feas_tol=feas_tol, max_iter=max_iter)
    lam = mp.constant - sol.primal_objective
    return float(lam), sol, mp


# ---------------------------------------------------------------------------
# certificates


@dataclass
class SosCertificate:
    bound: float
    squares: list  # (weight, OperatorPolynomial)
    residual: float
    residual_poly: OperatorPolynomial | None = None

    def to_json(self) -> str:
        sq = []
        for w, O in self.squares:
            sq.append(
                {
                    "weight": float(w),
                    "terms": [[format_key(O.kind, k), c.real, c.imag] for k, c in O.terms.items()],
                }
            )
        return json.dumps({"bound": self.bound, "residual": self.residual, "squares": sq})


class CertificateError(RuntimeError):
    def __init__(self, msg: str, residual_poly: OperatorPolynomial):
        super().__init__(msg)
        self.residual_poly = residual_poly


def gram_matrix(mp: MomentProblem, sol: sdpmod.SdpSolution) -> np.ndarray:
    """Hermitian Gram matrix G in the original basis with <C,X> = Re tr(G M_0)."""
    N = len(mp.basis)
    G = np.zeros((N, N), dtype=complex)
    for blk, X in zip(mp.blocks, sol.X):
        d = blk.U.shape[1]
        if blk.complex_:
            Y = X[:d, :d] + X[d:, d:] + 1j * (X[d:, :d] - X[:d, d:])
        else:
            Y = X.astype(complex)
        G += blk.U @ Y @ blk.U.conj().T
    if mp.mode == RESTRICTED:
        G = G.real.astype(complex)
    return 0.5 * (G + G.conj().T)


def extract_certificate(
    mp: MomentProblem,
    sol: sdpmod.SdpSolution,
    eig_cut: float = 1e-9,
    cert_tol: float = 1e-5,
    raise_on_failure: bool = True,
) -> SosCertificate:
    """Factor the Gram matrix and re-expand sum_alpha w O^dag O symbolically."""
    if sol.status != sdpmod.OPTIMAL:
        raise SosError(f"solver status is {sol.status}, not optimal")
    G = gram_matrix(mp, sol)
    if mp.mode == RESTRICTED:
        w, V = np.linalg.eigh(G.real)
    else:
        w, V = np.linalg.eigh(G)
    lam = mp.constant - float(np.real(np.sum(G.T * mp.moment_matrix(_unit_identity(mp)))))
    squares = []
    ops = [mp.basis.operator(i) for i in range(len(mp.basis))]
    kind, n = mp.H.kind, mp.H.n
    total = OperatorPolynomial.identity(kind, n, lam)
    for wi, v in zip(w, V.T):
        if wi < eig_cut:
            continue
        terms: dict = {}
        for vb, O in zip(v, ops):
            if abs(vb) < 1e-15:
                continue
            for k, c in O.terms.items():
                terms[k] = terms.get(k, 0.0) + vb * c
        Oa = OperatorPolynomial(kind, n, terms)
        squares.append((float(wi), Oa))
        total = total + wi * (Oa.adjoint() * Oa)
    resid_poly = mp.H - total
    resid = resid_poly.norm1()
    cert = SosCertificate(float(lam), squares, float(resid), resid_poly)
    if raise_on_failure and resid > cert_tol * max(1.0, mp.H.norm1()):
        raise CertificateError(f"certificate residual {resid:.3e} exceeds tolerance", resid_poly)
    return cert


def _unit_identity(mp: MomentProblem) -> np.ndarray:
    y = np.zeros(len(mp.variables))
    y[0] = 1.0
    return y


def certificate_for_constant(H: OperatorPolynomial) -> SosCertificate:
    return SosCertificate(float(np.real(H.constant())), [], 0.0, OperatorPolynomial.zero(H.kind, H.n))


# ---------------------------------------------------------------------------
# rank diagnostics


def zero_count_formula(n: int, r: int) -> int:
    if r < 1:
        raise SosError("r must be at least 1")
    return sum(math.comb(n, s) * math.comb(n, t) for s in range(1, r + 1) for t in range(0, r - s + 1))


@dataclass
class RankReport:
    eigenvalues: np.ndarray
    zero_count: int
    sector_zero_counts: dict
    sector_sizes: dict


def fermion_moment_matrix(H: OperatorPolynomial, r: int, state: np.ndarray) -> tuple[np.ndarray, MomentBasis]:
    from .spectra import to_dense

    basis = enumerate_basis(FERMION, H.n, r)
    W = np.empty((state.size, len(basis)), dtype=complex)
    for i, k in enumerate(basis.keys):
        W[:, i] = to_dense(OperatorPolynomial(FERMION, H.n, {k: 1.0})) @ state
    return W.conj().T @ W, basis


def moment_rank_report(
    H: OperatorPolynomial,
    r: int,
    state_source: str = "exact_ground_state",
    zero_tol: float = 1e-7,
    degeneracy_tol: float = 1e-8,
) -> RankReport:
    """Zero eigenvalues of the degree-r fermion-monomial moment matrix."""
    from .spectra import spectrum, to_dense

    if H.kind != FERMION:
        raise SosError("rank report needs a fermion Hamiltonian")
    if state_source == "exact_ground_state":
        w, V = np.linalg.eigh(to_dense(H))
        if len(w) > 1 and w[1] - w[0] < degeneracy_tol:
            raise SosError("ground state is degenerate")
        M, basis = fermion_moment_matrix(H, r, V[:, 0])
    elif state_source == "sdp":
        lam, sol, mp = lower_bound(H, r)
        Mm = mp.moment_matrix(mp.variables_from_solution(sol))
        basis = enumerate_basis(FERMION, H.n, r)
        # express fermion monomials in the Hermitian Majorana basis
        pos = {k: i for i, k in enumerate(mp.basis.keys)}
        T = np.zeros((len(basis), len(mp.basis)), dtype=complex)
        for a, k in enumerate(basis.keys):
            for mk, c in to_majorana(OperatorPolynomial(FERMION, H.n, {k: 1.0})).terms.items():
                T[a, pos[mk]] += c / _herm_phase(MAJORANA, mk)
        M = T.conj() @ Mm @ T.T
    else:
        raise SosError(f"unknown state source {state_source!r}")
    M = 0.5 * (M + M.conj().T)
    ev = np.linalg.eigvalsh(M)
    par = np.array([(popcount(u) + popcount(v)) & 1 for u, v in basis.keys])
    sectors, sizes = {}, {}
    for name, p in (("even", 0), ("odd", 1)):
        idx = np.nonzero(par == p)[0]
        sizes[name] = int(idx.size)
        sectors[name] = int(np.sum(np.linalg.eigvalsh(M[np.ix_(idx, idx)]) < zero_tol)) if idx.size else 0
    return RankReport(ev, int(np.sum(ev < zero_tol)), sectors, sizes)


# ---------------------------------------------------------------------------
# perturbation order


@dataclass
class PtOrderResult:
    slope: float | None
    errors: np.ndarray
    eps: np.ndarray
    exact: bool
    bounds: np.ndarray
    energies: np.ndarray


def pt_order_check(
    family: Callable[[float], OperatorPolynomial],
    r: int,
    eps_grid: Sequence[float],
    noise: float = 1e-7,
    gap_tol: float = 1e-10,
    symmetry: Sequence[Symmetry] | None = None,
) -> PtOrderResult:
    """Fit log(E_exact - bound_r) against log eps.

    Without explicit symmetries fermion parity is used for fermionic families.
    """
    from .spectra import extremal_eigs

    eps = np.asarray(eps_grid, dtype=float)
    bounds, energies = [], []
    for e in eps:
        H = family(float(e))
        if symmetry is not None:
            sym = list(symmetry)
        else:
            sym = [fermion_parity()] if H.kind in (FERMION, MAJORANA) else None
        lam, sol, _ = lower_bound(H, r, symmetry=sym, gap_tol=gap_tol, feas_tol=gap_tol)
        if sol is not None and sol.status != sdpmod.OPTIMAL:
            raise sdpmod.SdpNumericalError(f"solver ended with status {sol.status} at eps={e}")
        bounds.append(lam)
        energies.append(extremal_eigs(H, "min").emin)
    bounds, energies = np.array(bounds), np.array(energies)
    err = energies - bounds
    if np.all(err < noise):
        return PtOrderResult(None, err, eps, True, bounds, energies)
    good = err > noise
    if good.sum() < 2:
        return PtOrderResult(None, err, eps, True, bounds, energies)
    slope = float(np.polyfit(np.log(eps[good]), np.log(err[good]), 1)[0])
    return PtOrderResult(slope, err, eps, False, bounds, energies)
