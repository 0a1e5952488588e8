"""SYK ensemble, fermionic Gaussian states, and the Gaussian energy-limit experiments.

Majorana indices are 0-based throughout; a system of n Majoranas has n/2
fermion modes and the Jordan-Wigner layout of the algebra module.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .algebra import MAJORANA, OperatorPolynomial, mask_of
from .spectra import extremal_eigs, to_dense, to_linear_operator

MATRICIZE_CAP = 10**8


class SykError(ValueError):
    pass


# ---------------------------------------------------------------------------
# ensemble


def _perm_sign(p) -> int:
    p = list(p)
    sign = 1
    for i in range(len(p)):
        while p[i] != i:
            j = p[i]
            p[i], p[j] = p[j], p[i]
            sign = -sign
    return sign


def _herm_phase(q: int) -> complex:
    # (gamma_S)^dagger = (-1)^{q(q-1)/2} gamma_S
    return 1.0 if (q * (q - 1) // 2) % 2 == 0 else 1j


@dataclass
class SykTensor:
    """Totally antisymmetric J stored on increasing index tuples.

    H = sum over all q-tuples J_{i1..iq} gamma_{i1}..gamma_{iq}
      = q! sum over increasing tuples J_S gamma_S,
    times i when q = 2 mod 4 so that H is Hermitian. The full tensor has unit
    l2 norm, i.e. q! sum_S J_S^2 = 1.
    """

    n: int
    q: int
    tuples: np.ndarray
    coeffs: np.ndarray
    seed: int | None = None

    @property
    def l2_norm(self) -> float:
        return float(math.sqrt(math.factorial(self.q) * np.sum(self.coeffs**2)))

    def coefficient(self, indices) -> float:
        """J at an arbitrary index tuple (zero on repeats, signed by permutation)."""
        idx = list(indices)
        if len(idx) != self.q or len(set(idx)) != self.q:
            return 0.0
        order = sorted(range(self.q), key=lambda t: idx[t])
        key = tuple(idx[t] for t in order)
        pos = self._lookup().get(key)
        if pos is None:
            return 0.0
        return _perm_sign(order) * float(self.coeffs[pos])

    def _lookup(self) -> dict:
        if not hasattr(self, "_index"):
            self._index = {tuple(int(a) for a in t): i for i, t in enumerate(self.tuples)}
        return self._index

    def full_tensor(self) -> np.ndarray:
        if self.n**self.q > MATRICIZE_CAP:
            raise SykError(f"full tensor has n^q = {self.n**self.q} entries, cap is {MATRICIZE_CAP}")
        T = np.zeros(self.n**self.q)
        strides = self.n ** np.arange(self.q - 1, -1, -1)
        for perm in itertools.permutations(range(self.q)):
            flat = self.tuples[:, perm] @ strides
            T[flat] = _perm_sign(perm) * self.coeffs
        return T.reshape([self.n] * self.q)

    def hamiltonian(self) -> OperatorPolynomial:
        scale = math.factorial(self.q) * _herm_phase(self.q)
        terms = {mask_of(t): scale * c for t, c in zip(self.tuples.tolist(), self.coeffs)}
        return OperatorPolynomial(MAJORANA, self.n // 2, terms)


def sample_syk(n: int, q: int = 4, seed: int = 0) -> SykTensor:
    if n % 2 or q % 2 or q < 2 or q > n:
        raise SykError("need n even, q even and 2 <= q <= n")
    rng = np.random.default_rng(seed)
    tuples = np.array(list(itertools.combinations(range(n), q)), dtype=np.int64)
    c = rng.standard_normal(len(tuples))
    c /= math.sqrt(math.factorial(q) * np.sum(c**2))
    return SykTensor(n, q, tuples, c, seed)


def matricize(J: SykTensor, p: int) -> np.ndarray:
    """Rows indexed by the first p indices, columns by the remaining q - p."""
    if not 0 <= p <= J.q:
        raise SykError("p must lie in 0..q")
    return J.full_tensor().reshape(J.n**p, J.n ** (J.q - p))


def matricized_norm(J: SykTensor, p: int) -> float:
    """Operator norm of the (p, q-p) matricization via the smaller Gram matrix."""
    A = matricize(J, p)
    if A.shape[0] == 1 or A.shape[1] == 1:
        return float(np.linalg.norm(A))
    if A.shape[0] == A.shape[1] and np.allclose(A, A.T):
        from scipy.sparse.linalg import eigsh

        w = eigsh(A, k=1, which="LM", v0=np.ones(A.shape[0]), tol=1e-10)[0]
        return float(abs(w[0]))
    G = A @ A.T if A.shape[0] <= A.shape[1] else A.T @ A
    return float(math.sqrt(max(np.linalg.eigvalsh(G)[-1], 0.0)))


def norm_scaling(ns=(16, 32, 64), seeds=range(5), q: int = 4) -> dict:
    """Mean operator norms of every matricization and their log-log slopes in n."""
    ns = list(ns)
    table = {p: [] for p in range(q + 1)}
    rows = []
    for n in ns:
        acc = {p: [] for p in range(q + 1)}
        for s in seeds:
            J = sample_syk(n, q, s)
            for p in range(q // 2 + 1):
                v = matricized_norm(J, p)
                acc[p].append(v)
                rows.append({"n": n, "seed": s, "p": p, "norm": v})
        for p in range(q // 2 + 1):
            table[p].append(float(np.mean(acc[p])))
            table[q - p] = table[p]
    if len(set(ns)) < 2:
        slopes = {p: float("nan") for p in range(q + 1)}
    else:
        slopes = {p: float(np.polyfit(np.log(ns), np.log(table[p]), 1)[0]) for p in range(q + 1)}
    return {"n": ns, "mean_norm": table, "slopes": slopes, "rows": rows}


# ---------------------------------------------------------------------------
# Gaussian states


def pfaffian(A: np.ndarray, tol: float = 1e-10) -> complex:
    """Pfaffian by skew-symmetric Gaussian elimination with partial pivoting (Parlett-Reid)."""
    A = np.array(A, dtype=complex if np.iscomplexobj(A) else float)
    m = A.shape[0]
    if A.shape != (m, m):
        raise SykError("pfaffian needs a square matrix")
    scale = max(1.0, float(np.max(np.abs(A)))) if m else 1.0
    if np.max(np.abs(A + A.T), initial=0.0) > tol * scale:
        raise SykError("matrix is not antisymmetric")
    if m % 2:
        return 0.0
    pf = 1.0
    for k in range(0, m - 1, 2):
        piv = k + 1 + int(np.argmax(np.abs(A[k, k + 1 :])))
        if piv != k + 1:
            A[[k + 1, piv], :] = A[[piv, k + 1], :]
            A[:, [k + 1, piv]] = A[:, [piv, k + 1]]
            pf = -pf
        if A[k, k + 1] == 0:
            return 0.0 * pf
        pf = pf * A[k, k + 1]
        if k + 2 < m:
            tau = A[k, k + 2 :] / A[k, k + 1]
            # eliminate row/column k's coupling to the trailing block
            col = A[k + 2 :, k + 1]
            A[k + 2 :, k + 2 :] += np.outer(tau, col) - np.outer(col, tau)
    return pf


@dataclass
class GaussianState:
    """Majorana covariance M = I + iB with B real antisymmetric."""

    B: np.ndarray
    pure: bool = field(init=False)

    def __post_init__(self):
        B = np.asarray(self.B, dtype=float)
        if B.ndim != 2 or B.shape[0] != B.shape[1] or B.shape[0] % 2:
            raise SykError("B must be an even-dimensional square matrix")
        if np.max(np.abs(B + B.T), initial=0.0) > 1e-10:
            raise SykError("B must be antisymmetric")
        if np.max(np.abs(np.linalg.eigvalsh(1j * B)), initial=0.0) > 1 + 1e-8:
            raise SykError("eigenvalues of iB must lie in [-1, 1]")
        self.B = B
        self.pure = bool(np.allclose(B @ B, -np.eye(len(B)), atol=1e-8))

    @property
    def n(self) -> int:
        return self.B.shape[0]

    @property
    def M(self) -> np.ndarray:
        return np.eye(self.n) + 1j * self.B

    def parent_hamiltonian(self) -> OperatorPolynomial:
        """(i/4) sum B_lm gamma_l gamma_m; its unique ground state has this covariance when pure."""
        terms = {}
        for l in range(self.n):
            for m in range(l + 1, self.n):
                if self.B[l, m] != 0:
                    terms[(1 << l) | (1 << m)] = 0.5j * self.B[l, m]
        return OperatorPolynomial(MAJORANA, self.n // 2, terms)

    def wavefunction(self) -> np.ndarray:
        if not self.pure:
            raise SykError("only pure states have a wavefunction")
        w, v = np.linalg.eigh(to_dense(self.parent_hamiltonian()))
        return v[:, 0]


def canonical_B(n: int) -> np.ndarray:
    B = np.zeros((n, n))
    for a in range(0, n, 2):
        B[a, a + 1], B[a + 1, a] = 1.0, -1.0
    return B


def haar_orthogonal(n: int, rng: np.random.Generator) -> np.ndarray:
    Q, R = np.linalg.qr(rng.standard_normal((n, n)))
    return Q * np.sign(np.diag(R))


def random_pure_gaussian(n: int, rng: np.random.Generator) -> tuple[GaussianState, np.ndarray]:
    """B = R B0 R^T with Haar R; returns the state and R."""
    R = haar_orthogonal(n, rng)
    return GaussianState(R @ canonical_B(n) @ R.T), R


def _pairing_sum(M: np.ndarray, idx: tuple) -> complex:
    if not idx:
        return 1.0
    first, rest = idx[0], idx[1:]
    total = 0.0
    for j in range(len(rest)):
        sign = -1 if j % 2 else 1
        total = total + sign * M[first, rest[j]] * _pairing_sum(M, rest[:j] + rest[j + 1 :])
    return total


def pairing_sum(state: GaussianState, indices) -> complex:
    """Signed sum over all pairings of prod M_{a b}, valid for repeated indices."""
    idx = tuple(int(i) for i in indices)
    if len(idx) % 2:
        # Gaussian states have definite parity
        return 0j
    return complex(_pairing_sum(state.M, idx))


def wick_expectation(state: GaussianState, indices) -> complex:
    """<gamma_{i1} ... gamma_{i2m}>: a Pfaffian of iB for distinct indices, a pairing sum otherwise."""
    idx = [int(i) for i in indices]
    if len(idx) % 2:
        return 0j
    if not idx:
        return 1.0 + 0j
    if len(set(idx)) < len(idx):
        return pairing_sum(state, idx)
    sub = state.B[np.ix_(idx, idx)]
    return complex((1j) ** (len(idx) // 2) * pfaffian(sub))


def gaussian_energy(state: GaussianState, J: SykTensor) -> float:
    """<H> by Wick's theorem; for q = 4 the 4x4 Pfaffians are written out."""
    if J.n != state.n:
        raise SykError("state and tensor sizes differ")
    if J.q != 4:
        vals = [wick_expectation(state, t) for t in J.tuples]
        e = math.factorial(J.q) * _herm_phase(J.q) * np.dot(J.coeffs, vals)
        return float(np.real(e))
    B = state.B
    i, j, k, l = J.tuples.T
    pf = B[i, j] * B[k, l] - B[i, k] * B[j, l] + B[i, l] * B[j, k]
    # <gamma_S> = i^2 Pf(B_S)
    return float(-24.0 * np.dot(J.coeffs, pf))


# ---------------------------------------------------------------------------
# pairing multigraphs


LEFT, RIGHT = 0, 1


@dataclass
class PairingGraph:
    """Multigraph on k vertices of degree q; slot s belongs to vertex s // q."""

    k: int
    edges: list
    q: int = 4
    colors: list | None = None

    def degrees(self) -> list[int]:
        deg = [0] * self.k
        for a, b in self.edges:
            deg[a] += 1
            deg[b] += 1
        return deg

    def color_counts(self) -> list[list[int]]:
        if self.colors is None:
            raise SykError("graph is not colored")
        cnt = [[0, 0] for _ in range(self.k)]
        for (a, b), c in zip(self.edges, self.colors):
            cnt[a][c] += 1
            cnt[b][c] += 1
        return cnt

    def is_balanced(self) -> bool:
        half = self.q // 2
        return all(c == [half, half] for c in self.color_counts())


def pairing_graph(pairs, k: int, q: int = 4) -> PairingGraph:
    """Graph of a pairing of the k*q slots."""
    slots = sorted(s for p in pairs for s in p)
    if slots != list(range(k * q)):
        raise SykError("pairs must cover every slot exactly once")
    return PairingGraph(k, [(a // q, b // q) for a, b in pairs], q)


def random_pairing_graph(k: int, rng: np.random.Generator, q: int = 4) -> PairingGraph:
    perm = rng.permutation(k * q)
    return pairing_graph(list(zip(perm[0::2].tolist(), perm[1::2].tolist())), k, q)


def euler_color(g: PairingGraph) -> PairingGraph:
    """Alternately color the edges along an Euler circuit of each component."""
    if g.q % 4:
        raise SykError("balanced coloring needs degree divisible by 4")
    if any(d != g.q for d in g.degrees()):
        raise SykError(f"graph is not {g.q}-regular")
    adj: list[list[tuple[int, int]]] = [[] for _ in range(g.k)]
    for e, (a, b) in enumerate(g.edges):
        adj[a].append((e, b))
        adj[b].append((e, a))
    used = [False] * len(g.edges)
    ptr = [0] * g.k
    colors = [None] * len(g.edges)
    for start in range(g.k):
        if ptr[start] >= len(adj[start]) or all(used[e] for e, _ in adj[start]):
            continue
        # Hierholzer; the circuit is recorded as a sequence of edges
        stack = [(start, None)]
        circuit = []
        while stack:
            v, via = stack[-1]
            while ptr[v] < len(adj[v]) and used[adj[v][ptr[v]][0]]:
                ptr[v] += 1
            if ptr[v] == len(adj[v]):
                stack.pop()
                if via is not None:
                    circuit.append(via)
            else:
                e, w = adj[v][ptr[v]]
                used[e] = True
                stack.append((w, e))
        if len(circuit) % 2:
            raise SykError("Euler circuit of odd length")
        for t, e in enumerate(circuit):
            colors[e] = LEFT if t % 2 == 0 else RIGHT
    out = PairingGraph(g.k, list(g.edges), g.q, colors)
    if not out.is_balanced():
        raise SykError("coloring is not balanced")
    return out


def balanced_coloring_exists(g: PairingGraph) -> bool:
    """Brute force over all 2^|E| colorings."""
    for bits_ in itertools.product((LEFT, RIGHT), repeat=len(g.edges)):
        if PairingGraph(g.k, g.edges, g.q, list(bits_)).is_balanced():
            return True
    return False


def q6_triangle() -> PairingGraph:
    """Three degree-6 vertices with three parallel edges between each pair."""
    edges = [(a, b) for a, b in ((0, 1), (1, 2), (0, 2)) for _ in range(3)]
    return PairingGraph(3, edges, 6)


# ---------------------------------------------------------------------------
# energy-limit experiments


@dataclass
class MomentTable:
    n: int
    seed: int
    k: list
    max_abs_moment: list
    lambda_max: float
    growth: list
    fitted_log_growth: float


def moment_bound_experiment(n: int, k_max: int, samples: int, seed: int = 0) -> MomentTable:
    """max over sampled pure Gaussian states of |<H^k>| next to lambda_max^k."""
    if n > 12 or k_max > 8:
        raise SykError("dense moments are limited to n <= 12 Majoranas and k <= 8")
    J = sample_syk(n, 4, seed)
    H = to_dense(J.hamiltonian())
    lam = float(np.max(np.abs(np.linalg.eigvalsh(H))))
    rng = np.random.default_rng(seed + 1)
    best = np.zeros(k_max + 1)
    for _ in range(samples):
        st, _ = random_pure_gaussian(n, rng)
        psi = st.wavefunction()
        v = psi
        for k in range(k_max + 1):
            best[k] = max(best[k], abs(np.vdot(psi, v)))
            v = H @ v
    ks = list(range(k_max + 1))
    growth = [float(best[k] ** (1.0 / k)) if k else 1.0 for k in ks]
    kk = np.array(ks[1:], dtype=float)
    fit = float(np.polyfit(np.log(kk), np.log(np.maximum(growth[1:], 1e-300)), 1)[0]) if k_max >= 2 else float("nan")
    return MomentTable(n, seed, ks, best.tolist(), lam, growth, fit)


def gaussian_vs_spectrum(n: int, samples: int, seed: int) -> dict:
    """Largest Wick energy over sampled pure Gaussian states against lambda_max from ED."""
    J = sample_syk(n, 4, seed)
    lam = extremal_eigs(J.hamiltonian(), "max").emax
    rng = np.random.default_rng(seed + 1)
    best = max(gaussian_energy(random_pure_gaussian(n, rng)[0], J) for _ in range(samples))
    return {"n": n, "seed": seed, "max_gaussian_energy": best, "lambda_max": lam, "ratio": best / lam}


def rotate_tensor(J: SykTensor, R: np.ndarray) -> SykTensor:
    """J'_{abcd} = sum J_{ijkl} R_ia R_jb R_kc R_ld, so that H is unchanged with gamma = R gamma'."""
    T = J.full_tensor()
    for _ in range(J.q):
        T = np.tensordot(T, R, axes=([0], [0]))
    tuples = J.tuples
    strides = J.n ** np.arange(J.q - 1, -1, -1)
    coeffs = T.ravel()[tuples @ strides]
    return SykTensor(J.n, J.q, tuples, coeffs, J.seed)


@dataclass
class LanczosTrace:
    n_modes: int
    seed: int
    ritz_max: list
    lambda_max: float
    ratio: list
    start_energy: float
    support_leak: list
    converged_at: int | None


def lanczos_max(apply, v0: np.ndarray, steps: int):
    """Lanczos with full reorthogonalization; returns max Ritz value per Krylov dimension and the basis."""
    Q = [v0 / np.linalg.norm(v0)]
    alphas, betas, ritz = [], [], []
    happy = None
    for j in range(steps + 1):
        w = apply(Q[j])
        a = float(np.real(np.vdot(Q[j], w)))
        alphas.append(a)
        T = np.diag(alphas) + np.diag(betas, 1) + np.diag(betas, -1)
        ritz.append(float(np.linalg.eigvalsh(T)[-1]))
        if j == steps:
            break
        for q_ in Q:
            w = w - np.vdot(q_, w) * q_
        for q_ in Q:
            w = w - np.vdot(q_, w) * q_
        b = float(np.linalg.norm(w))
        if b < 1e-12:
            happy = j
            break
        betas.append(b)
        Q.append(w / b)
    return ritz, Q, happy


def excitation_lanczos(n_modes: int, steps: int, seed: int = 0) -> LanczosTrace:
    """Lanczos on the SYK Hamiltonian from a random pure Gaussian wavefunction.

    The Hamiltonian is rotated into the modes that define the start state, so
    the start vector is the vacuum and the excitation number of a basis state
    is its popcount.
    """
    if n_modes > 14:
        raise SykError("exact diagonalization cap is 14 modes")
    n = 2 * n_modes
    J = sample_syk(n, 4, seed)
    rng = np.random.default_rng(seed + 1)
    state, R = random_pure_gaussian(n, rng)
    Jr = rotate_tensor(J, R)
    Hr = Jr.hamiltonian()
    op = to_linear_operator(Hr)
    lam = extremal_eigs(Hr, "max", seed=seed).emax
    dim = 2**n_modes
    v0 = np.zeros(dim, dtype=complex)
    v0[0] = 1.0
    ritz, Q, happy = lanczos_max(op.matvec, v0, steps)
    weight = np.array([bin(i).count("1") for i in range(dim)])
    leak = []
    for k, q_ in enumerate(Q):
        leak.append(float(np.linalg.norm(q_[weight > 4 * k])))
    return LanczosTrace(
        n_modes, seed, ritz, lam, [r / lam for r in ritz], gaussian_energy(state, J), leak, happy
    )
