"""Auxiliary-field imaginary-time Monte Carlo driven by a Hermitian SoS decomposition.

H = Q + sum_a Q_a^2 + lam with Q positive and quadratic, Q_a Hermitian and
quadratic. Each Trotter slice is
    exp(-tau Q / 2) exp(i sum_a phi_a Q_a) exp(-tau Q / 2),   phi_a ~ N(0, 2 tau),
whose field average reproduces exp(-tau (Q + sum_a Q_a^2)) to O(tau^2). The
weight of a field history is the Fock-space trace of the ordered product.
Propagation is dense and blocked by fermion parity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import sos
from .algebra import FERMION, MAJORANA, OperatorPolynomial, key_degree, to_majorana
from .spectra import to_dense

MAX_MODES = 6


class AfqmcError(ValueError):
    pass


@dataclass
class HsDecomposition:
    H: OperatorPolynomial
    Q: OperatorPolynomial
    Qa: list
    lam: float
    residual: float = field(default=0.0)

    def reconstruct(self) -> OperatorPolynomial:
        total = self.Q + OperatorPolynomial.identity(self.Q.kind, self.Q.n, self.lam)
        for q in self.Qa:
            total = total + q * q
        return total


def _as_majorana(p: OperatorPolynomial) -> OperatorPolynomial:
    if p.kind not in (FERMION, MAJORANA):
        raise AfqmcError("AFQMC needs a fermionic operator")
    return to_majorana(p)


def _is_quadratic(p: OperatorPolynomial) -> bool:
    return all(key_degree(p.kind, k) in (0, 2) for k in p.terms)


def _min_eig(p: OperatorPolynomial) -> float:
    return float(np.linalg.eigvalsh(to_dense(p))[0])


def validate(d: HsDecomposition, tol: float = 1e-6) -> HsDecomposition:
    H = _as_majorana(d.H)
    resid = (H - _as_majorana(d.reconstruct())).norm1()
    d.residual = float(resid)
    if resid > tol * max(1.0, H.norm1()):
        raise AfqmcError(f"decomposition residual {resid:.3e} exceeds tolerance")
    for q in [d.Q] + list(d.Qa):
        if not _is_quadratic(q):
            raise AfqmcError("Q and Q_a must be quadratic")
        if not q.is_hermitian(1e-9):
            raise AfqmcError("Q and Q_a must be Hermitian")
    if d.H.n <= MAX_MODES and d.Q.terms and _min_eig(d.Q) < -1e-8:
        raise AfqmcError("Q is not positive semidefinite")
    return d


def decompose(
    H: OperatorPolynomial,
    via: str = "sdp",
    split: str = "absorb",
    Q: OperatorPolynomial | None = None,
    Qa=None,
    lam: float | None = None,
    eig_cut: float = 1e-9,
) -> HsDecomposition:
    """Build H = Q + sum Q_a^2 + lam.

    via="sdp" runs the Hermitian-restricted degree-2 SoS with parity symmetry
    and uses its squares. With split="absorb" the constant part of each square
    stays inside Q_a, so Q = 0 and lam is the SDP bound. With split="shift" the
    Q_a are purely quadratic, the quadratic remainder becomes Q after a shift
    by its lowest eigenvalue, and lam drops accordingly.
    via="manual" validates user-supplied (Q, Qa, lam).
    """
    Hm = _as_majorana(H)
    if via == "manual":
        if Q is None or lam is None:
            raise AfqmcError("manual decomposition needs Q and lam")
        qa = [_as_majorana(q) for q in (Qa or [])]
        return validate(HsDecomposition(Hm, _as_majorana(Q), qa, float(lam)))
    if via != "sdp":
        raise AfqmcError(f"unknown decomposition route {via!r}")
    if Hm.n > MAX_MODES:
        raise AfqmcError(f"at most {MAX_MODES} modes")
    lam_sdp, sol, mp = sos.lower_bound(Hm, 2, mode=sos.RESTRICTED, symmetry=[sos.fermion_parity()])
    zero = OperatorPolynomial.zero(MAJORANA, Hm.n)
    if sol is None:
        return validate(HsDecomposition(Hm, zero, [], lam_sdp))
    cert = sos.extract_certificate(mp, sol, eig_cut=eig_cut)
    consts = 0.0
    qa = []
    for w, O in cert.squares:
        O = math.sqrt(w) * O
        if not _is_quadratic(O):
            # odd-sector squares of Hermitian linears are constants
            sq = O * O
            if any(key_degree(MAJORANA, k) for k in sq.terms if abs(sq.terms[k]) > 1e-9):
                raise AfqmcError("square is not reducible to quadratic form")
            consts += float(np.real(sq.constant()))
            continue
        qa.append(O)
    if split == "absorb":
        d = HsDecomposition(Hm, zero, qa, cert.bound + consts)
    elif split == "shift":
        qa = [q - OperatorPolynomial.identity(MAJORANA, Hm.n, q.constant()) for q in qa]
        R = Hm - sum((q * q for q in qa), zero)
        c0 = float(np.real(R.constant()))
        Rq = R - OperatorPolynomial.identity(MAJORANA, Hm.n, c0)
        high = {k: v for k, v in Rq.terms.items() if key_degree(MAJORANA, k) > 2}
        if sum(abs(v) for v in high.values()) > 1e-6 * max(1.0, Hm.norm1()):
            raise AfqmcError("remainder is not quadratic")
        Rq = OperatorPolynomial(MAJORANA, Hm.n, {k: v for k, v in Rq.terms.items() if k not in high})
        e = _min_eig(Rq) if Rq.terms else 0.0
        Q_ = Rq - OperatorPolynomial.identity(MAJORANA, Hm.n, e)
        d = HsDecomposition(Hm, Q_, qa, c0 + e)
    else:
        raise AfqmcError(f"unknown split {split!r}")
    return validate(d)


# ---------------------------------------------------------------------------
# propagation


def _parity_blocks(n: int) -> list[np.ndarray]:
    idx = np.arange(2**n)
    par = np.array([bin(i).count("1") & 1 for i in idx])
    return [idx[par == 0], idx[par == 1]]


def _expm_herm(M: np.ndarray, t: complex) -> np.ndarray:
    w, V = np.linalg.eigh(M)
    return (V * np.exp(t * w)) @ V.conj().T


@dataclass
class _Dense:
    blocks: list
    Qhalf: list
    Qa: list
    K: int


def _dense_parts(d: HsDecomposition, tau: float) -> _Dense:
    n = d.H.n
    if n > MAX_MODES:
        raise AfqmcError(f"dense propagation is limited to {MAX_MODES} modes")
    blocks = _parity_blocks(n)
    Qd = to_dense(d.Q) if d.Q.terms else np.zeros((2**n, 2**n))
    Qa = [to_dense(q) for q in d.Qa]
    qh, qa = [], []
    for b in blocks:
        qh.append(_expm_herm(Qd[np.ix_(b, b)], -tau / 2))
        qa.append(np.array([q[np.ix_(b, b)] for q in Qa]) if Qa else np.zeros((0, len(b), len(b))))
    return _Dense(blocks, qh, qa, len(Qa))


@dataclass
class FieldTrajectory:
    tau: float
    phi: np.ndarray
    weight: complex = 0j
    trace_norms: list = field(default_factory=list)

    @property
    def steps(self) -> int:
        return self.phi.shape[0]


def hs_weight(d: HsDecomposition, phi: np.ndarray, tau: float) -> FieldTrajectory:
    """Trace of the slice product for one field history phi[t, a].

    trace_norms records the trace norm of the partial product after each
    slice; it cannot increase because every factor is a contraction.
    """
    phi = np.atleast_2d(np.asarray(phi, dtype=float))
    parts = _dense_parts(d, tau)
    if parts.K and phi.shape[1] != parts.K:
        raise AfqmcError(f"need {parts.K} fields per slice, got {phi.shape[1]}")
    P = [np.eye(len(b), dtype=complex) for b in parts.blocks]
    norms = []
    for t in range(phi.shape[0]):
        for s in range(len(P)):
            U = parts.Qhalf[s]
            if parts.K:
                A = np.tensordot(phi[t], parts.Qa[s], axes=1)
                U = U @ _expm_herm(A, 1j) @ parts.Qhalf[s]
            else:
                U = U @ parts.Qhalf[s]
            P[s] = U @ P[s]
        norms.append(float(sum(np.linalg.svd(p, compute_uv=False).sum() for p in P)))
    w = complex(sum(np.trace(p) for p in P))
    return FieldTrajectory(tau, phi, w, norms)


def _batched_weights(parts: _Dense, phi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """phi[b, t, a] -> (weights, final trace norms) for a batch of histories."""
    B, L, _ = phi.shape
    w = np.zeros(B, dtype=complex)
    tn = np.zeros(B)
    for s, blk in enumerate(parts.blocks):
        dim = len(blk)
        P = np.broadcast_to(np.eye(dim, dtype=complex), (B, dim, dim)).copy()
        Qh = parts.Qhalf[s]
        Qflat = parts.Qa[s].reshape(parts.K, dim * dim)
        trivial_q = np.allclose(Qh, np.eye(dim), atol=0, rtol=0)
        for t in range(L):
            if parts.K:
                A = (phi[:, t, :] @ Qflat).reshape(B, dim, dim)
                ev, V = np.linalg.eigh(A)
                U = (V * np.exp(1j * ev)[:, None, :]) @ np.conj(np.swapaxes(V, 1, 2))
                P = U @ P if trivial_q else Qh @ (U @ (Qh @ P))
            else:
                P = Qh @ (Qh @ P)
        w += np.trace(P, axis1=1, axis2=2)
        tn += np.linalg.svd(P, compute_uv=False).sum(axis=1)
    return w, tn


@dataclass
class SignDecayResult:
    beta: float
    tau: float
    samples: int
    mean_weight: complex
    mean_abs_weight: float
    stderr: float
    ratio: float
    rate: float
    rate_stderr: float
    bound_rate: float | None
    starved: bool

    def csv_row(self) -> dict:
        return {
            "beta": self.beta, "tau": self.tau, "samples": self.samples,
            "mean_weight_re": self.mean_weight.real, "mean_weight_im": self.mean_weight.imag,
            "mean_abs_weight": self.mean_abs_weight, "stderr": self.stderr,
            "bound_rate": self.bound_rate if self.bound_rate is not None else float("nan"),
        }


CSV_COLUMNS = ("beta", "tau", "samples", "mean_weight_re", "mean_weight_im", "mean_abs_weight", "stderr", "bound_rate")


def sign_decay(
    d: HsDecomposition,
    beta: float,
    tau: float | None = None,
    samples: int = 10_000,
    seed: int = 0,
    chunk: int = 5_000,
    e0: float | None = None,
    rel_tol: float | None = None,
) -> SignDecayResult:
    """Monte Carlo estimate of W(beta) = E_phi[weight] and the decay rate -(1/beta) log W.

    Chunks use independent Philox streams keyed by (seed, chunk index), and
    partial sums are combined with math.fsum, so results do not depend on
    the chunk schedule beyond the chunk size.
    """
    tau = beta / 80 if tau is None else tau
    L = max(1, int(round(beta / tau)))
    tau = beta / L
    parts = _dense_parts(d, tau)
    K = max(parts.K, 1)
    re, im, ab, re2, im2 = [], [], [], [], []
    done = 0
    c = 0
    while done < samples:
        b = min(chunk, samples - done)
        rng = np.random.Generator(np.random.Philox(key=[seed, c]))
        phi = rng.standard_normal((b, L, K)) * math.sqrt(2 * tau)
        w, _ = _batched_weights(parts, phi[:, :, : parts.K] if parts.K else phi[:, :, :0])
        re.append(float(np.sum(w.real)))
        im.append(float(np.sum(w.imag)))
        ab.append(float(np.sum(np.abs(w))))
        re2.append(float(np.sum(w.real**2)))
        im2.append(float(np.sum(w.imag**2)))
        done += b
        c += 1
    N = samples
    mw = complex(math.fsum(re) / N, math.fsum(im) / N)
    mabs = math.fsum(ab) / N
    var = (math.fsum(re2) / N - mw.real**2) + (math.fsum(im2) / N - mw.imag**2)
    se = math.sqrt(max(var, 0.0) / max(N - 1, 1))
    rate = -math.log(mw.real) / beta if mw.real > 0 else float("nan")
    rate_se = se / (beta * mw.real) if mw.real > 0 else float("inf")
    bound = None if e0 is None else e0 - d.lam
    starved = bool(rel_tol is not None and (mw.real <= 0 or se / abs(mw.real) > rel_tol))
    return SignDecayResult(
        beta, tau, N, mw, mabs, se, abs(mw) / mabs if mabs else float("nan"), rate, rate_se, bound, starved
    )


def quadrature_weight(d: HsDecomposition, beta: float, steps: int, order: int = 40) -> complex:
    """Field-averaged weight by tensor Gauss-Hermite quadrature (one Q_a, few slices)."""
    if len(d.Qa) > 1 or steps > 3:
        raise AfqmcError("quadrature is limited to one field and at most three slices")
    tau = beta / steps
    parts = _dense_parts(d, tau)
    if not parts.K:
        return complex(hs_weight(d, np.zeros((steps, 0)), tau).weight)
    x, wq = np.polynomial.hermite.hermgauss(order)
    # phi = 2 sqrt(tau) x turns exp(-phi^2 / 4 tau) into exp(-x^2)
    nodes = 2 * math.sqrt(tau) * x
    weights = wq / math.sqrt(math.pi)
    grids = np.meshgrid(*([np.arange(order)] * steps), indexing="ij")
    idx = np.stack([g.ravel() for g in grids], axis=1)
    phi = nodes[idx][:, :, None]
    w, _ = _batched_weights(parts, phi)
    return complex(np.sum(w * np.prod(weights[idx], axis=1)))


def exact_weight(d: HsDecomposition, beta: float) -> float:
    """tr exp(-beta (H - lam)) from the dense Hamiltonian."""
    Hd = to_dense(d.H)
    w = np.linalg.eigvalsh(Hd)
    return float(np.sum(np.exp(-beta * (w - d.lam))))
