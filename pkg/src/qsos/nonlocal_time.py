"""Time-nonlocal partition functions to second order in the coupling.

Z(beta, g) = T tr exp(-int H - g sum_a int int Delta_a^dag(t) Delta_a(t') F_a(t - t')).

Time-ordered traces place later times to the left:
    T tr(O_1(t_1) ... O_k(t_k)) = tr(e^{-(beta-t_(k))H} O_(k) ... e^{-(t_(2)-t_(1))H} O_(1) e^{-t_(1) H}).
Kernels are beta-periodic. The delta comb is collapsed analytically; the
step kernel is the periodization of theta(x) e^{-(eps - i omega) x}, which is
the thermal Green's function of an oscillator of frequency eps.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .algebra import OperatorPolynomial
from .spectra import to_dense

GL_ORDER = 64


class NonlocalError(ValueError):
    pass


@dataclass(frozen=True)
class DeltaComb:
    tau0: float


@dataclass(frozen=True)
class StepExp:
    eps: float
    omega: float = 0.0


@dataclass
class NonlocalModel:
    H: OperatorPolynomial
    deltas: list
    kernels: list
    beta: float

    def __post_init__(self):
        if len(self.deltas) != len(self.kernels):
            raise NonlocalError("one kernel per Delta_a")
        if self.H.n > 3:
            raise NonlocalError("base Hamiltonian limited to three qubits")
        for k in self.kernels:
            if isinstance(k, DeltaComb):
                if not 0 < k.tau0 < self.beta:
                    raise NonlocalError("tau0 must lie strictly inside (0, beta)")
            elif isinstance(k, StepExp):
                if k.eps <= 0:
                    raise NonlocalError("step kernel needs eps > 0")
                m = k.omega * self.beta / (2 * math.pi)
                if abs(m - round(m)) > 1e-9:
                    raise NonlocalError("omega must be a multiple of 2 pi / beta")
            else:
                raise NonlocalError(f"unknown kernel {k!r}")


@dataclass
class LogZSeries:
    c0: float
    c1: float
    c2: float
    err1: float
    err2: float
    params: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"c0": self.c0, "c1": self.c1, "c2": self.c2, "errors": {"c1": self.err1, "c2": self.err2}, "parameters": self.params}


def step_kernel(k: StepExp, beta: float, x: np.ndarray) -> np.ndarray:
    u = np.mod(x, beta)
    return np.exp(-(k.eps - 1j * k.omega) * u) / (1.0 - math.exp(-k.eps * beta))


# ---------------------------------------------------------------------------
# traces


@dataclass
class _Spectral:
    E: np.ndarray
    V: np.ndarray
    shift: float
    beta: float

    def rotate(self, A: np.ndarray) -> np.ndarray:
        return self.V.conj().T @ A @ self.V


def _spectral(H: np.ndarray, beta: float) -> _Spectral:
    E, V = np.linalg.eigh(H)
    return _Spectral(E - E[0], V, float(E[0]), beta)


def two_point(H, A, B, s: float, beta: float) -> complex:
    """Tr[e^{-(beta-s)H} A e^{-sH} B] from the eigendecomposition of H."""
    if not 0 <= s <= beta:
        raise NonlocalError("need 0 <= s <= beta")
    Hd = to_dense(H) if isinstance(H, OperatorPolynomial) else np.asarray(H)
    Ad = to_dense(A) if isinstance(A, OperatorPolynomial) else np.asarray(A)
    Bd = to_dense(B) if isinstance(B, OperatorPolynomial) else np.asarray(B)
    E, V = np.linalg.eigh(Hd)
    Ar, Br = V.conj().T @ Ad @ V, V.conj().T @ Bd @ V
    wl = np.exp(-(beta - s) * E)
    wr = np.exp(-s * E)
    return complex(np.einsum("m,mn,n,nm->", wl, Ar, wr, Br))


def ordered_traces(sp_: _Spectral, ops: np.ndarray, times: np.ndarray, chunk: int = 20000) -> np.ndarray:
    """Time-ordered traces for many time tuples; ops[k] acts at times[:, k] (eigenbasis, shifted H)."""
    times = np.mod(np.asarray(times, dtype=float), sp_.beta)
    N, k = times.shape
    out = np.zeros(N, dtype=complex)
    E, beta = sp_.E, sp_.beta
    for lo in range(0, N, chunk):
        t = times[lo : lo + chunk]
        perm = np.argsort(t, axis=1, kind="stable")
        ts = np.take_along_axis(t, perm, axis=1)
        # rightmost factor first: e^{-t_(1) H}
        P = np.exp(-ts[:, 0, None] * E)[:, :, None] * np.eye(len(E))
        for j in range(k):
            O = ops[perm[:, j]]
            P = O @ P
            nxt = ts[:, j + 1] if j + 1 < k else np.full(len(ts), beta)
            P = np.exp(-(nxt - ts[:, j])[:, None] * E)[:, :, None] * P
        out[lo : lo + chunk] = np.trace(P, axis1=1, axis2=2)
    return out


def _gl(a: float, b: float, order: int, pieces: int = 1):
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, pieces + 1)
    xs, ws = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        xs.append(0.5 * (hi - lo) * x + 0.5 * (hi + lo))
        ws.append(0.5 * (hi - lo) * w)
    return np.concatenate(xs), np.concatenate(ws)


def _composite(breaks, order: int, refine: int, rate: float):
    """Gauss-Legendre nodes on [breaks[i], breaks[i+1]], subdivided so each piece spans about 4/rate."""
    xs, ws = [], []
    br = sorted(set(float(b) for b in breaks))
    for lo, hi in zip(br[:-1], br[1:]):
        if hi - lo < 1e-14:
            continue
        pieces = max(1, int(math.ceil((hi - lo) * rate / 4.0))) * refine
        x, w = _gl(lo, hi, order, pieces)
        xs.append(x)
        ws.append(w)
    return np.concatenate(xs), np.concatenate(ws)


def _simplex_rule(order: int):
    """Nodes and weights for {0 < u1 < u2 < u3 < 1} via collapsed coordinates."""
    x, w = np.polynomial.legendre.leggauss(order)
    x = 0.5 * (x + 1)
    w = 0.5 * w
    a, b, c = np.meshgrid(x, x, x, indexing="ij")
    wa, wb, wc = np.meshgrid(w, w, w, indexing="ij")
    u3 = a
    u2 = a * b
    u1 = a * b * c
    jac = a * a * b
    return np.stack([u1.ravel(), u2.ravel(), u3.ravel()], axis=1), (wa * wb * wc * jac).ravel()


# ---------------------------------------------------------------------------
# series


def _model_parts(m: NonlocalModel):
    Hd = to_dense(m.H)
    sp_ = _spectral(Hd, m.beta)
    dim = Hd.shape[0]
    D = []
    for d in m.deltas:
        Dd = to_dense(d) if d.n == m.H.n else None
        if Dd is None or Dd.shape[0] != dim:
            raise NonlocalError("Delta_a must act on the same qubits as H")
        D.append(sp_.rotate(Dd))
    Z0s = float(np.sum(np.exp(-m.beta * sp_.E)))
    return sp_, D, Z0s


def _max_rate(sp_: _Spectral, m: NonlocalModel) -> float:
    r = float(sp_.E[-1]) if len(sp_.E) else 0.0
    for k in m.kernels:
        if isinstance(k, StepExp):
            r += k.eps
    return max(r, 1.0 / m.beta)


def _first_order(m, sp_, D, Z0s, order, refine) -> float:
    """z1 = -(beta / Z0) sum_a int_0^beta F_a(u) c_a(u) du, c_a(u) = T tr[Delta^dag(u) Delta(0)]."""
    beta = m.beta
    total = 0.0
    for Da, k in zip(D, m.kernels):
        ops = np.array([Da.conj().T, Da])
        if isinstance(k, DeltaComb):
            t = np.array([[k.tau0, 0.0], [beta - k.tau0, 0.0]])
            total += float(np.real(np.sum(ordered_traces(sp_, ops, t))))
        else:
            u, w = _composite([0.0, beta], order, refine, _max_rate(sp_, m))
            t = np.stack([u, np.zeros_like(u)], axis=1)
            vals = ordered_traces(sp_, ops, t) * step_kernel(k, beta, u)
            total += float(np.real(np.sum(w * vals)))
    return -beta * total / Z0s


def _second_order_comb(m, sp_, D, Z0s, order, refine) -> float:
    beta = m.beta
    acc = 0.0
    rate = _max_rate(sp_, m)
    for (Da, ka), (Db, kb) in itertools.product(zip(D, m.kernels), repeat=2):
        ops = np.array([Da.conj().T, Da, Db.conj().T, Db])
        for s1, s2 in itertools.product((1, -1), repeat=2):
            t1p = (s1 * ka.tau0) % beta
            br = [0.0, beta, t1p, (-s2 * kb.tau0) % beta, (t1p - s2 * kb.tau0) % beta]
            u, w = _composite(br, order, refine, rate)
            t = np.stack([np.zeros_like(u), np.full_like(u, t1p), u, u + s2 * kb.tau0], axis=1)
            acc += float(np.real(np.sum(w * ordered_traces(sp_, ops, t))))
    return 0.5 * beta * acc / Z0s


def _second_order_step(m, sp_, D, Z0s, order) -> float:
    """tau_1 fixed at 0; the three other times range over six ordering simplices."""
    beta = m.beta
    U, W = _simplex_rule(order)
    U = U * beta
    W = W * beta**3
    acc = 0.0
    for (Da, ka), (Db, kb) in itertools.product(zip(D, m.kernels), repeat=2):
        ops = np.array([Da.conj().T, Da, Db.conj().T, Db])
        for perm in itertools.permutations(range(3)):
            # (tau_1', tau_2, tau_2') take the sorted simplex coordinates in this order
            t = np.zeros((len(U), 4))
            for j, p in enumerate(perm):
                t[:, 1 + j] = U[:, p]
            f = step_kernel(ka, beta, -t[:, 1]) * step_kernel(kb, beta, t[:, 2] - t[:, 3])
            acc += float(np.real(np.sum(W * f * ordered_traces(sp_, ops, t))))
    return 0.5 * beta * acc / Z0s


def logZ_series(m: NonlocalModel, order: int = GL_ORDER, refine: int = 1, check: bool = True) -> LogZSeries:
    """c0 = log Z(beta, 0); c1, c2 the g and g^2 coefficients of log Z(beta, g)."""
    sp_, D, Z0s = _model_parts(m)
    c0 = math.log(Z0s) - m.beta * sp_.shift
    kinds = {type(k) for k in m.kernels}
    if len(kinds) > 1:
        raise NonlocalError("mixed kernel families are not supported")
    if not m.deltas:
        return LogZSeries(c0, 0.0, 0.0, 0.0, 0.0, _params(m))

    def run(order_, refine_):
        z1 = _first_order(m, sp_, D, Z0s, order_, refine_)
        if kinds == {DeltaComb}:
            z2 = _second_order_comb(m, sp_, D, Z0s, order_, refine_)
        else:
            z2 = _second_order_step(m, sp_, D, Z0s, order_ if refine_ == 1 else order_ + 8)
        return z1, z2 - 0.5 * z1 * z1

    c1, c2 = run(order if kinds == {DeltaComb} else min(order, 32), refine)
    e1 = e2 = float("nan")
    if check:
        c1b, c2b = run(order if kinds == {DeltaComb} else min(order, 32), 2 * refine)
        e1, e2 = abs(c1b - c1), abs(c2b - c2)
    return LogZSeries(c0, c1, c2, e1, e2, _params(m))


def _params(m: NonlocalModel) -> dict:
    ks = []
    for k in m.kernels:
        ks.append({"delta_comb": {"tau0": k.tau0}} if isinstance(k, DeltaComb) else {"step_exp": {"eps": k.eps, "omega": k.omega}})
    return {"beta": m.beta, "n_qubits": m.H.n, "n_deltas": len(m.deltas), "kernels": ks}


# ---------------------------------------------------------------------------
# oscillator embedding


def _ladder(nmax: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, nmax + 1)), 1)


def embedded_Z(m: NonlocalModel, g: float, n_max: int = 4, steps: int = 400) -> float:
    """Trotterized trace with one truncated oscillator per step kernel.

    Each slice is e^{-d H0 / 2} U(t) e^{-d H0 / 2} with
    U(t) = exp(-i sqrt(g) d sum_a (e^{-i w t} Delta_a b_a^dag + e^{i w t} Delta_a^dag b_a)),
    later slices to the left. For g < 0 the coupling i sqrt(g) is continued
    to -sqrt(-g), so Z is analytic through g = 0.
    """
    if any(not isinstance(k, StepExp) for k in m.kernels):
        raise NonlocalError("embedding needs step kernels")
    if n_max > 6:
        raise NonlocalError("oscillator truncation n_max is limited to 6")
    Hq = to_dense(m.H)
    dq = Hq.shape[0]
    K = len(m.kernels)
    dh = n_max + 1
    b = _ladder(n_max)
    Ih = np.eye(dh)

    def osc_op(op, a):
        mats = [Ih] * K
        mats[a] = op
        out = np.array([[1.0]])
        for M in mats:
            out = np.kron(out, M)
        return out

    dimh = dh**K
    H0 = np.kron(Hq, np.eye(dimh))
    for a, k in enumerate(m.kernels):
        H0 = H0 + k.eps * np.kron(np.eye(dq), osc_op(b.T @ b, a))
    coup = 1j * math.sqrt(g) if g >= 0 else -math.sqrt(-g)
    d = m.beta / steps
    half = sla.expm(-0.5 * d * H0)
    P = np.eye(H0.shape[0], dtype=complex)
    terms = [(np.kron(to_dense(Dl), osc_op(b.T, a)), np.kron(to_dense(Dl).conj().T, osc_op(b, a)), k.omega)
             for a, (Dl, k) in enumerate(zip(m.deltas, m.kernels))]
    static = all(k.omega == 0 for k in m.kernels)
    Ustatic = None
    for j in range(steps):
        t = (j + 0.5) * d
        if Ustatic is None or not static:
            Vt = sum(np.exp(-1j * w * t) * Bd + np.exp(1j * w * t) * Bb for Bd, Bb, w in terms)
            U = sla.expm(-coup * d * Vt)
            if static:
                Ustatic = U
        else:
            U = Ustatic
        P = half @ U @ half @ P
    return float(np.real(np.trace(P)))


def embedded_logz_coefficients(m: NonlocalModel, h: float = 0.02, n_max: int = 4, steps: int = 400):
    """(c1, c2) of log Z_embedded - log Z(g=0) from Richardson-extrapolated central differences."""
    L0 = math.log(embedded_Z(m, 0.0, n_max, steps))

    def diffs(hh):
        lp = math.log(embedded_Z(m, hh, n_max, steps))
        lm = math.log(embedded_Z(m, -hh, n_max, steps))
        return (lp - lm) / (2 * hh), (lp - 2 * L0 + lm) / (2 * hh * hh)

    a1, a2 = diffs(h)
    b1, b2 = diffs(h / 2)
    return (4 * b1 - a1) / 3, (4 * b2 - a2) / 3


def harmonic_log_z(m: NonlocalModel, n_max: int | None = None) -> float:
    """log of the oscillator partition function (truncated when n_max is given)."""
    out = 0.0
    for k in m.kernels:
        if n_max is None:
            out += -math.log1p(-math.exp(-k.eps * m.beta))
        else:
            out += math.log(np.sum(np.exp(-k.eps * m.beta * np.arange(n_max + 1))))
    return out


def single_qubit_model(V: float = 1.0, tau0: float = 10.0, beta: float = 100.0) -> NonlocalModel:
    from .algebra import X, Z

    return NonlocalModel(V * Z(1, 0), [X(1, 0)], [DeltaComb(tau0)], beta)


def two_qubit_model(V: float = 1.0, tau0: float = 10.0, beta: float = 100.0) -> NonlocalModel:
    from .algebra import Z, pauli

    deltas = [pauli(2, {0: "X", 1: s}) for s in "XYZ"]
    return NonlocalModel(V * Z(2, 0), deltas, [DeltaComb(tau0)] * 3, beta)


def step_model(V: float = 1.0, eps: float = 1.0, omega: float = 0.0, beta: float = 4.0) -> NonlocalModel:
    from .algebra import X, Z

    return NonlocalModel(V * Z(1, 0), [X(1, 0)], [StepExp(eps, omega)], beta)
