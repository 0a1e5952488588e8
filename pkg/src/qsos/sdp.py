"""Dense primal-dual interior point solver for block-diagonal SDPs.

Standard form (minimization)::

    primal:  min  <C, X>   s.t.  <A_i, X> = b_i,   X >= 0
    dual:    max  b.y      s.t.  Z = C - sum_i y_i A_i >= 0

Each block is real symmetric.  Constraint data are kept per block as a sparse
``m x n_b**2`` matrix whose row ``i`` is ``vec(A_i)`` restricted to the block.
The iteration is infeasible-start path following with Nesterov-Todd scaling
and a Mehrotra predictor-corrector step.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

OPTIMAL = "optimal"
MAX_ITER = "max_iter"
INFEASIBLE = "infeasible_detected"


class SdpError(ValueError):
    """Malformed problem data."""


class SdpNumericalError(RuntimeError):
    """The Newton system or a factorization broke down."""


@dataclass
class SdpProblem:
    C: list[np.ndarray]
    A: list[sp.csr_matrix]
    b: np.ndarray
    sense: str = "min"

    def __post_init__(self):
        self.C = [np.asarray(c, dtype=float) for c in self.C]
        self.b = np.asarray(self.b, dtype=float).ravel()
        self.A = [sp.csr_matrix(a, dtype=float) for a in self.A]
        if self.sense not in ("min", "max"):
            raise SdpError("sense must be 'min' or 'max'")
        if len(self.C) != len(self.A) or not self.C:
            raise SdpError("need one C and one A per block, at least one block")
        m = self.b.size
        if m < 1:
            raise SdpError("at least one constraint is required")
        for c, a in zip(self.C, self.A):
            nb = c.shape[0]
            if c.shape != (nb, nb) or not np.allclose(c, c.T, atol=1e-12):
                raise SdpError("objective blocks must be square symmetric")
            if a.shape != (m, nb * nb):
                raise SdpError(f"constraint block has shape {a.shape}, expected {(m, nb * nb)}")

    @property
    def block_sizes(self) -> list[int]:
        return [c.shape[0] for c in self.C]

    @property
    def m(self) -> int:
        return self.b.size

    @classmethod
    def from_dense(cls, C, A, b, sense: str = "min") -> "SdpProblem":
        """C: list of blocks; A: list over constraints of lists over blocks."""
        rows = []
        for k, c in enumerate(C):
            nb = np.asarray(c).shape[0]
            rows.append(sp.csr_matrix(np.array([np.asarray(Ai[k], dtype=float).reshape(nb * nb) for Ai in A])))
        return cls(list(C), rows, b, sense)

    def constraint_matrix(self, i: int, block: int) -> np.ndarray:
        nb = self.block_sizes[block]
        return self.A[block][i].toarray().reshape(nb, nb)

    def apply_A(self, X: list[np.ndarray]) -> np.ndarray:
        return sum(a @ x.ravel() for a, x in zip(self.A, X))

    def apply_At(self, y: np.ndarray) -> list[np.ndarray]:
        out = []
        for a, nb in zip(self.A, self.block_sizes):
            M = (a.T @ y).reshape(nb, nb)
            out.append(0.5 * (M + M.T))
        return out

    def to_json(self) -> str:
        return json.dumps(
            {
                "sense": self.sense,
                "block_sizes": self.block_sizes,
                "C": [c.tolist() for c in self.C],
                "A": [[self.constraint_matrix(i, k).tolist() for k in range(len(self.C))] for i in range(self.m)],
                "b": self.b.tolist(),
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "SdpProblem":
        d = json.loads(text)
        C = [np.array(c, dtype=float) for c in d["C"]]
        return cls.from_dense(C, [[np.array(x) for x in Ai] for Ai in d["A"]], d["b"], d.get("sense", "min"))


@dataclass
class SdpSolution:
    X: list[np.ndarray]
    y: np.ndarray
    Z: list[np.ndarray]
    primal_objective: float
    dual_objective: float
    gap: float
    primal_residual: float
    dual_residual: float
    iterations: int
    status: str
    history: list[dict] = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(
            {
                "status": self.status,
                "primal_objective": self.primal_objective,
                "dual_objective": self.dual_objective,
                "gap": self.gap,
                "primal_residual": self.primal_residual,
                "dual_residual": self.dual_residual,
                "iterations": self.iterations,
                "y": self.y.tolist(),
                "X": [x.tolist() for x in self.X],
                "Z": [z.tolist() for z in self.Z],
            }
        )


@dataclass
class KktReport:
    primal_residual: float
    dual_residual: float
    gap: float
    primal_objective: float
    dual_objective: float
    min_eig_X: float
    min_eig_Z: float


def _inner(A: list[np.ndarray], B: list[np.ndarray]) -> float:
    return float(sum(np.vdot(a, b).real for a, b in zip(A, B)))


def _norm(A: list[np.ndarray]) -> float:
    return float(np.sqrt(sum(np.sum(a * a) for a in A)))


def rel_gap(pobj: float, dobj: float) -> float:
    return abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))


def check_kkt(p: SdpProblem, s: SdpSolution) -> KktReport:
    """Recompute residuals of a (X, y, Z) triple from the problem data alone."""
    sgn = -1.0 if p.sense == "max" else 1.0
    C = [sgn * c for c in p.C]
    X, Z, y = s.X, s.Z, sgn * np.asarray(s.y)
    rp = p.b - p.apply_A(X)
    Aty = p.apply_At(y)
    Rd = [c - a - z for c, a, z in zip(C, Aty, Z)]
    pobj = sgn * _inner(C, X)
    dobj = sgn * float(p.b @ y)
    return KktReport(
        primal_residual=float(np.linalg.norm(rp)) / (1.0 + float(np.linalg.norm(p.b))),
        dual_residual=_norm(Rd) / (1.0 + _norm(C)),
        gap=rel_gap(pobj, dobj),
        primal_objective=pobj,
        dual_objective=dobj,
        min_eig_X=min(float(np.linalg.eigvalsh(x)[0]) for x in X),
        min_eig_Z=min(float(np.linalg.eigvalsh(z)[0]) for z in Z),
    )


# ---------------------------------------------------------------------------
# presolve


def _independent_rows(p: SdpProblem, tol: float = 1e-10):
    """Indices of a maximal independent set of constraint rows.

    Returns (keep, T) where dropped rows equal T @ kept rows.
    """
    A = _densify(sp.hstack(p.A).tocsr())
    G = A @ A.T
    G = G.toarray() if sp.issparse(G) else np.asarray(G)
    m = G.shape[0]
    if m == 1:
        return np.arange(1), np.zeros((0, 1)), np.arange(0)
    _, R, piv = sla.qr(G, pivoting=True, mode="economic")
    d = np.abs(np.diag(R))
    rank = int(np.sum(d > tol * max(d[0], 1e-300)))
    keep = np.sort(piv[:rank])
    drop = np.sort(piv[rank:])
    if drop.size:
        Ak = A[keep].toarray() if sp.issparse(A) else A[keep]
        Ad = A[drop].toarray() if sp.issparse(A) else A[drop]
        T, *_ = np.linalg.lstsq(Ak.T, Ad.T, rcond=None)
        T = T.T
    else:
        T = np.zeros((0, rank))
    return keep, T, drop


# ---------------------------------------------------------------------------
# interior point core


def _nt_scaling(X: np.ndarray, Z: np.ndarray):
    L = np.linalg.cholesky(X)
    R = np.linalg.cholesky(Z)
    U, s, Vt = np.linalg.svd(R.T @ L)
    G = (L @ Vt.T) / np.sqrt(s)
    W = G @ G.T
    return G, s, 0.5 * (W + W.T)


def _densify(a: sp.csr_matrix, frac: float = 0.1):
    """Dense copy of a constraint block when it is mostly filled."""
    size = a.shape[0] * a.shape[1]
    return a.toarray() if size and a.nnz > frac * size else a


def _schur(A_blocks, W_blocks, m: int) -> np.ndarray:
    """S_ij = sum over blocks of <A_i, W A_j W>."""
    S = np.zeros((m, m))
    for a, W in zip(A_blocks, W_blocks):
        nb = W.shape[0]
        if isinstance(a, np.ndarray):
            Y = (W @ a.reshape(m, nb, nb) @ W).reshape(m, nb * nb)
            S += a @ Y.T
            continue
        indptr, indices, data = a.indptr, a.indices, a.data
        rows = np.flatnonzero(np.diff(indptr))
        if rows.size == 0:
            continue
        Y = np.zeros((rows.size, nb * nb))
        for t, i in enumerate(rows):
            lo, hi = indptr[i], indptr[i + 1]
            r, c = np.divmod(indices[lo:hi], nb)
            Y[t] = ((W[:, r] * data[lo:hi]) @ W[c, :]).ravel()
        S[:, rows] += np.asarray(a @ Y.T)
    return 0.5 * (S + S.T)


def _max_step(X: np.ndarray, dX: np.ndarray) -> float:
    L = np.linalg.cholesky(X)
    M = sla.solve_triangular(L, sla.solve_triangular(L, dX, lower=True).T, lower=True)
    lam = np.linalg.eigvalsh(0.5 * (M + M.T))[0]
    return np.inf if lam >= 0 else -1.0 / lam


class _Factor:
    def __init__(self, S: np.ndarray):
        self.chol = None
        try:
            self.chol = sla.cho_factor(S, lower=True, check_finite=True)
        except (np.linalg.LinAlgError, ValueError):
            try:
                self.lu = sla.lu_factor(S, check_finite=True)
            except (np.linalg.LinAlgError, ValueError) as exc:
                raise SdpNumericalError(f"Schur complement factorization failed: {exc}") from exc

    def solve(self, r: np.ndarray) -> np.ndarray:
        x = sla.cho_solve(self.chol, r) if self.chol is not None else sla.lu_solve(self.lu, r)
        if not np.all(np.isfinite(x)):
            raise SdpNumericalError("non-finite Newton direction")
        return x


def solve(
    p: SdpProblem,
    gap_tol: float = 1e-8,
    feas_tol: float = 1e-8,
    max_iter: int = 200,
    verbose: bool = False,
) -> SdpSolution:
    """Solve an SDP; see module docstring for the standard form."""
    sgn = -1.0 if p.sense == "max" else 1.0
    keep, T, drop = _independent_rows(p)
    if drop.size:
        resid = p.b[drop] - T @ p.b[keep]
        if np.linalg.norm(resid) > 1e-8 * (1 + np.linalg.norm(p.b)):
            ns = p.block_sizes
            return SdpSolution(
                [np.zeros((n, n)) for n in ns], np.zeros(p.m), [np.zeros((n, n)) for n in ns],
                np.nan, np.nan, np.inf, float(np.linalg.norm(resid)), np.nan, 0, INFEASIBLE,
            )
    # row scaling: unit-norm constraints
    A_full = [a[keep] for a in p.A]
    norms = np.sqrt(sum(np.asarray(a.multiply(a).sum(axis=1)).ravel() for a in A_full))
    norms[norms == 0] = 1.0
    Dinv = sp.diags(1.0 / norms)
    A = [(Dinv @ a).tocsr() for a in A_full]
    b = p.b[keep] / norms
    C = [sgn * c for c in p.C]
    ns = [c.shape[0] for c in C]
    m = b.size
    N = sum(ns)

    def opA(X):
        return sum(a @ x.ravel() for a, x in zip(A, X))

    def opAt(y):
        out = []
        for a, nb in zip(A, ns):
            M = (a.T @ y).reshape(nb, nb)
            out.append(0.5 * (M + M.T))
        return out

    # SDPT3-style starting point
    xi, eta = [], []
    for a, c, nb in zip(A, C, ns):
        rown = np.sqrt(np.asarray(a.multiply(a).sum(axis=1)).ravel())
        xi.append(max(10.0, np.sqrt(nb), nb * np.max((1 + np.abs(b)) / (1 + rown))))
        eta.append(max(10.0, np.sqrt(nb), np.max(rown), np.linalg.norm(c)))
    A = [_densify(a) for a in A]
    X = [x * np.eye(nb) for x, nb in zip(xi, ns)]
    Z = [e * np.eye(nb) for e, nb in zip(eta, ns)]
    y = np.zeros(m)

    bnorm = np.linalg.norm(b)
    Cnorm = _norm(C)
    history: list[dict] = []
    status = MAX_ITER
    it = 0
    best = None
    for it in range(max_iter + 1):
        rp = b - opA(X)
        Aty = opAt(y)
        Rd = [c - a - z for c, a, z in zip(C, Aty, Z)]
        pobj = _inner(C, X)
        dobj = float(b @ y)
        mu = _inner(X, Z) / N
        pinf = np.linalg.norm(rp) / (1 + bnorm)
        dinf = _norm(Rd) / (1 + Cnorm)
        gap = rel_gap(pobj, dobj)
        # pobj - dobj = <X, Z> + <Rd, X> - y.rp holds exactly in the minimization form
        xz = _inner(X, Z)
        corr = _inner(Rd, X) - float(y @ rp)
        history.append(dict(iter=it, pobj=sgn * pobj, dobj=sgn * dobj, pinf=pinf, dinf=dinf, gap=gap, mu=mu, xz=xz, infeas_term=corr))
        if verbose:
            print(f"{it:3d} pobj {pobj: .10e} dobj {dobj: .10e} gap {gap:.2e} pinf {pinf:.2e} dinf {dinf:.2e}")
        merit = max(gap, pinf, dinf)
        if best is None or merit < best[0]:
            best = (merit, [x.copy() for x in X], y.copy(), [z.copy() for z in Z], it)
        if gap <= gap_tol and pinf <= feas_tol and dinf <= feas_tol:
            status = OPTIMAL
            break
        if abs(dobj) > 1e12 or abs(pobj) > 1e12:
            status = INFEASIBLE
            break
        if it == max_iter:
            break
        try:
            scal = [_nt_scaling(x, z) for x, z in zip(X, Z)]
        except np.linalg.LinAlgError as exc:
            raise SdpNumericalError(f"iterate lost definiteness: {exc}") from exc
        W = [s[2] for s in scal]
        fac = _Factor(_schur(A, W, m))

        def direction(Rc):
            WRdW = [w @ r @ w for w, r in zip(W, Rd)]
            rhs = rp - opA([rc - t for rc, t in zip(Rc, WRdW)])
            dy = fac.solve(rhs)
            Atdy = opAt(dy)
            dZ = [r - a for r, a in zip(Rd, Atdy)]
            dZ = [0.5 * (d + d.T) for d in dZ]
            dX = [rc - w @ d @ w for rc, w, d in zip(Rc, W, dZ)]
            dX = [0.5 * (d + d.T) for d in dX]
            return dX, dy, dZ

        def steps(dX, dZ, gamma):
            ap = min(1.0, gamma * min(_max_step(x, d) for x, d in zip(X, dX)))
            ad = min(1.0, gamma * min(_max_step(z, d) for z, d in zip(Z, dZ)))
            return ap, ad

        try:
            # predictor
            dX, dy, dZ = direction([-x for x in X])
            ap, ad = steps(dX, dZ, 1.0)
            mu_aff = _inner([x + ap * d for x, d in zip(X, dX)], [z + ad * d for z, d in zip(Z, dZ)]) / N
            sigma = min(1.0, max(0.0, (mu_aff / mu) ** 3)) if mu > 0 else 0.0
            # corrector in the scaled space
            Rc = []
            for (G, lam, _), x, z, ddx, ddz in zip(scal, X, Z, dX, dZ):
                Ginv = np.linalg.inv(G)
                dXt = Ginv @ ddx @ Ginv.T
                dZt = G.T @ ddz @ G
                rhs = 2 * sigma * mu * np.eye(len(lam)) - 2 * np.diag(lam**2) - (dXt @ dZt + dZt @ dXt)
                Rt = rhs / (lam[:, None] + lam[None, :])
                Rc.append(G @ Rt @ G.T)
            dX, dy, dZ = direction(Rc)
            ap, ad = steps(dX, dZ, 0.98)
        except np.linalg.LinAlgError as exc:
            raise SdpNumericalError(f"linear algebra failure: {exc}") from exc
        X = [x + ap * d for x, d in zip(X, dX)]
        X = [0.5 * (x + x.T) for x in X]
        y = y + ad * dy
        Z = [z + ad * d for z, d in zip(Z, dZ)]
        Z = [0.5 * (z + z.T) for z in Z]
        if max(ap, ad) < 1e-12:
            break

    if status != OPTIMAL and best is not None and status != INFEASIBLE:
        _, X, y, Z, _ = best
    # undo scaling and reinsert dropped rows
    y_full = np.zeros(p.m)
    y_full[keep] = y / norms
    y_out = sgn * y_full
    Z_out = Z
    sol = SdpSolution(X, y_out, Z_out, np.nan, np.nan, np.nan, np.nan, np.nan, it, status, history)
    rep = check_kkt(p, sol)
    sol.primal_objective = rep.primal_objective
    sol.dual_objective = rep.dual_objective
    sol.gap = rep.gap
    sol.primal_residual = rep.primal_residual
    sol.dual_residual = rep.dual_residual
    return sol
