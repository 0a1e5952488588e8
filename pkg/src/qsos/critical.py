"""Semi-analytic leading-order SoS solutions for critical models.

Covers the lattice vector model (self-consistent mass), its Gaussian
variational contrast, the complete-graph transverse-field Ising model at
degree 2, and the hypercubic transverse-field Ising model in the
translation-invariant odd-sector ansatz.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.linalg as sla

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class CriticalError(ValueError):
    pass


def golden_min(f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-10, max_iter: int = 500):
    """Golden-section minimization of a unimodal f on [lo, hi]; returns (x, f(x))."""
    a, b = lo, hi
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= tol * max(1.0, abs(a) + abs(b)):
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def expand_bracket(f: Callable[[float], float], lo: float, hi: float, grow: float = 2.0, limit: float = 1e8) -> float:
    """Push hi upward until f(hi) exceeds f at the midpoint (minimizer is inside)."""
    while hi - lo < limit:
        mid = 0.5 * (lo + hi)
        if f(hi) > f(mid):
            return hi
        hi = lo + (hi - lo) * grow
    raise CriticalError("could not bracket the minimum")


def bisect(g: Callable[[float], float], lo: float, hi: float, tol: float = 1e-13, max_iter: int = 300) -> float:
    glo = g(lo)
    ghi = g(hi)
    if glo * ghi > 0:
        raise CriticalError("root is not bracketed")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        if gm == 0 or hi - lo < tol * max(1.0, abs(mid)):
            return mid
        if (gm > 0) == (glo > 0):
            lo, glo = mid, gm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def lattice_cos_sum(L: int, dim: int) -> np.ndarray:
    """sum_mu cos p_mu over all L^dim momenta p = 2 pi k / L."""
    c = np.cos(2 * np.pi * np.arange(L) / L)
    S = np.zeros([L] * dim)
    for mu in range(dim):
        shape = [1] * dim
        shape[mu] = L
        S = S + c.reshape(shape)
    return S.ravel()


# ---------------------------------------------------------------------------
# vector model


@dataclass
class VectorModelParams:
    d: int = 1
    L: int = 1
    J: float = 0.0
    V: float = 0.5
    N: int = 1

    def __post_init__(self):
        if self.L < 1 or self.d < 1:
            raise CriticalError("L and d must be positive")
        if self.V <= 0:
            raise CriticalError("V must be positive")


@dataclass
class KappaSolution:
    kappa: float
    s: float
    energy_bound: float
    omega: np.ndarray
    residual: float


def _modes(p: VectorModelParams) -> np.ndarray:
    if p.L == 1 or p.J == 0:
        return np.zeros(p.L**p.d) if p.L > 1 else np.zeros(1)
    return lattice_cos_sum(p.L, p.d)


def _omega(p: VectorModelParams, kappa: float, S: np.ndarray) -> np.ndarray:
    w2 = kappa + 2 * p.J * S
    if np.any(w2 <= 0):
        raise CriticalError("mode frequency squared is not positive")
    return np.sqrt(w2)


def _q2(p: VectorModelParams, kappa: float, S: np.ndarray) -> float:
    return float(np.mean(1.0 / (2.0 * _omega(p, kappa, S))))


def kappa_floor(p: VectorModelParams) -> float:
    S = _modes(p)
    return float(np.max(-2 * p.J * S))


def sos_vector_bound(p: VectorModelParams, s: float) -> float:
    """Per-site SoS lower bound from the tangent inequality at s (kappa = 2V(s-1))."""
    S = _modes(p)
    kappa = 2 * p.V * (s - 1)
    w2 = kappa + 2 * p.J * S
    if np.any(w2 <= 0):
        return -np.inf
    return float(np.mean(np.sqrt(w2)) / 2 + p.V / 2 * (1 - s * s))


def solve_vector_model(p: VectorModelParams) -> KappaSolution:
    """Self-consistent kappa = 2V(<q^2>(kappa) - 1) by bracketed bisection."""
    S = _modes(p)
    k0 = kappa_floor(p)
    g = lambda k: 2 * p.V * (_q2(p, k, S) - 1.0) - k
    # g -> +inf as kappa -> floor (zero mode diverges) and -> -inf for large kappa
    lo = k0 + max(1e-14, 1e-14 * abs(k0))
    while not np.isfinite(g(lo)) or g(lo) <= 0:
        lo = k0 + (lo - k0) * 0.1
        if lo - k0 < 1e-300:
            raise CriticalError("no self-consistent root in the physical bracket")
    hi = max(1.0, 2 * abs(k0) + 1.0)
    while g(hi) >= 0:
        hi *= 2
        if hi > 1e15:
            raise CriticalError("no self-consistent root in the physical bracket")
    kappa = bisect(g, lo, hi, tol=1e-16)
    s = _q2(p, kappa, S)
    omega = _omega(p, kappa, S)
    bound = float(np.mean(omega) / 2 + p.V / 2 * (1 - s * s))
    return KappaSolution(kappa, s, bound, omega, abs(kappa / 2 - p.V * (s - 1)))


def variational_vector_energy(p: VectorModelParams, kappa: float | None = None):
    """Per-site <H> in the Gaussian ground state of H_Gaussian(kappa).

    With kappa given, returns that energy; otherwise minimizes over kappa and
    returns (kappa, energy).
    """
    S = _modes(p)

    def energy(k):
        om = _omega(p, k, S)
        s = float(np.mean(1.0 / (2 * om)))
        return float(np.mean(om) / 2 - k / 2 * s + p.V / 2 * (3 * s * s - 2 * s + 1))

    if kappa is not None:
        return energy(kappa)
    k0 = kappa_floor(p)
    lo = k0 + 1e-9 * max(1.0, abs(k0))
    hi = expand_bracket(energy, lo, lo + 1.0)
    k, e = golden_min(energy, lo, hi, tol=1e-12)
    return k, e


def finite_difference_ground_energy(V: float, points: int = 2001, box: float = 6.0) -> float:
    """Single-site p^2/2 + (V/2)(q^2-1)^2 by second-order finite differences."""
    x = np.linspace(-box, box, points)
    h = x[1] - x[0]
    diag = 1.0 / h**2 + V / 2 * (x**2 - 1) ** 2
    off = np.full(points - 1, -0.5 / h**2)
    w = sla.eigvalsh_tridiagonal(diag, off, select="i", select_range=(0, 0))
    return float(w[0])


# ---------------------------------------------------------------------------
# complete-graph TFIM


@dataclass
class MeanFieldSolution:
    a: float
    a_prime: float
    b: float
    lam: float
    n: int
    h: float


def tfim_meanfield_sos(n: int, h: float) -> MeanFieldSolution:
    """Degree-2 SoS bound for -(1/2n) sum_{i,j} Z_i Z_j - h sum_i X_i.

    Odd-sector ansatz: a^2 = a'^2 - 1/2 and (a + (n-1) a') b = h n / 2; the
    returned lam includes the -1/2 from the i = j terms.
    """
    if n < 2 or h < 0:
        raise CriticalError("need n >= 2 and h >= 0")

    def cost(ap):
        a = math.sqrt(max(ap * ap - 0.5, 0.0))
        b = h * n / (2 * (a + (n - 1) * ap))
        return b * b * n + ap * ap * (n - 1) + a * a

    lo = math.sqrt(0.5)
    hi = expand_bracket(cost, lo, lo + 1.0)
    ap, c = golden_min(cost, lo, hi, tol=1e-12)
    a = math.sqrt(max(ap * ap - 0.5, 0.0))
    b = h * n / (2 * (a + (n - 1) * ap))
    return MeanFieldSolution(a, ap, b, -c - 0.5, n, h)


# ---------------------------------------------------------------------------
# hypercubic TFIM


@dataclass
class Tfim3dSolution:
    c: float
    m2: float
    b: float
    energy_density: float
    h: float
    L: int
    dim: int
    at_boundary: bool
    residual: float


def _abar(S: np.ndarray, c: float) -> float:
    return float(np.mean(np.sqrt(np.maximum(c - S, 0.0))))


def tfim3d_sos(L: int, h: float, dim: int = 3, tol: float = 1e-10) -> Tfim3dSolution:
    """Minimize b^2 + c with a(p)^2 = c - sum cos p and (1/n) sum_p a(p) b = h.

    The cross terms of (aZ + ibY)^dag (aZ + ibY) produce 2ab X, so this is the
    degree-2 bound per site for tfim_lattice(L, 2h, dim).
    """
    if L < 2:
        raise CriticalError("L must be at least 2")
    S = lattice_cos_sum(L, dim)
    d = float(dim)
    f = lambda c: h * h / _abar(S, c) ** 2 + c
    hi = expand_bracket(f, d, d + 1.0)
    c, _ = golden_min(f, d, hi, tol=tol)
    ab = _abar(S, c)
    b = h / ab
    at_boundary = (c - d) <= 10 * tol * max(1.0, d)
    return Tfim3dSolution(
        c=c, m2=2 * (c - d), b=b, energy_density=-(b * b + c), h=h, L=L, dim=dim,
        at_boundary=at_boundary, residual=abs(ab * b - h),
    )


def boundary_flag(L: int, h: float, dim: int = 3) -> bool:
    """True when the objective with the zero mode removed is minimized at c = dim.

    The zero mode makes the derivative at the boundary diverge on any finite
    lattice, so the transition is located on the regular part of the sum.
    """
    S = lattice_cos_sum(L, dim)
    S = S[S < dim - 1e-12]
    n = S.size + 1
    x = dim - S
    abar = np.sum(np.sqrt(x)) / n
    dabar = np.sum(0.5 / np.sqrt(x)) / n
    return 1.0 - 2.0 * h * h * dabar / abar**3 >= 0.0


@dataclass
class CriticalScan:
    h_cr: float
    exponent: float
    h: np.ndarray
    m: np.ndarray
    solutions: list


def locate_hcr(L: int, dim: int = 3, lo: float = 0.0, hi: float = 100.0, tol: float = 1e-12) -> float:
    if not boundary_flag(L, lo, dim) or boundary_flag(L, hi, dim):
        raise CriticalError("h bracket does not straddle the transition")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if boundary_flag(L, mid, dim):
            lo = mid
        else:
            hi = mid
        if hi - lo < tol:
            break
    return 0.5 * (lo + hi)


def critical_scan(
    L: int,
    h_grid: Sequence[float] | None = None,
    dim: int = 3,
    window: tuple[float, float] = (0.1, 1.0),
    points: int = 12,
) -> CriticalScan:
    """Locate h_cr and fit log m against log(h - h_cr) over a window above h_cr.

    With an explicit h_grid the points above h_cr inside the window are used.
    """
    if h_grid is not None:
        hg = np.asarray(h_grid, dtype=float)
        lo, hi = float(hg.min()), float(hg.max())
        if boundary_flag(L, hi, dim) or not boundary_flag(L, lo, dim):
            raise CriticalError("h grid does not straddle the transition")
        h_cr = locate_hcr(L, dim, lo, hi)
        dh = hg - h_cr
        sel = hg[(dh >= window[0]) & (dh <= window[1])]
    else:
        h_cr = locate_hcr(L, dim)
        sel = h_cr + np.geomspace(window[0], window[1], points)
    if sel.size < 3:
        raise CriticalError("fit window holds fewer than three points")
    sols = [tfim3d_sos(L, float(h), dim) for h in sel]
    m = np.sqrt(np.array([s.m2 for s in sols]))
    slope = float(np.polyfit(np.log(sel - h_cr), np.log(m), 1)[0])
    return CriticalScan(h_cr, slope, sel, m, sols)


def meanfield_mass_exponent(n: int, h_values: Sequence[float]) -> float:
    """Log-log slope of the zero-momentum coefficient a against h - 1 (paramagnetic side)."""
    hv = np.asarray(h_values, dtype=float)
    a = np.array([tfim_meanfield_sos(n, float(h)).a for h in hv])
    return float(np.polyfit(np.log(hv - 1.0), np.log(a), 1)[0])
