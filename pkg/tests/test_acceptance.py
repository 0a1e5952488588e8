"""Acceptance criteria. Each test prints one PASS/FAIL line; the lines are
collected and repeated in the pytest terminal summary by conftest.py."""
from __future__ import annotations

import itertools
import math
import time

import numpy as np

import oracles as O
from qsos.afqmc import decompose, sign_decay
from qsos.algebra import FERMION, MAJORANA, OperatorPolynomial, number, to_majorana
from qsos.critical import (
    VectorModelParams,
    critical_scan,
    finite_difference_ground_energy,
    solve_vector_model,
    tfim_meanfield_sos,
    variational_vector_energy,
)
from qsos.models import quartic_fermion, symmetric_quartic_instance, tfim_meanfield, toy4, two_qubit
from qsos.nonlocal_time import (
    embedded_logz_coefficients,
    embedded_Z,
    logZ_series,
    single_qubit_model,
    step_model,
    two_qubit_model,
)
from qsos.sdp import OPTIMAL, SdpProblem, solve
from qsos.sos import (
    RESTRICTED,
    charge_rotation,
    extract_certificate,
    fermion_parity,
    lower_bound,
    mode_translation,
    moment_rank_report,
    pt_order_check,
    zero_count_formula,
)
from qsos.spectra import extremal_eigs
from qsos.syk import (
    balanced_coloring_exists,
    euler_color,
    gaussian_vs_spectrum,
    norm_scaling,
    pairing_sum,
    pfaffian,
    q6_triangle,
    random_pairing_graph,
    random_pure_gaussian,
    wick_expectation,
)

RESULTS: list[str] = []
GAPS: list[float] = []


def report(n: int, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}"
    print(line)
    RESULTS.append(line)
    assert ok, line


def solve_bound(H, r, **kw):
    lam, sol, mp = lower_bound(H, r, **kw)
    if sol is not None:
        GAPS.append(sol.gap)
    return lam, sol, mp


def test_criterion_01_two_qubit():
    t0 = time.perf_counter()
    worst_g = worst_r = 0.0
    for g in (0.5, 1.0, 2.0):
        worst_g = max(worst_g, abs(solve_bound(two_qubit(g), 1)[0] + 2 * math.sqrt(1 + g * g / 4)))
        worst_r = max(worst_r, abs(solve_bound(two_qubit(g), 1, mode=RESTRICTED)[0] + 2 + g))
    dt = time.perf_counter() - t0
    ok = worst_g <= 1e-6 and worst_r <= 1e-6 and dt < 1.0
    report(1, ok, f"general err {worst_g:.2e}, restricted err {worst_r:.2e} (tol 1e-6), {dt:.2f} s (< 1 s)")


def test_criterion_02_toy4():
    t0 = time.perf_counter()
    worst = worst_cert = 0.0
    for eps in (0.5, 1.0, 1.5):
        H = toy4(eps)
        lam, sol, mp = solve_bound(H, 2, symmetry=[fermion_parity()])
        worst = max(worst, abs(lam - (2 - math.sqrt(4 + eps * eps))))
        cert = extract_certificate(mp, sol)
        total = OperatorPolynomial.identity(MAJORANA, 4, cert.bound)
        for w, Oa in cert.squares:
            total = total + w * (Oa.adjoint() * Oa)
        diff = to_majorana(H) - total
        worst_cert = max(worst_cert, max((abs(v) for v in diff.terms.values()), default=0.0))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-6 and worst_cert <= 1e-5 and dt < 10.0
    report(2, ok, f"bound err {worst:.2e} (tol 1e-6), certificate residual {worst_cert:.2e} (tol 1e-5), {dt:.1f} s (< 10 s)")


def test_criterion_03_rank_counts():
    r0 = moment_rank_report(toy4(0.0), 2, zero_tol=1e-7)
    rp = [moment_rank_report(toy4(e), 2, zero_tol=1e-7) for e in (0.5, 1.0)]
    got = (r0.zero_count, [r.zero_count for r in rp], r0.sector_zero_counts["even"], [r.sector_zero_counts["even"] for r in rp])
    ok = got[0] == 26 and all(c == 18 for c in got[1]) and got[2] == 22 and all(c == 18 for c in got[3])
    report(3, ok, f"eps=0 total {got[0]} (want 26), eps>0 total {got[1]} (want 18), even {got[2]} vs {got[3]} (want 22 vs 18)")


def test_criterion_04_zero_count_formula():
    rows = []
    for n, r in ((3, 1), (4, 2), (5, 2)):
        H = OperatorPolynomial.zero(FERMION, n)
        for i in range(n):
            H = H + number(n, i)
        rows.append((n, r, moment_rank_report(H, r).zero_count, zero_count_formula(n, r)))
    ok = all(a == b for _, _, a, b in rows)
    report(4, ok, ", ".join(f"(n={n},r={r}) measured {a} formula {b}" for n, r, a, b in rows))


def test_criterion_05_meanfield():
    n = 200
    errs = []
    for h in (1.5, 2.0):
        errs.append(abs(tfim_meanfield_sos(n, h).lam / n + h))
    for h in (0.3, 0.7):
        errs.append(abs(tfim_meanfield_sos(n, h).lam / n + (1 + h * h) / 2))
    sdp_err = max(abs(tfim_meanfield_sos(6, h).lam - solve_bound(tfim_meanfield(6, h), 1)[0]) for h in (0.3, 0.7, 1.5, 2.0))
    ok = max(errs) <= 2 / n and sdp_err <= 1e-5
    report(5, ok, f"n=200 max per-site err {max(errs):.2e} (tol {2 / n:.0e}), closed form vs SDP at n=6 {sdp_err:.2e} (tol 1e-5)")


def test_criterion_06_critical_exponent():
    t0 = time.perf_counter()
    scan = critical_scan(32)
    dt = time.perf_counter() - t0
    ok = abs(scan.exponent - 1.0) <= 0.1 and dt < 120
    report(6, ok, f"h_cr {scan.h_cr:.6f}, exponent {scan.exponent:.3f} (want 1.0 +- 0.1), {dt:.1f} s (< 120 s)")


def test_criterion_07_vector_model():
    sol = solve_vector_model(VectorModelParams(V=1.0))
    rows = []
    for V in (0.5, 1.0, 2.0):
        p = VectorModelParams(V=V)
        rows.append((V, solve_vector_model(p).energy_bound, finite_difference_ground_energy(V), variational_vector_energy(p)[1]))
    ok = sol.residual <= 1e-10 and all(a <= b <= c for _, a, b, c in rows)
    detail = ", ".join(f"V={V}: {a:.5f} <= {b:.5f} <= {c:.5f}" for V, a, b, c in rows)
    report(7, ok, f"residual {sol.residual:.1e} (tol 1e-10); {detail}")


def test_criterion_08_afqmc_sign():
    t0 = time.perf_counter()
    H = toy4(1.0)
    d = decompose(H)
    e0 = extremal_eigs(H, "min").emin
    r = sign_decay(d, 4.0, 0.05, samples=100_000, seed=0, e0=e0)
    dt = time.perf_counter() - t0
    z = (r.rate - r.bound_rate) / r.rate_stderr
    ok = abs(z) <= 3 and r.mean_abs_weight >= abs(r.mean_weight) and dt < 300
    report(8, ok, f"rate {r.rate:.4f} +- {r.rate_stderr:.4f} vs E0-lam {r.bound_rate:.4f} ({z:+.2f} stderr, tol 3), {dt:.0f} s (< 300 s)")


def test_criterion_09_syk_norms():
    res = norm_scaling((16, 32, 64), range(5), 4)
    s = res["slopes"]
    want = {2: -1.0, 1: -0.5, 0: 0.0}
    ok = all(abs(s[p] - w) <= 0.25 for p, w in want.items())
    report(9, ok, f"slopes J22 {s[2]:.3f} (-1), J13 {s[1]:.3f} (-0.5), J04 {s[0]:.3f} (0), tol 0.25")


def dense_gaussian_state(B):
    n = B.shape[0]
    g = O.majorana_mats(n // 2)
    H = sum(0.25j * B[l, m] * g[l] @ g[m] for l in range(n) for m in range(n))
    return np.linalg.eigh(H)[1][:, 0], g


def test_criterion_10_wick():
    n = 4
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(20):
        st, _ = random_pure_gaussian(n, rng)
        psi, g = dense_gaussian_state(st.B)
        for length in range(7):
            for idx in itertools.product(range(n), repeat=length):
                M = np.eye(len(psi), dtype=complex)
                for i in idx:
                    M = M @ g[i]
                ref = np.vdot(psi, M @ psi)
                worst = max(worst, abs(wick_expectation(st, idx) - ref), abs(pairing_sum(st, idx) - ref))
    pf_worst = 0.0
    for half in range(1, 7):
        for _ in range(10):
            X = rng.standard_normal((2 * half, 2 * half))
            A = X - X.T
            pf_worst = max(pf_worst, abs(pfaffian(A) ** 2 - np.linalg.det(A)) / abs(np.linalg.det(A)))
    ok = worst <= 1e-8 and pf_worst <= 1e-8
    report(10, ok, f"Wick vs dense max err {worst:.1e} (tol 1e-8), Pf^2 vs det max rel err {pf_worst:.1e} (tol 1e-8)")


def test_criterion_11_euler():
    rng = np.random.default_rng(0)
    bad = 0
    for i in range(500):
        g = euler_color(random_pairing_graph(int(rng.integers(1, 11)), rng))
        counts = np.zeros((g.k, 2), dtype=int)
        for (a, b), c in zip(g.edges, g.colors):
            counts[a, c] += 1
            counts[b, c] += 1
        bad += int(not np.all(counts == 2))
    tri = q6_triangle()
    none = not balanced_coloring_exists(tri)
    ok = bad == 0 and none
    report(11, ok, f"{500 - bad}/500 graphs balanced, q=6 triangle balanced coloring exists: {not none} (want False)")


def test_criterion_12_gaussian_gap():
    ratios = [gaussian_vs_spectrum(12, 200, s)["ratio"] for s in range(5)]
    ok = max(ratios) < 0.7
    report(12, ok, f"max ratio over 5 seeds {max(ratios):.3f} (< 0.7)")


def test_criterion_13_nonlocal():
    t0 = time.perf_counter()
    s1 = logZ_series(single_qubit_model(1.0, 10.0, 100.0))
    s2 = logZ_series(two_qubit_model(1.0, 10.0, 100.0))
    m = step_model(1.0, 1.0, 0.0, 4.0)
    z0 = embedded_Z(m, 0.0, n_max=6, steps=400)
    zs = [embedded_Z(m, g, n_max=6, steps=400) for g in np.linspace(0.1, 1.0, 10)]
    _, c2e = embedded_logz_coefficients(m, n_max=6, steps=400)
    c2s = logZ_series(m).c2
    rel = abs(c2e - c2s) / abs(c2s)
    dt = time.perf_counter() - t0
    ok = (s1.c1 < 0 < s1.c2 and s1.c2 / abs(s1.c1) > 1e3 and s2.c2 < 0 and all(z <= z0 for z in zs)
          and rel <= 0.02 and dt < 60)
    report(13, ok, f"single c1 {s1.c1:.2e} c2 {s1.c2:.3f} ratio {s1.c2 / abs(s1.c1):.1e}; two-qubit c2 {s2.c2:.2f}; "
           f"Z(g) <= Z(0) {all(z <= z0 for z in zs)}; c2 embedded vs series rel {rel:.1e} (tol 0.02); {dt:.1f} s (< 60 s)")


def test_criterion_14_pt_order():
    E, V = symmetric_quartic_instance(7, 0)
    eps = [0.05, 0.1, 0.2, 0.4]
    sym = [fermion_parity(), charge_rotation(7), mode_translation(7)]
    r2 = pt_order_check(lambda e: quartic_fermion(E, V, e), 2, eps, symmetry=sym)
    r3 = pt_order_check(lambda e: quartic_fermion(E, V, e), 3, eps, symmetry=sym)
    # an exact degree-6 bound has no finite slope; it is steeper than any fit
    s3 = math.inf if r3.exact else r3.slope
    s2 = math.inf if r2.exact else r2.slope
    ok = s3 >= 2.8 and s2 <= 2.2
    report(14, ok, f"degree-6 slope {s3} (>= 2.8, max err {np.max(r3.errors):.1e}), degree-4 slope {s2:.3f} (<= 2.2)")


def brute_force_chord(C, A1, b0, b1, grid=400_001):
    """min <C, X> over real 2x2 PSD X with tr X = b0, <A1, X> = b1.

    X = (b0/2)(I + x sx + z sz) with x^2 + z^2 <= 1; the second constraint
    is a line in (x, z), scanned on a fine grid across the unit disk.
    """
    t = b0 / 2
    alpha, gamma = 2 * A1[0, 1] * t, (A1[0, 0] - A1[1, 1]) * t
    delta = b1 - t * np.trace(A1)
    nrm = math.hypot(alpha, gamma)
    p0 = np.array([alpha, gamma]) * delta / nrm**2
    if np.linalg.norm(p0) > 1:
        return math.inf
    d = np.array([-gamma, alpha]) / nrm
    half = math.sqrt(1 - p0 @ p0)
    s = np.linspace(-half, half, grid)
    x, z = p0[0] + s * d[0], p0[1] + s * d[1]
    vals = t * (np.trace(C) + 2 * C[0, 1] * x + (C[0, 0] - C[1, 1]) * z)
    return float(vals.min())


def test_criterion_15_sdp():
    rng = np.random.default_rng(1)
    dual_ok, worst = True, 0.0
    for _ in range(20):
        M = rng.standard_normal((2, 2))
        C = 0.5 * (M + M.T)
        M = rng.standard_normal((2, 2))
        A1 = 0.5 * (M + M.T)
        X0 = rng.standard_normal((2, 2))
        X0 = X0 @ X0.T + 0.1 * np.eye(2)
        b0, b1 = float(np.trace(X0)), float(np.sum(A1 * X0))
        s = solve(SdpProblem.from_dense([C], [[np.eye(2)], [A1]], [b0, b1]))
        worst = max(worst, abs(s.primal_objective - brute_force_chord(C, A1, b0, b1)))
        for h in s.history:
            lhs = h["pobj"] - h["dobj"]
            dual_ok &= h["xz"] >= -1e-12 and abs(lhs - h["xz"] - h["infeas_term"]) <= 1e-7 * (1 + abs(h["pobj"]))
    for H, r, sym in ((two_qubit(1.0), 1, None), (toy4(1.0), 2, [fermion_parity()])):
        solve_bound(H, r, symmetry=sym)
    gap_ok = all(g <= 1e-8 for g in GAPS)
    ok = dual_ok and worst <= 1e-4 and gap_ok and s.status == OPTIMAL
    report(15, ok, f"weak-duality identity on every iterate {dual_ok}; brute force max diff {worst:.1e} (tol 1e-4); "
           f"{len(GAPS)} moment solves max gap {max(GAPS):.1e} (tol 1e-8)")
