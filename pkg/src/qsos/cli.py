"""Command-line driver: one subcommand per experiment, JSON config in, JSON or CSV out."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 2, 3


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    subcommand: str
    params: dict
    seed: int
    output: str = "-"
    format: str = "json"
    threads: int = 1
    extra: dict = field(default_factory=dict)

    def header(self) -> dict:
        return {"subcommand": self.subcommand, "seed": self.seed, "format": self.format, "params": self.params}


# ---------------------------------------------------------------------------
# serialization


def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (complex, np.complexfloating)):
        return {"re": _plain(float(x.real)), "im": _plain(float(x.imag))}
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "NaN"
        if math.isinf(x):
            return "Infinity" if x > 0 else "-Infinity"
        return x
    return x


def _fmt(v) -> str:
    v = _plain(v)
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (dict, list)):
        return json.dumps(v, separators=(",", ":"))
    return str(v)


def emit(cfg: RunConfig, results: dict, rows: list | None = None, columns: list | None = None) -> str:
    """Serialize results with the run header; floats use the shortest round-trip form."""
    if cfg.format == "json":
        doc = {"config": cfg.header(), "results": results}
        if rows is not None:
            doc["rows"] = rows
        text = json.dumps(_plain(doc), indent=2) + "\n"
    else:
        buf = io.StringIO()
        buf.write("# qsos " + cfg.subcommand + "\n")
        buf.write("# config " + json.dumps(_plain(cfg.header()), separators=(",", ":")) + "\n")
        if rows is None:
            rows = [{k: v for k, v in results.items() if not isinstance(v, (list, dict, np.ndarray))}]
        cols = list(columns) if columns else list(rows[0].keys()) if rows else []
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            w.writerow([_fmt(r.get(c, "")) for c in cols])
        text = buf.getvalue()
    if cfg.output in ("-", ""):
        sys.stdout.write(text)
    else:
        with open(cfg.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text


# ---------------------------------------------------------------------------
# subcommands: (flags, runner). Each flag is (name, type, default, help).

FERMION_MODELS = ("toy4", "quartic-fermion")


def _floats(s) -> list:
    if isinstance(s, (list, tuple)):
        return [float(v) for v in s]
    return [float(v) for v in str(s).split(",") if v.strip()]


def _ints(s) -> list:
    if isinstance(s, (list, tuple)):
        return [int(v) for v in s]
    return [int(v) for v in str(s).split(",") if v.strip()]


def _model(p: dict, seed: int):
    from .models import ModelSpec, build_hamiltonian

    name = p["model"]
    table = {
        "two-qubit": {"g": p["g"]},
        "toy4": {"eps": p["eps"]},
        "tfim-meanfield": {"n": p["n"], "h": p["h"]},
        "tfim3d": {"L": p["L"], "h": p["h"]},
        "syk": {"n": p["n"], "q": 4, "seed": seed},
        "quartic-fermion": {"n": p["n"], "seed": seed, "eps": p["eps"], "symmetric": True},
    }
    if name not in table:
        raise ConfigError(f"unknown model {name!r}; choose from {sorted(table)}")
    return build_hamiltonian(ModelSpec(name, table[name]))


def _degree_to_r(degree: int) -> int:
    if degree < 2 or degree % 2:
        raise ConfigError("degree must be an even integer >= 2")
    return degree // 2


MODEL_FLAGS = [
    ("model", str, "two-qubit", "two-qubit | toy4 | tfim-meanfield | tfim3d | syk | quartic-fermion"),
    ("g", float, 1.0, "two-qubit coupling"),
    ("eps", float, 1.0, "pairing / perturbation strength"),
    ("n", int, 4, "sites, modes or Majoranas (model dependent)"),
    ("h", float, 1.0, "transverse field"),
    ("L", int, 2, "linear lattice size"),
]


def run_sos_bound(p: dict, cfg: RunConfig):
    from .sos import GENERAL, RESTRICTED, extract_certificate, fermion_parity, lower_bound

    H = _model(p, cfg.seed)
    r = _degree_to_r(p["degree"])
    mode = {"general": GENERAL, "restricted": RESTRICTED}.get(p["mode"])
    if mode is None:
        raise ConfigError("mode must be general or restricted")
    sym = [fermion_parity()] if p["model"] in FERMION_MODELS else None
    lam, sol, mp = lower_bound(H, r, mode, symmetry=sym, gap_tol=p["gap_tol"], feas_tol=p["gap_tol"])
    out = {"bound": lam, "degree": p["degree"], "mode": p["mode"]}
    if sol is not None:
        out.update(status=sol.status, gap=sol.gap, iterations=sol.iterations)
        if p["certificate"]:
            cert = extract_certificate(mp, sol)
            out["certificate_residual"] = cert.residual
            out["certificate_squares"] = len(cert.squares)
    return out, None, None


def run_rank_report(p: dict, cfg: RunConfig):
    from .sos import moment_rank_report, zero_count_formula

    if p["model"] not in FERMION_MODELS:
        raise ConfigError("rank-report needs a fermion model")
    H = _model(p, cfg.seed)
    rep = moment_rank_report(H, p["r"], p["state_source"], p["zero_tol"])
    return {
        "zero_eigenvalues": rep.zero_count,
        "sector_zero_counts": rep.sector_zero_counts,
        "sector_sizes": rep.sector_sizes,
        "zero_count_formula": zero_count_formula(H.n, p["r"]),
        "eigenvalues": rep.eigenvalues,
    }, None, None


def run_pt_check(p: dict, cfg: RunConfig):
    from .models import quartic_fermion, symmetric_quartic_instance
    from .sos import charge_rotation, fermion_parity, mode_translation, pt_order_check

    E, V = symmetric_quartic_instance(p["n"], cfg.seed)
    sym = [fermion_parity(), charge_rotation(p["n"]), mode_translation(p["n"])]
    res = pt_order_check(lambda e: quartic_fermion(E, V, e), _degree_to_r(p["degree"]), _floats(p["eps_grid"]), symmetry=sym)
    rows = [{"eps": e, "error": er, "bound": b, "energy": en} for e, er, b, en in zip(res.eps, res.errors, res.bounds, res.energies)]
    return {"slope": res.slope if res.slope is not None else "exact", "exact": res.exact}, rows, ["eps", "error", "bound", "energy"]


def run_afqmc_sign(p: dict, cfg: RunConfig):
    from .afqmc import CSV_COLUMNS, decompose, sign_decay
    from .models import toy4
    from .spectra import extremal_eigs

    H = toy4(p["eps"])
    d = decompose(H, split=p["split"])
    e0 = extremal_eigs(H, "min").emin
    rows = []
    for beta in _floats(p["betas"]):
        r = sign_decay(d, beta, p["tau"], p["samples"], cfg.seed, e0=e0, rel_tol=p["rel_tol"])
        row = r.csv_row()
        row.update(rate=r.rate, rate_stderr=r.rate_stderr, starved=r.starved)
        rows.append(row)
    cols = list(CSV_COLUMNS) + ["rate", "rate_stderr", "starved"]
    return {"lambda": d.lam, "e0": e0, "n_squares": len(d.Qa), "decomposition_residual": d.residual}, rows, cols


def run_vector_model(p: dict, cfg: RunConfig):
    from .critical import VectorModelParams, finite_difference_ground_energy, solve_vector_model, variational_vector_energy

    vp = VectorModelParams(p["d"], p["L"], p["J"], p["V"], p["N"])
    sol = solve_vector_model(vp)
    k_var, e_var = variational_vector_energy(vp)
    out = {"kappa": sol.kappa, "s": sol.s, "energy_bound": sol.energy_bound, "residual": sol.residual, "variational_energy": e_var, "variational_kappa": k_var}
    if vp.L == 1:
        out["finite_difference_energy"] = finite_difference_ground_energy(vp.V)
    return out, None, None


def run_tfim_scan(p: dict, cfg: RunConfig):
    from .critical import critical_scan

    sc = critical_scan(p["L"], dim=p["dim"], window=(p["window_lo"], p["window_hi"]), points=p["points"])
    rows = [{"h": h, "m": m, "energy_density": s.energy_density} for h, m, s in zip(sc.h, sc.m, sc.solutions)]
    return {"h_cr": sc.h_cr, "exponent": sc.exponent}, rows, ["h", "m", "energy_density"]


def run_syk_norms(p: dict, cfg: RunConfig):
    from .syk import norm_scaling

    seeds = [cfg.seed + s for s in range(p["seeds"])]
    res = norm_scaling(_ints(p["ns"]), seeds, p["q"])
    return {"n": res["n"], "mean_norm": res["mean_norm"], "slopes": res["slopes"]}, res["rows"], ["n", "seed", "p", "norm"]


def run_syk_gaussian(p: dict, cfg: RunConfig):
    from .syk import gaussian_vs_spectrum

    seeds = [cfg.seed + s for s in range(p["seeds"])]
    with ThreadPoolExecutor(max_workers=cfg.threads) as ex:
        rows = list(ex.map(lambda s: gaussian_vs_spectrum(p["n"], p["samples"], s), seeds))
    return {"max_ratio": max(r["ratio"] for r in rows)}, rows, ["n", "seed", "max_gaussian_energy", "lambda_max", "ratio"]


def run_syk_lanczos(p: dict, cfg: RunConfig):
    from .syk import excitation_lanczos

    tr = excitation_lanczos(p["modes"], p["steps"], cfg.seed)
    rows = [{"k": k, "ritz_max": r, "ratio": q, "support_leak": tr.support_leak[k] if k < len(tr.support_leak) else ""} for k, (r, q) in enumerate(zip(tr.ritz_max, tr.ratio))]
    return {"lambda_max": tr.lambda_max, "start_energy": tr.start_energy, "converged_at": tr.converged_at}, rows, ["k", "ritz_max", "ratio", "support_leak"]


def run_nonlocal_z(p: dict, cfg: RunConfig):
    from . import nonlocal_time as nt

    kind = p["model"]
    if kind == "single-qubit":
        m = nt.single_qubit_model(p["V"], p["tau0"], p["beta"])
    elif kind == "two-qubit":
        m = nt.two_qubit_model(p["V"], p["tau0"], p["beta"])
    elif kind == "oscillator":
        m = nt.step_model(p["V"], p["eps"], p["omega"], p["beta"])
    else:
        raise ConfigError("model must be single-qubit, two-qubit or oscillator")
    out = nt.logZ_series(m).to_json()
    rows = None
    if kind == "oscillator" and p["g_grid"]:
        gs = _floats(p["g_grid"])
        with ThreadPoolExecutor(max_workers=cfg.threads) as ex:
            zs = list(ex.map(lambda g: nt.embedded_Z(m, g, p["n_max"], p["steps"]), gs))
        rows = [{"g": g, "Z": z} for g, z in zip(gs, zs)]
    return out, rows, ["g", "Z"]


SUBCOMMANDS = {
    "sos-bound": (MODEL_FLAGS + [
        ("degree", int, 2, "moment degree 2r"),
        ("mode", str, "general", "general | restricted"),
        ("gap_tol", float, 1e-8, "solver duality-gap tolerance"),
        ("certificate", bool, False, "extract and check an SoS certificate"),
    ], run_sos_bound, "SoS lower bound on the ground energy"),
    "rank-report": ([(n, t, "toy4" if n == "model" else d, h) for n, t, d, h in MODEL_FLAGS] + [
        ("r", int, 2, "monomial degree"),
        ("state_source", str, "exact_ground_state", "exact_ground_state | sdp"),
        ("zero_tol", float, 1e-7, "eigenvalue threshold counted as zero"),
    ], run_rank_report, "zero eigenvalues of the fermion moment matrix"),
    "pt-check": ([
        ("n", int, 7, "fermion modes of the seeded quartic instance"),
        ("degree", int, 4, "moment degree 2r"),
        ("eps_grid", str, "0.05,0.1,0.2,0.4", "comma-separated perturbation strengths"),
    ], run_pt_check, "bound error against perturbation strength"),
    "afqmc-sign": ([
        ("eps", float, 1.0, "toy4 pairing strength"),
        ("betas", str, "4", "comma-separated inverse temperatures"),
        ("tau", float, 0.05, "time step"),
        ("samples", int, 10000, "field trajectories per beta"),
        ("split", str, "absorb", "absorb | shift"),
        ("rel_tol", float, 0.5, "relative standard error above which a run is flagged starved"),
    ], run_afqmc_sign, "sign decay of the auxiliary-field weights"),
    "vector-model": ([
        ("d", int, 1, "lattice dimension"),
        ("L", int, 1, "linear size"),
        ("J", float, 0.0, "hopping"),
        ("V", float, 0.5, "quartic coupling"),
        ("N", int, 1, "vector components"),
    ], run_vector_model, "large-N vector model self-consistency"),
    "tfim-scan": ([
        ("L", int, 32, "linear size"),
        ("dim", int, 3, "lattice dimension"),
        ("window_lo", float, 0.1, "smallest h - h_cr in the fit"),
        ("window_hi", float, 1.0, "largest h - h_cr in the fit"),
        ("points", int, 12, "fit points"),
    ], run_tfim_scan, "critical scan of the hypercubic TFIM bound"),
    "syk-norms": ([
        ("ns", str, "16,32,64", "comma-separated Majorana counts"),
        ("seeds", int, 5, "seeds per n, counted from --seed"),
        ("q", int, 4, "interaction order"),
    ], run_syk_norms, "matricized SYK coupling norms"),
    "syk-gaussian": ([
        ("n", int, 12, "Majorana count"),
        ("samples", int, 200, "Gaussian states per seed"),
        ("seeds", int, 5, "seeds, counted from --seed"),
    ], run_syk_gaussian, "best Gaussian energy against lambda_max"),
    "syk-lanczos": ([
        ("modes", int, 13, "fermion modes (Majoranas / 2)"),
        ("steps", int, 6, "Lanczos steps"),
    ], run_syk_lanczos, "Lanczos from a Gaussian start state"),
    "nonlocal-z": ([
        ("model", str, "single-qubit", "single-qubit | two-qubit | oscillator"),
        ("V", float, 1.0, "qubit splitting"),
        ("tau0", float, 10.0, "delta-comb offset"),
        ("beta", float, 100.0, "inverse temperature"),
        ("eps", float, 1.0, "oscillator frequency"),
        ("omega", float, 0.0, "kernel phase frequency"),
        ("g_grid", str, "", "comma-separated g values for the embedded partition function"),
        ("n_max", int, 4, "oscillator truncation"),
        ("steps", int, 400, "Trotter steps"),
    ], run_nonlocal_z, "log Z series of time-nonlocal models"),
}


def _flag(name: str) -> str:
    return "--" + name.replace("_", "-")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qsos", description="Sum-of-squares moment hierarchy experiments.")
    sub = ap.add_subparsers(dest="subcommand", metavar="SUBCOMMAND")
    for name, (flags, _, help_) in SUBCOMMANDS.items():
        sp = sub.add_parser(name, help=help_, description=help_)
        sp.add_argument("--config", default=None, help="JSON file of parameters; flags override it")
        sp.add_argument("--seed", type=int, default=None, help="seed (falls back to $QSOS_SEED, then 0)")
        sp.add_argument("--output", default=None, help="output path, '-' for stdout (default -)")
        sp.add_argument("--format", choices=("json", "csv"), default=None, help="output format (default json)")
        sp.add_argument("--threads", type=int, default=None, help="worker threads for scans (default 1)")
        for fname, typ, default, h in flags:
            if typ is bool:
                sp.add_argument(_flag(fname), dest=fname, action="store_const", const=True, default=None, help=f"{h} (default {default})")
            else:
                sp.add_argument(_flag(fname), dest=fname, type=typ, default=None, help=f"{h} (default {default})")
    return ap


COMMON = ("seed", "output", "format", "threads")


def resolve(args: argparse.Namespace) -> tuple[RunConfig, dict]:
    """Defaults, then config file, then flags."""
    flags, _, _ = SUBCOMMANDS[args.subcommand]
    types = {n: t for n, t, _, _ in flags}
    params = {n: d for n, _, d, _ in flags}
    common = {"seed": None, "output": "-", "format": "json", "threads": 1}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                file_cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        if not isinstance(file_cfg, dict):
            raise ConfigError("config must be a JSON object")
        file_cfg = dict(file_cfg.get("params", file_cfg)) | {k: v for k, v in file_cfg.items() if k in COMMON}
        for k, v in file_cfg.items():
            k = k.replace("-", "_")
            if k in COMMON:
                common[k] = v
            elif k in types:
                try:
                    params[k] = v if isinstance(v, (list, bool)) else types[k](v)
                except (TypeError, ValueError) as exc:
                    raise ConfigError(f"bad value for {k}: {v!r}") from exc
            elif k != "subcommand":
                raise ConfigError(f"unknown config key {k!r}")
    for k in types:
        v = getattr(args, k, None)
        if v is not None:
            params[k] = v
    for k in COMMON:
        v = getattr(args, k, None)
        if v is not None:
            common[k] = v
    if common["seed"] is None:
        env = os.environ.get("QSOS_SEED")
        try:
            common["seed"] = int(env) if env not in (None, "") else 0
        except ValueError as exc:
            raise ConfigError("QSOS_SEED must be an integer") from exc
    if common["format"] not in ("json", "csv"):
        raise ConfigError("format must be json or csv")
    if int(common["threads"]) < 1:
        raise ConfigError("threads must be positive")
    cfg = RunConfig(args.subcommand, params, int(common["seed"]), str(common["output"]), common["format"], int(common["threads"]))
    return cfg, params


def run(argv: list[str] | None = None) -> int:
    from .sdp import SdpNumericalError
    from .sos import CertificateError

    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    if args.subcommand is None:
        ap.print_usage(sys.stderr)
        return EXIT_INVALID
    try:
        cfg, params = resolve(args)
        _, runner, _ = SUBCOMMANDS[cfg.subcommand]
        results, rows, cols = runner(params, cfg)
        emit(cfg, results, rows, cols)
    except (SdpNumericalError, CertificateError, np.linalg.LinAlgError, ArithmeticError, OSError) as exc:
        print(f"qsos: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, KeyError, TypeError) as exc:
        print(f"qsos: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
