"""Command-line driver: ``quasilab <experiment> --config run.json``.

Each run writes ``<experiment>.csv`` and ``manifest.json`` into ``--out``.
Floats in CSV files use 17 significant digits, so identical inputs give
byte-identical CSV files.  The manifest records the echoed config, the
master seed, package versions and wall time.

Exit status: 0 success (or every Gordon check passed), 1 a Gordon check
was not met, 2 invalid config or a runtime fault.

Seeds: ``--seed`` (or ``mc.seed``) is the master seed.  Monte Carlo chunk
``i`` draws from child ``i`` of ``SeedSequence(seed)``; repetition ``r`` of
``measure-zero`` uses ``SeedSequence(seed).spawn(R)[r].generate_state(1)[0]``
as its own master seed.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import platform
import sys
import time
from fractions import Fraction
from pathlib import Path
from typing import Any, Sequence

import mpmath
import numpy as np
import scipy

from . import __version__
from .config import EXPERIMENTS, ExperimentConfig
from .errors import ConfigError, QuasilabError
from .freqcond import aeps_measure, aeps_series, d2_interleave, generic_seq_search
from .gordon import gordon_trend
from .lattice import assemble, disorder_hamiltonian, evolve, ipr, spectrum, write_eigenvectors
from .potential import (e_set_measure, estimate_kappa, f_set_measure, m_tau_level,
                        z_tau_measure)

EXIT_OK, EXIT_GORDON_FAIL, EXIT_FAULT = 0, 1, 2
TREND_COLUMNS = ("manifest", "tau", "tau_product", "rho_log", "threshold_log", "margin_log",
                 "passed", "rho_mode")


def fmt(value) -> str:
    """CSV cell text: ``%.17g`` floats, lowercase booleans, space-joined vectors."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating, Fraction)):
        return "%.17g" % float(value)
    if isinstance(value, (list, tuple, np.ndarray)):
        return " ".join(fmt(v) for v in value)
    return str(value)


def write_csv(path: Path | None, columns: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    text = buf.getvalue()
    if path is not None:
        path.write_text(text)
    return text


def _json_safe(obj):
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj) if abs(int(obj)) < 2**53 else str(int(obj))
    if isinstance(obj, (float, np.floating, Fraction)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)  # "inf", "-inf", "nan"
    return obj


def versions() -> dict:
    return {"quasilab": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__, "mpmath": mpmath.__version__}


# -- experiments --------------------------------------------------------------
# each returns (columns, rows, exit_status, extra manifest results)

def run_freq_search(cfg: ExperimentConfig, mc, out: Path):
    res = generic_seq_search(cfg.alpha(), cfg.target, cfg.budget)
    cand = res if res.found else res.best
    row = [res.found, cand.tau if cand else None,
           cand.score.lo if cand else None, cand.score.hi if cand else None,
           getattr(res, "searched", None)]
    return ("found", "tau", "score_lo", "score_hi", "searched"), [row], EXIT_OK, {}


def run_interleave(cfg: ExperimentConfig, mc, out: Path):
    a = cfg.alpha()
    res = d2_interleave(a[0], a[1], cfg.epsilon, cfg.depth)
    if res.found:
        row = [True, res.n, res.m, res.ratio]
    else:
        row = [False, res.best_pair[0], res.best_pair[1], res.best_ratio]
    return ("found", "n", "m", "ratio"), [row], EXIT_OK, {}


def run_measure_zero(cfg: ExperimentConfig, mc, out: Path):
    seeds = [mc.seed]
    if cfg.repetitions > 1:
        children = np.random.SeedSequence(mc.seed).spawn(cfg.repetitions)
        seeds = [int(c.generate_state(1)[0]) for c in children]
    series = aeps_series(cfg.epsilon, len(cfg.m), cfg.cutoff) if cfg.cutoff else None
    rows = []
    for rep, seed in enumerate(seeds):
        res = aeps_measure(cfg.m, cfg.epsilon, mc.with_seed(seed))
        est = res.estimate
        rows.append([rep, seed, cfg.m, cfg.epsilon, res.closed_form, est.value, est.low, est.high,
                     est.contains(res.closed_form), est.samples, cfg.cutoff,
                     series.partial if series else None, series.upper_bound if series else None])
    cols = ("repetition", "seed", "m", "epsilon", "closed_form", "estimate", "low", "high",
            "contains", "samples", "series_cutoff", "series_partial", "series_upper")
    return cols, rows, EXIT_OK, {"covered": sum(bool(r[8]) for r in rows), "repetitions": len(rows)}


def run_measure_probe(cfg: ExperimentConfig, mc, out: Path):
    f = cfg.potential_spec()
    cols = ("probe", "value", "low", "high", "exact", "samples")
    if cfg.probe == "f-set":
        est = f_set_measure(f, cfg.y, cfg.epsilon, mc)
        return cols, [["f-set", est.value, est.low, est.high, None, est.samples]], EXIT_OK, {}
    if cfg.probe == "e-set":
        est = e_set_measure(f, cfg.M, mc)
        return cols, [["e-set", est.value, est.low, est.high, est.exact, est.samples]], EXIT_OK, {}
    if cfg.probe == "kappa":
        k = estimate_kappa(f, cfg.epsilon, cfg.eta, mc)
        return cols, [["kappa", k, None, None, None, mc.samples]], EXIT_OK, {}
    if cfg.probe == "m-tau":
        level = m_tau_level(f, cfg.tau, mc)
        return cols, [["m-tau", level, None, None, None, mc.samples]], EXIT_OK, {}
    res = z_tau_measure(f, cfg.alpha(), cfg.tau, cfg.gamma, cfg.delta, mc)
    rows = [[r["j"], r["l1"], r["x_value"], r["x_sigma"], r["x_bound"], r["y_value"], r["y_sigma"]]
            for r in res.as_rows()]
    extra = {"z": res.z.value, "z_low": res.z.low, "z_high": res.z.high, "m_tau": res.m_tau,
             "e_measure": res.e_measure, "e_exact": res.e_exact, "union_bound": res.union_bound}
    return ("j", "l1", "x_value", "x_sigma", "x_bound", "y_value", "y_sigma"), rows, EXIT_OK, extra


def run_gordon_check(cfg: ExperimentConfig, mc, out: Path):
    f = cfg.potential_spec()
    reports = gordon_trend(f, cfg.phase_vector(f.d), cfg.alpha(), cfg.tau_list(), cfg.gamma,
                           cfg.delta, cfg.lambda0, cfg.rho_mode, cfg.max_sites)
    rows = [[r.tau, r.tau_product, r.rho_mode, r.rho_is_bound, r.rho_log, r.m_tau, r.lambda0,
             r.threshold_log, r.case2_threshold_log, r.margin_log, r.passed, r.verdict]
            for r in reports]
    for r in reports:
        print(f"tau={' '.join(map(str, r.tau))}: {r.verdict} (margin_log={r.margin_log:.6g})")
    status = EXIT_OK if all(r.passed for r in reports) else EXIT_GORDON_FAIL
    cols = ("tau", "tau_product", "rho_mode", "rho_is_bound", "rho_log", "m_tau", "lambda0",
            "threshold_log", "case2_threshold_log", "margin_log", "passed", "verdict")
    return cols, rows, status, {"gordon": [r.to_dict() for r in reports]}


def run_spectrum(cfg: ExperimentConfig, mc, out: Path):
    f = cfg.potential_spec()
    H = assemble(f, cfg.phase_vector(f.d), cfg.alpha(), cfg.sides, cfg.bc)
    vectors = cfg.want_vectors or cfg.dump_vectors
    spec = spectrum(H, vectors, cfg.dense_cap)
    extra = {"dimension": H.dim, "bc": H.bc, "norm_bound": H.norm_bound,
             "phase_error": H.phase_error}
    if cfg.dump_vectors:
        write_eigenvectors(out / "eigenvectors.bin", spec.values, spec.vectors)
        extra["eigenvector_dump"] = "eigenvectors.bin"
    if vectors:
        rows = [[i, w, ipr(spec.vectors[:, i])] for i, w in enumerate(spec.values)]
        return ("index", "eigenvalue", "ipr"), rows, EXIT_OK, extra
    return ("index", "eigenvalue"), list(enumerate(spec.values)), EXIT_OK, extra


def run_transport(cfg: ExperimentConfig, mc, out: Path):
    if cfg.disorder is not None:
        H = disorder_hamiltonian(cfg.sides, cfg.disorder.get("strength", 10.0),
                                 cfg.disorder.get("seed", mc.seed), cfg.bc)
    else:
        f = cfg.potential_spec()
        H = assemble(f, cfg.phase_vector(f.d), cfg.alpha(), cfg.sides, cfg.bc)
    site = cfg.initial_site or [L // 2 for L in cfg.sides]
    u0 = np.zeros(H.dim)
    u0[np.ravel_multi_index(tuple(site), tuple(cfg.sides))] = 1.0
    table = evolve(H, u0, cfg.times)
    extra = {"origin": list(table.origin), "chebyshev_order": table.order,
             "substeps": table.substeps, "boundary_warning": table.boundary_warning,
             "bc": H.bc, "label": "empirical finite-box evidence"}
    return ("t", "norm", "x1", "x2"), table.rows(), EXIT_OK, extra


RUNNERS = {
    "freq-search": run_freq_search, "interleave": run_interleave,
    "measure-zero": run_measure_zero, "measure-probe": run_measure_probe,
    "gordon-check": run_gordon_check, "spectrum": run_spectrum, "transport": run_transport,
}


def execute(cfg: ExperimentConfig, out: Path, seed: int | None = None,
            threads: int | None = None) -> int:
    """Run one validated config, write CSV and manifest, return the exit status."""
    mc = cfg.mc_params(seed, threads)
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    cols, rows, status, extra = RUNNERS[cfg.experiment](cfg, mc, out)
    csv_name = f"{cfg.experiment}.csv"
    write_csv(out / csv_name, cols, rows)
    echo = cfg.to_dict()
    echo["mc"] = {**cfg.mc, "seed": mc.seed}
    manifest = {
        "experiment": cfg.experiment,
        "config": echo,
        "seed": mc.seed,
        "threads": mc.threads,
        "versions": versions(),
        "wall_time_s": time.perf_counter() - start,
        "csv": csv_name,
        "exit_status": status,
        "results": extra,
    }
    (out / "manifest.json").write_text(json.dumps(_json_safe(manifest), indent=2) + "\n")
    return status


def trend_rows(paths: Sequence[str]) -> list[list]:
    """Per-tau Gordon rows from manifests, sorted by tau product."""
    rows = []
    for path in paths:
        try:
            manifest = json.loads(Path(path).read_text())
            reports = manifest["results"]["gordon"]
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read manifest {path}: {exc}") from None
        except (KeyError, TypeError):
            raise ConfigError(f"{path} is not a gordon-check manifest") from None
        for r in reports:
            tau = [int(t) for t in r["tau"]]
            rows.append([str(path), tau, math.prod(tau), float(r["rho_log"]),
                         float(r["threshold_log"]), float(r["margin_log"]), r["passed"],
                         r["rho_mode"]])
    rows.sort(key=lambda row: (row[2], row[1], row[0]))
    return rows


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="quasilab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS + ("run",):
        p = sub.add_parser(name, help="run the experiment described by --config"
                           if name == "run" else f"{name} experiment")
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--seed", type=int, help="master seed (overrides mc.seed)")
        p.add_argument("--out", help="output directory (default: config 'output' or ./quasilab-out)")
        p.add_argument("--threads", type=int, help="Monte Carlo worker threads")
    p = sub.add_parser("report", help="trend table of Gordon margins from manifests")
    p.add_argument("manifests", nargs="*", help="manifest.json files from gordon-check runs")
    p.add_argument("--out", help="directory for gordon_trend.csv (default: stdout)")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "report":
            rows = trend_rows(args.manifests)
            if args.out:
                Path(args.out).mkdir(parents=True, exist_ok=True)
                write_csv(Path(args.out) / "gordon_trend.csv", TREND_COLUMNS, rows)
            else:
                sys.stdout.write(write_csv(None, TREND_COLUMNS, rows))
            return EXIT_OK
        kind = None if args.command == "run" else args.command
        cfg = ExperimentConfig.load(args.config, kind)
        if args.threads is not None and args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        out = Path(args.out or cfg.output or "quasilab-out")
        return execute(cfg, out, args.seed, args.threads)
    except (QuasilabError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAULT


if __name__ == "__main__":
    sys.exit(main())
