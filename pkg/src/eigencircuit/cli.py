"""Command-line surface: simulate, sweep, pagerank.

Every command writes a manifest.json next to its outputs recording the
resolved parameters, SHA-256 digests of input files, the seed and the
kernel engine; re-running the same command line reproduces the outputs
bit-for-bit (on the same engine).  Exit codes: 0 converged, 1 usage or
file errors, 2 no convergence within the horizon, 3 numerical instability.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .circuit import EigenSystem, OpAmpParams
from .linalg import ConvergenceError
from .experiments import (
    SweepReport,
    sweep_delta,
    sweep_size,
    variation_trials,
)
from .fdsim import InstabilityError, SimConfig, simulate
from .linalg import power_iteration, read_matrix_csv, solution_error, spectral_abscissa
from .pagerank import load_edge_list, rank, subset, transition_matrix

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NO_CONVERGENCE = 2
EXIT_INSTABILITY = 3


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return "sha256:" + h.hexdigest()


def _default_out(command: str) -> Path:
    base = os.environ.get("EIGENCIRCUIT_OUT_DIR", "runs")
    return Path(base) / command


def _write_manifest(out_dir: Path, command: str, parameters: dict,
                    inputs: dict, outputs: list, seed) -> None:
    doc = {
        "command": command,
        "parameters": parameters,
        "inputs": {str(k): _sha256(k) for k in inputs},
        "outputs": outputs,
        "seed": seed,
        "engine": kernels.ENGINE,
        "version": __version__,
    }
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alpha", type=float, default=0.05,
                   help="dimensionless step gain (default 0.05)")
    p.add_argument("--l0", type=float, default=1e5,
                   help="op-amp DC open-loop gain (default 1e5)")
    p.add_argument("--gbw-hz", type=float, default=8e6,
                   help="op-amp gain-bandwidth product in Hz (default 8e6)")
    p.add_argument("--vsupp", type=float, default=1.0,
                   help="supply rail in volts (default 1)")
    p.add_argument("--x0", type=float, default=0.001,
                   help="initial output voltage (default 0.001)")
    p.add_argument("--conv-tol", type=float, default=1e-3,
                   help="relative steady-state tolerance (default 1e-3)")


def _params_from(args) -> OpAmpParams:
    return OpAmpParams.from_gbw(args.gbw_hz, l0=args.l0, v_supp=args.vsupp)


def _cfg_from(args, t_max: float) -> SimConfig:
    return SimConfig(alpha=args.alpha, x0=args.x0, t_max=t_max,
                     conv_tol=args.conv_tol)


def _model_parameters(args, t_max: float) -> dict:
    return {
        "alpha": args.alpha, "l0": args.l0, "gbw_hz": args.gbw_hz,
        "vsupp": args.vsupp, "x0": args.x0, "conv_tol": args.conv_tol,
        "tmax": t_max,
    }


def cmd_simulate(args) -> int:
    a = read_matrix_csv(args.matrix)
    params = _params_from(args)
    cfg = _cfg_from(args, args.tmax)
    sys_ = EigenSystem.build(a, delta=args.delta, params=params)
    try:
        trace = simulate(sys_, cfg)
    except InstabilityError as exc:
        print(f"instability: {exc}", file=sys.stderr)
        return EXIT_INSTABILITY

    oracle = power_iteration(a)
    epsilon = solution_error(trace.steady_state, oracle.vector)
    lambda_h = spectral_abscissa(sys_.state_matrix, method="dense")
    summary = {
        "computing_time_s": trace.computing_time,
        "epsilon": epsilon,
        "lambda_h": lambda_h,
        "saturated_index": trace.saturated_index,
    }

    out_dir = Path(args.out) if args.out else _default_out("simulate")
    out_dir.mkdir(parents=True, exist_ok=True)
    trace.to_csv(out_dir / "trace.csv")
    with open(out_dir / "summary.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2)
    with open(out_dir / "system.json", "w", encoding="utf-8") as fh:
        fh.write(sys_.to_json())
    parameters = _model_parameters(args, args.tmax)
    parameters["delta"] = args.delta
    _write_manifest(out_dir, "simulate", parameters, {args.matrix: None},
                    ["trace.csv", "summary.json", "system.json"], seed=None)
    if args.json:
        print(json.dumps(summary))
    else:
        print(f"wrote {out_dir}/trace.csv and summary.json", file=sys.stderr)
    return EXIT_OK if trace.computing_time is not None else EXIT_NO_CONVERGENCE


def _parse_sizes(spec: str) -> list:
    """Accept '3,6,9', '3..30' (step 1) or '3..30..3'."""
    if ".." in spec:
        parts = spec.split("..")
        if len(parts) == 2:
            lo, hi, step = int(parts[0]), int(parts[1]), 1
        elif len(parts) == 3:
            lo, hi, step = int(parts[0]), int(parts[1]), int(parts[2])
        else:
            raise ValueError(f"bad size range {spec!r}")
        if step < 1 or hi < lo:
            raise ValueError(f"bad size range {spec!r}")
        return list(range(lo, hi + 1, step))
    return [int(tok) for tok in spec.split(",") if tok]


def _parse_deltas(spec: str) -> list:
    return [float(tok) for tok in spec.split(",") if tok]


def cmd_sweep(args) -> int:
    params = _params_from(args)
    cfg = _cfg_from(args, args.tmax)
    out_dir = Path(args.out_dir) if args.out_dir else _default_out("sweep")
    out_dir.mkdir(parents=True, exist_ok=True)

    parameters = _model_parameters(args, args.tmax)
    parameters.update({
        "mode": args.mode, "deltas": args.deltas, "trials": args.trials,
        "sizes": args.sizes, "delta_max": args.delta_max, "seed": args.seed,
        "matrix": args.matrix,
    })

    skip_keys: set = set()
    prior_rows: list = []
    rows_path = out_dir / "rows.csv"
    manifest_path = out_dir / "manifest.json"
    if args.resume:
        if not rows_path.exists() or not manifest_path.exists():
            print("nothing to resume: no rows.csv/manifest.json in out dir",
                  file=sys.stderr)
        else:
            with open(manifest_path, "r", encoding="utf-8") as fh:
                old = json.load(fh)
            if old.get("parameters") != parameters:
                print("resume refused: manifest parameters differ",
                      file=sys.stderr)
                return EXIT_USAGE
            prior = SweepReport.from_csv(rows_path)
            prior_rows = [r for r in prior.rows if r.status == "ok"]
            skip_keys = {r.key() for r in prior_rows}
            print(f"resuming: {len(skip_keys)} rows already done",
                  file=sys.stderr)

    inputs = {}
    if args.mode == "delta":
        if not args.matrix:
            print("--mode delta requires --matrix", file=sys.stderr)
            return EXIT_USAGE
        a = read_matrix_csv(args.matrix)
        inputs[args.matrix] = None
        report = sweep_delta(a, _parse_deltas(args.deltas), cfg, params,
                             workers=args.workers, progress=not args.json,
                             skip_keys=skip_keys)
    elif args.mode == "size":
        report = sweep_size(_parse_sizes(args.sizes), args.trials,
                            _parse_deltas(args.deltas), args.seed, cfg,
                            params, workers=args.workers,
                            progress=not args.json, skip_keys=skip_keys)
    elif args.mode == "variation":
        if not args.matrix:
            print("--mode variation requires --matrix", file=sys.stderr)
            return EXIT_USAGE
        a = read_matrix_csv(args.matrix)
        inputs[args.matrix] = None
        report = variation_trials(a, args.delta_max, args.trials, args.seed,
                                  cfg, params, workers=args.workers,
                                  progress=not args.json, skip_keys=skip_keys)
    else:
        print(f"unknown mode {args.mode}", file=sys.stderr)
        return EXIT_USAGE

    report.rows = sorted(report.rows + prior_rows, key=lambda r: r.key())
    report.meta["base_seed"] = args.seed
    report.to_csv(rows_path)
    report.to_json(out_dir / "aggregate.json")
    _write_manifest(out_dir, "sweep", parameters, inputs,
                    ["rows.csv", "aggregate.json"], seed=args.seed)
    n_err = sum(1 for r in report.rows if r.status != "ok")
    if args.json:
        print(json.dumps({"rows": len(report.rows), "errors": n_err,
                          "out_dir": str(out_dir)}))
    else:
        print(f"wrote {rows_path} ({len(report.rows)} rows, {n_err} errors)",
              file=sys.stderr)
    return EXIT_OK


def cmd_pagerank(args) -> int:
    cm = load_edge_list(args.edges)
    if args.subset_n is not None:
        cm = subset(cm, args.subset_n)
    t = transition_matrix(cm, p=args.p)
    params = _params_from(args)
    cfg = _cfg_from(args, args.tmax)
    try:
        result = rank(t, args.delta, cfg, params)
    except InstabilityError as exc:
        print(f"instability: {exc}", file=sys.stderr)
        return EXIT_INSTABILITY

    out_dir = Path(args.out) if args.out else _default_out("pagerank")
    out_dir.mkdir(parents=True, exist_ok=True)
    result.to_csv(out_dir / "ranking.csv")
    with open(out_dir / "result.json", "w", encoding="utf-8") as fh:
        fh.write(result.to_json())
    parameters = _model_parameters(args, args.tmax)
    parameters.update({"delta": args.delta, "p": args.p,
                       "subset_n": args.subset_n, "topk": args.topk})
    _write_manifest(out_dir, "pagerank", parameters, {args.edges: None},
                    ["ranking.csv", "result.json"], seed=None)

    top = [
        {"rank": i + 1, "page": int(pg),
         "score": float(result.scores[pg - 1])}
        for i, pg in enumerate(result.order[: args.topk])
    ]
    if args.json:
        print(json.dumps({
            "n": t.n, "links": cm.link_count,
            "computing_time_s": result.computing_time,
            "epsilon": result.epsilon, "top": top,
        }))
    else:
        for row in top:
            print(f"{row['rank']:4d}  page {row['page']:<6d} "
                  f"score {row['score']:.6f}")
        ct = result.computing_time
        print(f"computing time: "
              f"{'n/a' if ct is None else f'{ct * 1e6:.1f} us'}; "
              f"epsilon {result.epsilon:.4g}", file=sys.stderr)
    return (EXIT_OK if result.computing_time is not None
            else EXIT_NO_CONVERGENCE)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="eigencircuit",
        description="Simulate the crosspoint eigenvector circuit",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="integrate one system")
    p_sim.add_argument("matrix", help="coefficient matrix CSV")
    p_sim.add_argument("--delta", type=float, default=0.01,
                       help="eigenvalue mismatch (default 0.01)")
    p_sim.add_argument("--tmax", type=float, default=1e-3,
                       help="horizon in seconds (default 1e-3)")
    p_sim.add_argument("--out", help="output directory")
    p_sim.add_argument("--json", action="store_true",
                       help="machine-readable summary on stdout")
    _add_model_flags(p_sim)
    p_sim.set_defaults(func=cmd_simulate)

    p_sw = sub.add_parser("sweep", help="run a campaign")
    p_sw.add_argument("--mode", required=True,
                      choices=["delta", "size", "variation"])
    p_sw.add_argument("--matrix", help="matrix CSV (delta/variation modes)")
    p_sw.add_argument("--sizes", default="3..30..3",
                      help="size list/range, e.g. 3,6,9 or 3..30..3")
    p_sw.add_argument("--trials", type=int, default=10)
    p_sw.add_argument("--deltas", default="0.003,0.01,0.02,0.04")
    p_sw.add_argument("--delta-max", type=float, default=0.02,
                      help="variation mode: per-output mismatch upper bound")
    p_sw.add_argument("--seed", type=int, default=0, help="base seed")
    p_sw.add_argument("--tmax", type=float, default=2e-3)
    p_sw.add_argument("--workers", type=int, default=1)
    p_sw.add_argument("--resume", action="store_true",
                      help="skip rows already present in out dir")
    p_sw.add_argument("--out-dir", help="output directory")
    p_sw.add_argument("--json", action="store_true")
    _add_model_flags(p_sw)
    p_sw.set_defaults(func=cmd_sweep)

    p_pr = sub.add_parser("pagerank", help="rank a web graph")
    p_pr.add_argument("edges", help="edge list file ('from to' per line)")
    p_pr.add_argument("--subset-n", type=int,
                      help="rank only the first N pages")
    p_pr.add_argument("--delta", type=float, default=0.01)
    p_pr.add_argument("--p", type=float, default=0.85,
                      help="random-walk probability (default 0.85)")
    p_pr.add_argument("--topk", type=int, default=10)
    p_pr.add_argument("--tmax", type=float, default=1e-2)
    p_pr.add_argument("--out", help="output directory")
    p_pr.add_argument("--json", action="store_true")
    _add_model_flags(p_pr)
    p_pr.set_defaults(func=cmd_pagerank)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except (OSError, ValueError, ConvergenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
