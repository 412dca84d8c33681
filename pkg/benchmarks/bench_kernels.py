#!/usr/bin/env python3
"""Benchmark the compiled stepping kernel against the numpy fallback.

Times the dense kernel on random-level systems of several sizes and the
structured kernel on a synthetic sparse web graph, reporting steps/second
and the speedup.  Run from the repo root after building the extension:

    python3 setup.py build_ext --inplace
    python3 benchmarks/bench_kernels.py [--steps 20000] [--json]
"""

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from eigencircuit import kernels  # noqa: E402
from eigencircuit.circuit import EigenSystem  # noqa: E402
from eigencircuit.experiments import gen_random_matrix  # noqa: E402
from eigencircuit.pagerank import CitationMatrix, transition_matrix  # noqa: E402


def backends():
    found = {"numpy": kernels.get_backend("numpy")}
    try:
        found["cython"] = kernels.get_backend("cython")
    except ImportError:
        pass
    return found


def time_dense(backend, sys_, nsteps, alpha=0.05):
    n = sys_.n
    w = np.concatenate([np.full(n, 1e-6), np.zeros(n)])
    scratch = np.empty(2 * n)
    m = sys_.state_matrix
    backend.dense_chunk(m, w, scratch, alpha, 1.0, 200, n)  # warm up
    t0 = time.perf_counter()
    backend.dense_chunk(m, w, scratch, alpha, 1.0, nsteps, n)
    return time.perf_counter() - t0


def time_struct(backend, t, sys_, nsteps, alpha=0.05):
    n = sys_.n
    u = sys_.norm_diag
    lam = sys_.lambdas
    damp = lam * u + 0.5
    w = np.concatenate([np.full(n, 1e-6), np.zeros(n)])
    scratch = np.empty(n)
    args = (t.pdata, t.rows, t.cols, t.indptr, t.dangling, t.sigma, 1.0 / n,
            u, lam, damp)
    backend.struct_chunk(*args, w, scratch, alpha, 1.0, 200)
    t0 = time.perf_counter()
    backend.struct_chunk(*args, w, scratch, alpha, 1.0, nsteps)
    return time.perf_counter() - t0


def synthetic_graph(n, links_per_page=5, seed=0):
    rng = np.random.default_rng(seed)
    links = set()
    for frm in range(1, int(0.75 * n) + 1):
        for _ in range(links_per_page):
            links.add((int(rng.integers(1, n + 1)), frm))
    return CitationMatrix(n=n, links=frozenset(links))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--steps", type=int, default=20_000)
    ap.add_argument("--json", action="store_true")
    args = ap.parse_args()

    impls = backends()
    results = []

    for n in (3, 10, 30):
        sys_ = EigenSystem.build(gen_random_matrix(n, seed=1), delta=0.01)
        row = {"kernel": "dense", "n": n, "steps": args.steps}
        for name, backend in impls.items():
            elapsed = time_dense(backend, sys_, args.steps)
            row[name + "_steps_per_s"] = args.steps / elapsed
        results.append(row)

    for n in (100, 500):
        cm = synthetic_graph(n)
        t = transition_matrix(cm)
        sys_ = EigenSystem.build(t.to_dense(), delta=0.01, lambda_max=1.0)
        row = {"kernel": "structured", "n": n, "steps": args.steps}
        for name, backend in impls.items():
            elapsed = time_struct(backend, t, sys_, args.steps)
            row[name + "_steps_per_s"] = args.steps / elapsed
        results.append(row)

    for row in results:
        if "cython_steps_per_s" in row and "numpy_steps_per_s" in row:
            row["speedup"] = row["cython_steps_per_s"] / row["numpy_steps_per_s"]

    if args.json:
        print(json.dumps(results, indent=2))
        return

    have_cy = "cython" in impls
    print(f"active engine: {kernels.ENGINE}"
          + ("" if have_cy else "  (compiled kernel not built)"))
    hdr = f"{'kernel':<11}{'N':>5}{'numpy steps/s':>16}"
    if have_cy:
        hdr += f"{'cython steps/s':>16}{'speedup':>9}"
    print(hdr)
    for row in results:
        line = (f"{row['kernel']:<11}{row['n']:>5}"
                f"{row['numpy_steps_per_s']:>16.3g}")
        if have_cy:
            line += (f"{row['cython_steps_per_s']:>16.3g}"
                     f"{row['speedup']:>9.1f}")
        print(line)


if __name__ == "__main__":
    main()
