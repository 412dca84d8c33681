"""Dataset generation and sweep campaigns over mismatch, size and variation.

Every trial is identified by a seed derived deterministically from the
campaign's base seed and the trial coordinates, so any report row can be
reproduced bit-for-bit in isolation.  Rows record the computing time, the
solution error against the power-iteration eigenvector, and the spectral
abscissa of the state matrix; aggregates are always recomputed from rows.
"""

from __future__ import annotations

import json
import sys as _sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .circuit import EigenSystem, OpAmpParams, sample_variation
from .fdsim import SimConfig, simulate
from .linalg import power_iteration, solution_error, spectral_abscissa

# 12 programmable device conductance levels, in uS
CONDUCTANCE_LEVELS_US = (
    60.0, 90.0, 120.0, 150.0, 190.0, 210.0, 240.0, 290.0, 310.0, 340.0,
    390.0, 420.0,
)
CONDUCTANCE_UNIT_US = 100.0


@dataclass(frozen=True)
class ConductanceLevels:
    """Discrete device conductances and the unit they are normalized by."""

    values: tuple = CONDUCTANCE_LEVELS_US
    unit: float = CONDUCTANCE_UNIT_US

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise ValueError("conductance levels must be strictly increasing")
        if self.unit <= 0.0:
            raise ValueError("normalizing unit must be positive")

    @property
    def normalized(self) -> np.ndarray:
        """Matrix-entry values: conductance divided by the unit."""
        return np.asarray(self.values) / self.unit


def gen_random_matrix(n: int, levels: ConductanceLevels | None = None,
                      seed: int = 0) -> np.ndarray:
    """n x n matrix with entries drawn uniformly from the normalized levels."""
    if n < 1:
        raise ValueError("n must be >= 1")
    levels = levels or ConductanceLevels()
    rng = np.random.default_rng(seed)
    pool = levels.normalized
    return pool[rng.integers(0, pool.size, size=(n, n))]


def derive_seed(*coords: int) -> int:
    """Stable 63-bit seed from campaign coordinates (order matters)."""
    ss = np.random.SeedSequence([int(c) & 0x7FFFFFFF for c in coords])
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> 1)


@dataclass(frozen=True)
class SweepRow:
    n: int
    delta: float
    trial: int
    seed: int
    computing_time: float | None
    epsilon: float | None
    lambda_h: float | None
    status: str = "ok"

    def key(self):
        return (self.n, self.delta, self.trial)


@dataclass
class SweepReport:
    """Trial rows plus the campaign header needed to reproduce them."""

    rows: list
    meta: dict = field(default_factory=dict)

    def ok_rows(self) -> list:
        return [r for r in self.rows if r.status == "ok"]

    def aggregates(self) -> dict:
        """Per-(n, delta) statistics recomputed from the 'ok' rows.

        Sample stdev (ddof=1); single-trial cells report stdev 0.
        """
        cells: dict = {}
        for row in self.ok_rows():
            cells.setdefault((row.n, row.delta), []).append(row)
        out = {}
        for (n, delta), rows in sorted(cells.items()):
            cell: dict = {"n": n, "delta": delta, "trials": len(rows)}
            for name, values in (
                ("computing_time", [r.computing_time for r in rows]),
                ("epsilon", [r.epsilon for r in rows]),
                ("lambda_h", [r.lambda_h for r in rows]),
            ):
                arr = np.array([v for v in values if v is not None])
                if arr.size == 0:
                    continue
                cell[name] = {
                    "mean": float(arr.mean()),
                    "stdev": float(arr.std(ddof=1)) if arr.size > 1 else 0.0,
                    "min": float(arr.min()),
                    "max": float(arr.max()),
                    "count": int(arr.size),
                }
            out[f"{n},{delta:g}"] = cell
        return out

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("n,delta,trial,seed,computing_time_s,epsilon,lambda_h,status\n")
            for r in sorted(self.rows, key=lambda r: r.key()):
                ct = "" if r.computing_time is None else repr(r.computing_time)
                ep = "" if r.epsilon is None else repr(r.epsilon)
                lh = "" if r.lambda_h is None else repr(r.lambda_h)
                fh.write(
                    f"{r.n},{r.delta!r},{r.trial},{r.seed},{ct},{ep},{lh},"
                    f"{r.status}\n"
                )

    def to_json(self, path) -> None:
        doc = {"meta": self.meta, "aggregates": self.aggregates()}
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2)

    @classmethod
    def from_csv(cls, path, meta: dict | None = None) -> "SweepReport":
        rows = []
        with open(path, "r", encoding="utf-8") as fh:
            header = fh.readline()
            if not header.startswith("n,delta,trial"):
                raise ValueError(f"{path}: not a sweep row file")
            for lineno, line in enumerate(fh, start=2):
                line = line.strip()
                if not line:
                    continue
                parts = line.split(",")
                if len(parts) != 8:
                    raise ValueError(f"{path}: line {lineno}: expected 8 fields")
                rows.append(SweepRow(
                    n=int(parts[0]), delta=float(parts[1]),
                    trial=int(parts[2]), seed=int(parts[3]),
                    computing_time=float(parts[4]) if parts[4] else None,
                    epsilon=float(parts[5]) if parts[5] else None,
                    lambda_h=float(parts[6]) if parts[6] else None,
                    status=parts[7],
                ))
        return cls(rows=rows, meta=meta or {})


def _meta(kind: str, cfg: SimConfig, params: OpAmpParams, **extra) -> dict:
    doc = {
        "kind": kind,
        "engine": kernels.ENGINE,
        "cfg": {
            "alpha": cfg.alpha, "x0": cfg.x0, "t_max": cfg.t_max,
            "conv_tol": cfg.conv_tol, "record_stride": cfg.record_stride,
            "settle_factor": cfg.settle_factor,
        },
        "params": {
            "l0": params.l0, "omega0": params.omega0, "v_supp": params.v_supp,
        },
        "thresholds": {
            "size_cv_of_means": 0.15,
            "cell_stdev_over_mean": 0.10,
            "variation_band": 0.30,
        },
    }
    doc.update(extra)
    return doc


def _simulate_row(sys: EigenSystem, cfg: SimConfig, n: int, delta: float,
                  trial: int, seed: int, oracle_vec: np.ndarray) -> SweepRow:
    try:
        trace = simulate(sys, cfg)
        eps = solution_error(trace.steady_state, oracle_vec)
        lam_h = spectral_abscissa(sys.state_matrix, method="dense")
        return SweepRow(n=n, delta=delta, trial=trial, seed=seed,
                        computing_time=trace.computing_time, epsilon=eps,
                        lambda_h=lam_h)
    except Exception as exc:  # per-row failures are recorded, not fatal
        return SweepRow(n=n, delta=delta, trial=trial, seed=seed,
                        computing_time=None, epsilon=None, lambda_h=None,
                        status=f"error: {exc}")


def _run_tasks(tasks, workers: int, progress) -> list:
    rows = []
    if workers <= 1:
        for i, task in enumerate(tasks):
            rows.append(task())
            if progress:
                print(f"row {i + 1}/{len(tasks)}", file=_sys.stderr)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for i, row in enumerate(pool.map(lambda t: t(), tasks)):
                rows.append(row)
                if progress:
                    print(f"row {i + 1}/{len(tasks)}", file=_sys.stderr)
    rows.sort(key=lambda r: r.key())
    return rows


def sweep_delta(a, deltas, cfg: SimConfig | None = None,
                params: OpAmpParams | None = None, workers: int = 1,
                progress: bool = False,
                skip_keys: set | None = None) -> SweepReport:
    """Simulate one matrix across a mismatch grid; one row per delta."""
    cfg = cfg or SimConfig()
    params = params or OpAmpParams()
    deltas = [float(d) for d in deltas]
    if any(d <= 0.0 for d in deltas):
        raise ValueError("deltas must be positive")
    base = EigenSystem.build(a, delta=deltas[0], params=params)
    oracle = power_iteration(base.a)
    skip = skip_keys or set()
    tasks = []
    for d in deltas:
        if (base.n, d, 0) in skip:
            continue
        sys_d = base.with_delta(d)
        tasks.append(lambda s=sys_d, d=d: _simulate_row(
            s, cfg, s.n, d, 0, 0, oracle.vector))
    rows = _run_tasks(tasks, workers, progress)
    return SweepReport(rows=rows, meta=_meta("delta", cfg, params,
                                             deltas=deltas, n=base.n))


def sweep_size(sizes, trials: int, deltas, base_seed: int,
               cfg: SimConfig | None = None,
               params: OpAmpParams | None = None, workers: int = 1,
               progress: bool = False,
               skip_keys: set | None = None) -> SweepReport:
    """The size-scaling campaign: `trials` random matrices per size, each
    simulated at every delta.  The matrix for (size, trial) has seed
    derive_seed(base_seed, size, trial), reused across deltas so a trial's
    deltas share the coefficient matrix.
    """
    sizes = [int(n) for n in sizes]
    deltas = [float(d) for d in deltas]
    if not sizes:
        raise ValueError("sizes must be non-empty")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if any(d <= 0.0 for d in deltas):
        raise ValueError("deltas must be positive")
    cfg = cfg or SimConfig()
    params = params or OpAmpParams()
    skip = skip_keys or set()
    tasks = []
    for n in sizes:
        for trial in range(trials):
            seed = derive_seed(base_seed, n, trial)
            wanted = [d for d in deltas if (n, d, trial) not in skip]
            if not wanted:
                continue
            a = gen_random_matrix(n, seed=seed)
            base = EigenSystem.build(a, delta=wanted[0], params=params)
            oracle = power_iteration(a)
            for d in wanted:
                sys_d = base.with_delta(d)
                tasks.append(lambda s=sys_d, n=n, d=d, t=trial, sd=seed,
                             ov=oracle.vector:
                             _simulate_row(s, cfg, n, d, t, sd, ov))
    rows = _run_tasks(tasks, workers, progress)
    return SweepReport(rows=rows, meta=_meta(
        "size", cfg, params, sizes=sizes, trials=trials, deltas=deltas,
        base_seed=base_seed))


def variation_trials(a, delta_max: float, trials: int, base_seed: int,
                     cfg: SimConfig | None = None,
                     params: OpAmpParams | None = None, workers: int = 1,
                     progress: bool = False,
                     skip_keys: set | None = None) -> SweepReport:
    """Feedback-conductance variation: each trial draws per-output mismatch
    uniformly from (0, delta_max) and simulates the varied system.  Trial -1
    is the uniform delta = delta_max/2 baseline.
    """
    if delta_max <= 0.0:
        raise ValueError("delta_max must be positive")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    cfg = cfg or SimConfig()
    params = params or OpAmpParams()
    skip = skip_keys or set()
    baseline = EigenSystem.build(a, delta=delta_max / 2.0, params=params)
    oracle = power_iteration(baseline.a)
    n = baseline.n
    nominal = delta_max / 2.0
    tasks = []
    if (n, nominal, -1) not in skip:
        tasks.append(lambda: _simulate_row(baseline, cfg, n, nominal, -1, 0,
                                           oracle.vector))
    for trial in range(trials):
        if (n, nominal, trial) in skip:
            continue
        seed = derive_seed(base_seed, trial)
        deltas_i = sample_variation(delta_max, n, seed)
        sys_v = EigenSystem.build_varied(
            baseline.a, deltas_i, params=params,
            lambda_max=baseline.lambda_max)
        tasks.append(lambda s=sys_v, t=trial, sd=seed: _simulate_row(
            s, cfg, n, nominal, t, sd, oracle.vector))
    rows = _run_tasks(tasks, workers, progress)
    return SweepReport(rows=rows, meta=_meta(
        "variation", cfg, params, delta_max=delta_max, trials=trials,
        base_seed=base_seed, n=n))
