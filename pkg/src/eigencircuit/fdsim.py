"""Finite-difference integration of the circuit dynamics.

The state w = [x; z] (outputs and scaled derivatives) advances by
w <- w + alpha*(M w) with supply clipping of the outputs: any |x_k| pushed
past v_supp is clamped to the rail and its companion z_k zeroed
(anti-windup).  A run starts from x(0) = x0*(1,...,1), z(0) = 0, detects
the first output saturation, continues to settle_factor times that moment
to establish its own steady-state reference, then replays the identical
trajectory to find the earliest step within conv_tol of the reference.
That replay gives computing_time at single-step resolution; the recorded
trace is decimated to record_stride steps per sample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .circuit import EigenSystem
from .linalg import as_matrix, as_vector

# outputs beyond this multiple of the rail mean the step gain is too large
BLOWUP_FACTOR = 1e6

# structured matvec pays off above this size; below it dense wins
STRUCTURED_MIN_N = 64

_FINDHIT_CHUNK = 65_536


class InstabilityError(RuntimeError):
    """The state grew without bound: the step gain alpha is too large."""


@dataclass(frozen=True)
class SimConfig:
    """Stepping controls.

    alpha         -- dimensionless step gain (product of gain-bandwidth and
                     time step); stability needs alpha*||M||_inf < 2
    x0            -- initial output voltage on every element, volts
    t_max         -- simulation horizon, seconds
    conv_tol      -- relative tolerance declaring the solution computed
    record_stride -- steps between trace samples (0 = auto, capped at
                     max_samples over the t_max horizon)
    settle_factor -- reference horizon as a multiple of first-saturation time
    """

    alpha: float = 0.05
    x0: float = 0.001
    t_max: float = 1e-3
    conv_tol: float = 1e-3
    record_stride: int = 0
    settle_factor: float = 5.0
    max_samples: int = 10_000

    def __post_init__(self):
        if not 0.0 < self.alpha <= 0.5:
            raise ValueError("alpha must be in (0, 0.5]")
        if self.x0 <= 0.0:
            raise ValueError("x0 must be positive")
        if self.t_max <= 0.0:
            raise ValueError("t_max must be positive")
        if self.conv_tol <= 0.0:
            raise ValueError("conv_tol must be positive")
        if self.record_stride < 0:
            raise ValueError("record_stride must be >= 0")
        if self.settle_factor < 1.0:
            raise ValueError("settle_factor must be >= 1")
        if self.max_samples < 2:
            raise ValueError("max_samples must be >= 2")


@dataclass
class Trace:
    """Recorded run: uniformly spaced snapshots of the full state.

    states[i] is the 2N state vector at times[i]; the first N entries are
    the output voltages.  computing_time is None when no output saturated
    within t_max.  saturated_index is the first output to hit the rail.
    """

    times: np.ndarray
    states: np.ndarray
    dt: float
    n: int
    record_stride: int
    steady_state: np.ndarray
    computing_time: float | None = None
    saturated_index: int | None = None
    first_clip_step: int | None = None
    phase_switches: list = field(default_factory=list)
    engine: str = kernels.ENGINE

    @property
    def x_states(self) -> np.ndarray:
        """Output-voltage block of every snapshot, shape (samples, N)."""
        return self.states[:, : self.n]

    @property
    def saturation_time(self) -> float | None:
        if self.first_clip_step is None:
            return None
        return (self.first_clip_step + 1) * self.dt

    def to_csv(self, path) -> None:
        header = "time_s," + ",".join(f"x_{k}" for k in range(1, self.n + 1))
        data = np.column_stack([self.times, self.x_states])
        np.savetxt(path, data, delimiter=",", header=header, comments="")


def step(w, m, alpha: float, v_supp: float) -> np.ndarray:
    """One update w' = w + alpha*(M w) with output clipping.

    w has length 2N; outputs pushed past the rail are clamped to +/-v_supp
    and their companion derivative entries zeroed.
    """
    w = as_vector(w)
    m = as_matrix(m, square=True)
    dim = w.shape[0]
    if m.shape[0] != dim:
        raise ValueError(
            f"dimension mismatch: state has length {dim}, matrix is "
            f"{m.shape[0]}x{m.shape[1]}"
        )
    if dim % 2:
        raise ValueError("state length must be even (outputs + derivatives)")
    n = dim // 2
    w2 = w + alpha * (m @ w)
    if not np.isfinite(w2).all():
        raise FloatingPointError("NaN/Inf propagated through the update")
    x = w2[:n]
    over = np.abs(x) > v_supp
    if over.any():
        np.clip(x, -v_supp, v_supp, out=x)
        w2[n:][over] = 0.0
    return w2


def computing_time(trace: Trace, reference, conv_tol: float) -> float | None:
    """Earliest recorded time within conv_tol of `reference` (relative L2).

    Trace-resolution counterpart of the step-exact value a simulation
    reports; returns None when no sample qualifies.
    """
    ref = as_vector(reference)
    if conv_tol <= 0.0:
        raise ValueError("conv_tol must be positive")
    ref_norm = float(np.linalg.norm(ref))
    if ref_norm == 0.0:
        raise ValueError("reference must be nonzero")
    errs = np.linalg.norm(trace.x_states - ref, axis=1)
    hits = np.nonzero(errs < conv_tol * ref_norm)[0]
    if hits.size == 0:
        return None
    return float(trace.times[hits[0]])


def fit_growth_rate(trace: Trace, lo: float | None = None,
                    hi: float | None = None) -> float:
    """Least-squares slope of ln(max_k |x_k|) over the exponential window.

    The window keeps samples whose max output magnitude lies in [lo, hi];
    defaults skip the startup transient (5x the initial level) and stop
    well short of the rail (30% of the peak).
    """
    peak = np.abs(trace.x_states).max(axis=1)
    if lo is None:
        lo = 5.0 * peak[0]
    if hi is None:
        hi = 0.3 * float(peak.max())
    mask = (peak >= lo) & (peak <= hi)
    if int(mask.sum()) < 5:
        raise ValueError(
            "not enough samples in the exponential window; lower "
            "record_stride or widen [lo, hi]"
        )
    t = trace.times[mask]
    y = np.log(peak[mask])
    slope = np.polyfit(t, y, 1)[0]
    return float(slope)


def _norm_inf(m: np.ndarray) -> float:
    return float(np.abs(m).sum(axis=1).max())


class _DenseRunner:
    def __init__(self, sys: EigenSystem):
        self.m = np.ascontiguousarray(sys.state_matrix)
        self.scratch = np.empty(self.m.shape[0])
        self.n = sys.n

    def chunk(self, w, alpha, v_supp, nsteps):
        return kernels.dense_chunk(
            self.m, w, self.scratch, alpha, v_supp, nsteps, self.n
        )

    def findhit(self, w, alpha, v_supp, nsteps, x_ref, tol_sq):
        return kernels.dense_chunk_findhit(
            self.m, w, self.scratch, alpha, v_supp, nsteps, self.n,
            x_ref, tol_sq,
        )


class _StructRunner:
    """Kernel driver for the sparse + rank-one transition representation."""

    def __init__(self, sys: EigenSystem, structured):
        if structured.n != sys.n:
            raise ValueError("structured operator size does not match system")
        self.pdata = np.ascontiguousarray(structured.pdata, dtype=np.float64)
        self.rows = np.ascontiguousarray(structured.rows, dtype=np.int64)
        self.cols = np.ascontiguousarray(structured.cols, dtype=np.int64)
        self.indptr = np.ascontiguousarray(structured.indptr, dtype=np.int64)
        self.dangling = np.ascontiguousarray(structured.dangling, dtype=np.int64)
        self.sigma = float(structured.sigma)
        self.inv_n = 1.0 / structured.n
        self.u = np.ascontiguousarray(sys.norm_diag)
        self.lam = np.ascontiguousarray(sys.lambdas)
        self.damp = self.lam * self.u + 0.5
        self.scratch = np.empty(sys.n)
        self.n = sys.n

    def chunk(self, w, alpha, v_supp, nsteps):
        return kernels.struct_chunk(
            self.pdata, self.rows, self.cols, self.indptr, self.dangling,
            self.sigma, self.inv_n, self.u, self.lam, self.damp,
            w, self.scratch, alpha, v_supp, nsteps,
        )

    def findhit(self, w, alpha, v_supp, nsteps, x_ref, tol_sq):
        return kernels.struct_chunk_findhit(
            self.pdata, self.rows, self.cols, self.indptr, self.dangling,
            self.sigma, self.inv_n, self.u, self.lam, self.damp,
            w, self.scratch, alpha, v_supp, nsteps, x_ref, tol_sq,
        )


def _make_runner(sys: EigenSystem, structured, matvec: str):
    if matvec == "dense":
        return _DenseRunner(sys)
    if matvec == "structured":
        if structured is None:
            raise ValueError("matvec='structured' requires a structured operator")
        return _StructRunner(sys, structured)
    if matvec == "auto":
        if structured is not None and sys.n > STRUCTURED_MIN_N:
            return _StructRunner(sys, structured)
        return _DenseRunner(sys)
    raise ValueError(f"unknown matvec mode {matvec!r}")


def _check_margin(sys: EigenSystem, alpha: float) -> None:
    margin = alpha * _norm_inf(sys.state_matrix)
    if margin >= 2.0:
        raise InstabilityError(
            f"alpha*||M||_inf = {margin:.3g} >= 2: reduce alpha "
            f"(explicit stepping would diverge)"
        )


def _simulate_phases(phases, cfg: SimConfig, structured, matvec: str) -> Trace:
    """Shared driver: `phases` is a list of (EigenSystem, switch_frac).

    switch_frac is the fraction of v_supp the largest output must reach
    before moving to the next phase; the last phase runs to the settle
    horizon (or t_max).  All phases must share the op-amp model.
    """
    base = phases[0][0]
    params = base.params
    n = base.n
    for sys, frac in phases:
        if sys.params != params:
            raise ValueError("all phases must share op-amp parameters")
        if sys.n != n:
            raise ValueError("all phases must share the matrix size")
        _check_margin(sys, cfg.alpha)
        if frac is not None and not 0.0 < frac <= 1.0:
            raise ValueError("switch criterion must be a fraction in (0, 1]")
    v_supp = params.v_supp
    if cfg.x0 >= v_supp:
        raise ValueError("x0 must be below the supply rail")

    dt = cfg.alpha / params.gain_bandwidth
    total = int(cfg.t_max / dt)
    if total < 1:
        raise ValueError("t_max is shorter than a single step")
    stride = cfg.record_stride or max(1, math.ceil(total / cfg.max_samples))
    stride = min(stride, total)
    max_steps = (total // stride) * stride

    runners = [_make_runner(sys, structured, matvec) for sys, _ in phases]

    w = np.concatenate([np.full(n, cfg.x0), np.zeros(n)])
    times = [0.0]
    states = [w.copy()]
    switches: list[tuple[int, float | None]] = []
    step_now = 0
    end_step = max_steps
    horizon_set = False
    first_clip = -1
    clip_idx = -1
    phase = 0
    last = len(phases) - 1

    def settle_horizon(clip_step: int, event_step: int) -> int:
        # guarantee (settle_factor - 1) saturation-times of settling after
        # the later of: the clip event, entry into the final phase
        pad = math.ceil(
            (cfg.settle_factor - 1.0) * (clip_step + 1) / stride
        ) * stride
        return min(max_steps, event_step + pad)

    while step_now < end_step:
        nsteps = min(stride, end_step - step_now)
        rel, idx, mx = runners[phase].chunk(w, cfg.alpha, v_supp, nsteps)
        if not mx <= BLOWUP_FACTOR * v_supp:  # catches NaN as well
            raise InstabilityError(
                f"state reached {mx:.3g} (> {BLOWUP_FACTOR:g} * v_supp); "
                "alpha is too large for this system"
            )
        if rel >= 0 and first_clip < 0:
            first_clip = step_now + rel
            clip_idx = idx
        step_now += nsteps
        times.append(step_now * dt)
        states.append(w.copy())
        if phase == last and first_clip >= 0 and not horizon_set:
            end_step = settle_horizon(first_clip, step_now)
            horizon_set = True
        if phase < last:
            frac = phases[phase][1]
            if frac is None or float(np.abs(w[:n]).max()) >= frac * v_supp:
                phase += 1
                switches.append((step_now, phases[phase][0].delta))
                if first_clip >= 0 and phase == last:
                    end_step = settle_horizon(first_clip, step_now)
                    horizon_set = True

    steady = w[:n].copy()
    trace = Trace(
        times=np.asarray(times),
        states=np.vstack(states),
        dt=dt,
        n=n,
        record_stride=stride,
        steady_state=steady,
        saturated_index=(clip_idx if first_clip >= 0 else None),
        first_clip_step=(first_clip if first_clip >= 0 else None),
        phase_switches=[(s * dt, d) for s, d in switches],
    )
    if first_clip < 0:
        return trace

    # replay the identical trajectory to locate, at single-step resolution,
    # the earliest state within conv_tol of the final (reference) state
    x_ref = np.ascontiguousarray(steady)
    tol_sq = (cfg.conv_tol * float(np.linalg.norm(x_ref))) ** 2
    w2 = np.concatenate([np.full(n, cfg.x0), np.zeros(n)])
    if float((w2[:n] - x_ref) @ (w2[:n] - x_ref)) < tol_sq:
        trace.computing_time = 0.0
        return trace
    boundaries = [s for s, _ in switches] + [end_step]
    pos = 0
    hit_step = -1
    for phase_idx, seg_end in enumerate(boundaries):
        while pos < seg_end:
            nsteps = min(_FINDHIT_CHUNK, seg_end - pos)
            hit, _, _, _ = runners[phase_idx].findhit(
                w2, cfg.alpha, v_supp, nsteps, x_ref, tol_sq
            )
            if hit >= 0:
                hit_step = pos + hit
                break
            pos += nsteps
        if hit_step >= 0:
            break
    if hit_step < 0:
        raise RuntimeError(
            "internal error: replay never reached its own reference state"
        )
    trace.computing_time = (hit_step + 1) * dt
    return trace


def simulate(sys: EigenSystem, cfg: SimConfig | None = None, structured=None,
             matvec: str = "auto") -> Trace:
    """Integrate one system to its clipped steady state.

    `structured` optionally supplies a sparse + rank-one representation of
    the coefficient matrix (see pagerank.TransitionMatrix); it is used for
    systems larger than STRUCTURED_MIN_N unless `matvec` forces a mode.
    """
    cfg = cfg or SimConfig()
    return _simulate_phases([(sys, None)], cfg, structured, matvec)


def simulate_scheduled(sys: EigenSystem, schedule, cfg: SimConfig | None = None,
                       structured=None, matvec: str = "auto") -> Trace:
    """Run with a mismatch schedule: start coarse and fast, finish fine.

    `schedule` lists (delta, switch_frac) pairs with strictly decreasing
    deltas; each phase hands over once the largest output reaches
    switch_frac * v_supp.  The last phase runs to steady state, so final
    accuracy is that of the smallest delta.  Phase switches happen at
    trace-sample granularity (record_stride steps).
    """
    schedule = list(schedule)
    if not schedule:
        raise ValueError("schedule must contain at least one phase")
    deltas = [d for d, _ in schedule]
    if any(b >= a for a, b in zip(deltas, deltas[1:])):
        raise ValueError("schedule deltas must be strictly decreasing")
    cfg = cfg or SimConfig()
    phases = [(sys.with_delta(d), frac) for d, frac in schedule]
    return _simulate_phases(phases, cfg, structured, matvec)
