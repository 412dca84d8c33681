"""Desk-scale simulator of a crosspoint-memory eigenvector circuit.

The circuit programs a positive matrix into a resistive crossbar wrapped
in amplifier feedback, so its output voltages converge to the dominant
eigenvector in a single analog transient.  This package reproduces that
transient numerically: explicit finite-difference stepping of the 2N-state
feedback dynamics with supply clipping, the mismatch/computing-time
trade-off, size-scaling and variation campaigns, and PageRank of web
graphs via the same machinery.
"""

__version__ = "0.1.0"

from .circuit import (
    EigenSystem,
    OpAmpParams,
    build_normalization,
    build_state_matrix,
    map_eigenvalue,
    sample_variation,
)
from .fdsim import (
    InstabilityError,
    SimConfig,
    Trace,
    computing_time,
    fit_growth_rate,
    simulate,
    simulate_scheduled,
    step,
)
from .linalg import (
    ConvergenceError,
    EigPair,
    matvec,
    power_iteration,
    solution_error,
    spectral_abscissa,
)
from .pagerank import (
    CitationMatrix,
    RankResult,
    TransitionMatrix,
    load_edge_list,
    rank,
    subset,
    transition_matrix,
)
from .experiments import (
    ConductanceLevels,
    SweepReport,
    SweepRow,
    gen_random_matrix,
    sweep_delta,
    sweep_size,
    variation_trials,
)

__all__ = [
    "CitationMatrix",
    "ConductanceLevels",
    "ConvergenceError",
    "EigPair",
    "EigenSystem",
    "InstabilityError",
    "OpAmpParams",
    "RankResult",
    "SimConfig",
    "SweepReport",
    "SweepRow",
    "Trace",
    "TransitionMatrix",
    "build_normalization",
    "build_state_matrix",
    "computing_time",
    "fit_growth_rate",
    "gen_random_matrix",
    "load_edge_list",
    "map_eigenvalue",
    "matvec",
    "power_iteration",
    "rank",
    "sample_variation",
    "simulate",
    "simulate_scheduled",
    "solution_error",
    "spectral_abscissa",
    "step",
    "subset",
    "sweep_delta",
    "sweep_size",
    "transition_matrix",
    "variation_trials",
]
