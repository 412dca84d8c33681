"""Web-graph ingestion, column-stochastic transition matrices, and ranking.

A citation matrix records "page j links to page i" as C[i, j] = 1.  The
transition matrix spreads each non-dangling column's unit mass as
p/outdegree over its citations plus a uniform teleport sigma = (1-p)/n,
and gives dangling (link-less) columns the uniform column 1/n.  Columns
therefore sum to one, the dominant eigenvalue is exactly 1, and the
dominant eigenvector holds the importance scores.

The transition matrix keeps a sparse CSC + rank-one representation so the
circuit simulation of large graphs stays cheap; a dense materialization is
available and must agree entry for entry.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .circuit import EigenSystem, OpAmpParams
from .fdsim import SimConfig, simulate
from .linalg import power_iteration, solution_error


@dataclass(frozen=True)
class CitationMatrix:
    """Boolean web graph on pages 1..n; links are (to, from) index pairs."""

    n: int
    links: frozenset

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("page count must be >= 1")
        for to, frm in self.links:
            if not (1 <= to <= self.n and 1 <= frm <= self.n):
                raise ValueError(f"link ({to}, {frm}) outside pages 1..{self.n}")

    @property
    def link_count(self) -> int:
        return len(self.links)

    def to_dense(self) -> np.ndarray:
        c = np.zeros((self.n, self.n))
        for to, frm in self.links:
            c[to - 1, frm - 1] = 1.0
        return c


def load_edge_list(path) -> CitationMatrix:
    """Parse a "from to" edge list (1-based pages, whitespace separated).

    Blank lines and '#' comments are ignored; a header line "n <count>"
    fixes the page count (otherwise the largest index seen is used).
    Duplicate edges collapse.
    """
    links = set()
    n_header = None
    max_idx = 0
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            toks = line.split()
            if toks[0] == "n":
                if len(toks) != 2:
                    raise ValueError(f"{path}: line {lineno}: malformed header")
                if n_header is not None:
                    raise ValueError(f"{path}: line {lineno}: duplicate header")
                try:
                    n_header = int(toks[1])
                except ValueError:
                    raise ValueError(
                        f"{path}: line {lineno}: header count must be an integer"
                    ) from None
                if n_header < 1:
                    raise ValueError(f"{path}: line {lineno}: page count must be >= 1")
                continue
            if len(toks) != 2:
                raise ValueError(
                    f"{path}: line {lineno}: expected 'from to', got {line!r}"
                )
            try:
                frm, to = int(toks[0]), int(toks[1])
            except ValueError:
                raise ValueError(
                    f"{path}: line {lineno}: page indices must be integers"
                ) from None
            if frm < 1 or to < 1:
                raise ValueError(
                    f"{path}: line {lineno}: page indices are 1-based, got "
                    f"{frm} {to}"
                )
            links.add((to, frm))
            max_idx = max(max_idx, frm, to)
    if n_header is not None:
        if max_idx > n_header:
            raise ValueError(
                f"{path}: header says n={n_header} but found page {max_idx}"
            )
        n = n_header
    else:
        if max_idx == 0:
            raise ValueError(f"{path}: empty edge list and no 'n <count>' header")
        n = max_idx
    return CitationMatrix(n=n, links=frozenset(links))


def subset(c: CitationMatrix, n: int) -> CitationMatrix:
    """Principal submatrix on pages 1..n (links with both endpoints <= n)."""
    if not 1 <= n <= c.n:
        raise ValueError(f"subset size must be in 1..{c.n}, got {n}")
    kept = frozenset((t, f) for t, f in c.links if t <= n and f <= n)
    return CitationMatrix(n=n, links=kept)


@dataclass(frozen=True)
class TransitionMatrix:
    """Column-stochastic random-walk matrix in sparse + rank-one form.

    pdata/rows/cols hold p * C_ij / colsum_j at the linked positions
    (column-sorted, so indptr walks them as CSC); `dangling` lists the
    0-based link-less columns whose entries are uniformly 1/n.  Every other
    entry is the teleport offset sigma.
    """

    n: int
    p: float
    sigma: float
    pdata: np.ndarray
    rows: np.ndarray
    cols: np.ndarray
    indptr: np.ndarray
    dangling: np.ndarray
    _dense: list = field(default_factory=list, repr=False, compare=False)

    def to_dense(self) -> np.ndarray:
        """Materialize the matrix; cached after the first call."""
        if not self._dense:
            t = np.full((self.n, self.n), self.sigma)
            if self.dangling.size:
                t[:, self.dangling] = 1.0 / self.n
            t[self.rows, self.cols] += self.pdata
            self._dense.append(t)
        return self._dense[0]

    def apply(self, v) -> np.ndarray:
        """Structured product T @ v without materializing the matrix."""
        v = np.asarray(v, dtype=np.float64)
        y = np.bincount(self.rows, weights=self.pdata * v[self.cols],
                        minlength=self.n)
        s_d = float(v[self.dangling].sum()) if self.dangling.size else 0.0
        y += self.sigma * (float(v.sum()) - s_d) + s_d / self.n
        return y

    def column_sums(self) -> np.ndarray:
        return self.to_dense().sum(axis=0)


def transition_matrix(c: CitationMatrix, p: float = 0.85) -> TransitionMatrix:
    """Build the random-walk matrix with teleport probability 1-p."""
    if not 0.0 < p < 1.0:
        raise ValueError("p must be in (0, 1)")
    n = c.n
    sigma = (1.0 - p) / n
    colcount = np.zeros(n, dtype=np.int64)
    for _, frm in c.links:
        colcount[frm - 1] += 1
    order = sorted(c.links, key=lambda tf: (tf[1], tf[0]))
    rows = np.array([t - 1 for t, f in order], dtype=np.int64)
    cols = np.array([f - 1 for t, f in order], dtype=np.int64)
    pdata = p / colcount[cols] if order else np.zeros(0)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(cols, minlength=n), out=indptr[1:])
    dangling = np.nonzero(colcount == 0)[0].astype(np.int64)
    return TransitionMatrix(
        n=n, p=p, sigma=sigma, pdata=np.asarray(pdata, dtype=np.float64),
        rows=rows, cols=cols, indptr=indptr, dangling=dangling,
    )


@dataclass
class RankResult:
    """Importance scores (sum 1), pages in descending-score order (1-based),
    the circuit computing time, and the error against the reference
    eigenvector."""

    scores: np.ndarray
    order: np.ndarray
    computing_time: float | None
    epsilon: float

    def to_json(self) -> str:
        return json.dumps(
            {
                "scores": self.scores.tolist(),
                "order": self.order.tolist(),
                "computing_time_s": self.computing_time,
                "epsilon": self.epsilon,
            },
            indent=2,
        )

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("rank,page,score\n")
            for r, page in enumerate(self.order, start=1):
                fh.write(f"{r},{page},{self.scores[page - 1]!r}\n")


def rank(t: TransitionMatrix, delta: float, cfg: SimConfig | None = None,
         params: OpAmpParams | None = None, matvec: str = "auto") -> RankResult:
    """Rank pages by simulating the eigenvector circuit on T.

    The dominant eigenvalue is exactly 1 by column-stochasticity, so the
    implemented eigenvalue is 1 - delta with no eigensolver in the loop.
    Scores are the steady-state outputs normalized to sum 1; epsilon
    compares them to the power-iteration eigenvector of T.  Ties in the
    ordering break toward the lower page index.
    """
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must be in (0, 1)")
    cfg = cfg or SimConfig()
    sys = EigenSystem.build(t.to_dense(), delta=delta, params=params,
                            lambda_max=1.0)
    trace = simulate(sys, cfg, structured=t, matvec=matvec)
    oracle = power_iteration(t.to_dense(), tol=1e-10, max_iter=100_000)
    eps = solution_error(trace.steady_state, oracle.vector)
    total = float(trace.steady_state.sum())
    if total <= 0.0:
        raise RuntimeError("steady state has non-positive mass; run diverged?")
    scores = trace.steady_state / total
    order = np.lexsort((np.arange(1, t.n + 1), -scores)) + 1
    return RankResult(
        scores=scores,
        order=order.astype(np.int64),
        computing_time=trace.computing_time,
        epsilon=eps,
    )
