"""Dense linear-algebra kernels, the reference eigensolver and error metrics.

Matrices and vectors are plain float64 numpy arrays of dimensionless
conductance ratios (device conductance divided by the 100 uS unit).
`as_matrix` / `as_vector` are the validating constructors: they reject
non-finite entries and enforce shape, so everything downstream can assume
well-formed input.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np


class ConvergenceError(RuntimeError):
    """An iterative solver ran out of iterations before settling."""


class EigPair(NamedTuple):
    """Dominant eigenvalue and its unit-norm, sign-canonical eigenvector."""

    value: float
    vector: np.ndarray


def as_matrix(a, *, square: bool = False, positive: bool = False) -> np.ndarray:
    """Validate and return `a` as a C-contiguous float64 2-D array.

    Rejects NaN/Inf entries, empty dimensions, and (optionally) non-square
    or non-positive input.
    """
    m = np.ascontiguousarray(a, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError(f"matrix must be 2-D, got ndim={m.ndim}")
    if m.shape[0] < 1 or m.shape[1] < 1:
        raise ValueError(f"matrix must be non-empty, got shape {m.shape}")
    if not np.isfinite(m).all():
        raise ValueError("matrix entries must be finite (no NaN/Inf)")
    if square and m.shape[0] != m.shape[1]:
        raise ValueError(f"matrix must be square, got shape {m.shape}")
    if positive and not (m > 0.0).all():
        raise ValueError("matrix entries must be strictly positive")
    return m


def as_vector(x) -> np.ndarray:
    """Validate and return `x` as a contiguous float64 1-D array."""
    v = np.ascontiguousarray(x, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError(f"vector must be 1-D, got ndim={v.ndim}")
    if v.shape[0] < 1:
        raise ValueError("vector must be non-empty")
    if not np.isfinite(v).all():
        raise ValueError("vector entries must be finite (no NaN/Inf)")
    return v


def matvec(a, x) -> np.ndarray:
    """Matrix-vector product y_k = sum_j a_kj x_j.

    Accumulates column by column in ascending j order, so the result is
    bit-for-bit identical to a naive per-element loop with the same
    ordering (no BLAS reassociation).
    """
    a = as_matrix(a)
    x = as_vector(x)
    if a.shape[1] != x.shape[0]:
        raise ValueError(
            f"dimension mismatch: matrix is {a.shape[0]}x{a.shape[1]}, "
            f"vector has length {x.shape[0]}"
        )
    y = np.zeros(a.shape[0])
    for j in range(a.shape[1]):
        y += a[:, j] * x[j]
    return y


def canonical_sign(v: np.ndarray) -> np.ndarray:
    """Flip `v` so its largest-magnitude entry is non-negative."""
    k = int(np.argmax(np.abs(v)))
    return -v if v[k] < 0.0 else v


def power_iteration(a, tol: float = 1e-10, max_iter: int = 10_000) -> EigPair:
    """Dominant eigenpair of a square non-negative matrix.

    Starts from the deterministic uniform vector (1/sqrt(N), ...) and
    iterates until the residual ||A v - lam v|| <= tol * |lam|.  The
    returned vector has unit Euclidean norm and canonical sign.

    Raises ConvergenceError when max_iter sweeps do not settle, which
    signals tied or near-degenerate dominant eigenvalues.
    """
    a = as_matrix(a, square=True)
    if (a < 0.0).any():
        raise ValueError("power iteration expects a non-negative matrix")
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    n = a.shape[0]
    v = np.full(n, 1.0 / np.sqrt(n))
    for _ in range(max_iter):
        y = matvec(a, v)
        norm_y = float(np.linalg.norm(y))
        if norm_y == 0.0:
            raise ConvergenceError("iterate fell into the nullspace of A")
        lam = float(v @ y)
        v_next = y / norm_y
        residual = float(np.linalg.norm(matvec(a, v_next) - lam * v_next))
        v = v_next
        if residual <= tol * abs(lam):
            return EigPair(lam, canonical_sign(v))
    raise ConvergenceError(
        f"power iteration did not converge in {max_iter} sweeps "
        "(dominant eigenvalues may be tied or degenerate)"
    )


def spectral_abscissa(
    m,
    probe_alpha: float = 0.01,
    tol: float = 1e-6,
    max_iter: int = 500_000,
    window: int = 200,
    method: str = "growth",
) -> float:
    """Largest real part among the eigenvalues of a square matrix.

    method="growth" (default) measures the asymptotic growth rate of
    repeated application of (I + probe_alpha*M) to a random vector.  The
    per-step log growth g is averaged over `window` iterations to suppress
    complex-pair oscillation, and inverted through
    lambda = (exp(g) - 1)/probe_alpha, which is exact when the dominant
    mode is real.  Convergence is declared when two consecutive window
    estimates agree to relative tolerance `tol`.

    method="dense" delegates to a full dense eigendecomposition; use it
    when speed matters more than staying matrix-free.
    """
    m = as_matrix(m, square=True)
    if method == "dense":
        return float(np.linalg.eigvals(m).real.max())
    if method != "growth":
        raise ValueError(f"unknown method {method!r}")
    if probe_alpha <= 0.0:
        raise ValueError("probe_alpha must be positive")
    norm_inf = float(np.abs(m).sum(axis=1).max())
    if probe_alpha * norm_inf >= 0.5:
        raise ValueError(
            f"probe_alpha too large: probe_alpha*||M||_inf = "
            f"{probe_alpha * norm_inf:.3g} must stay below 0.5"
        )
    rng = np.random.default_rng(181818)
    w = rng.standard_normal(m.shape[0])
    w /= np.linalg.norm(w)
    prev = None
    for _ in range(max(1, max_iter // window)):
        log_growth = 0.0
        for _ in range(window):
            w += probe_alpha * (m @ w)
            norm_w = float(np.linalg.norm(w))
            if norm_w == 0.0:
                raise ConvergenceError("probe vector collapsed to zero")
            log_growth += np.log(norm_w)
            w /= norm_w
        est = float(np.expm1(log_growth / window) / probe_alpha)
        if prev is not None and abs(est - prev) <= tol * abs(est) + 1e-14:
            return est
        prev = est
    raise ConvergenceError(
        f"growth-rate estimate did not settle within {max_iter} iterations"
    )


def solution_error(x, x_star) -> float:
    """Euclidean distance between unit-normalized, sign-aligned vectors.

    Both inputs are normalized; x is flipped when it points away from
    x_star, so the metric is invariant under independent nonzero scaling
    of either argument.
    """
    x = as_vector(x)
    x_star = as_vector(x_star)
    if x.shape[0] != x_star.shape[0]:
        raise ValueError(
            f"length mismatch: {x.shape[0]} vs {x_star.shape[0]}"
        )
    norm_x = float(np.linalg.norm(x))
    norm_s = float(np.linalg.norm(x_star))
    if norm_x == 0.0 or norm_s == 0.0:
        raise ValueError("solution_error is undefined for zero vectors")
    xn = x / norm_x
    sn = x_star / norm_s
    if float(xn @ sn) < 0.0:
        xn = -xn
    return float(np.linalg.norm(xn - sn))


def read_matrix_csv(path) -> np.ndarray:
    """Read a matrix from plain CSV: decimal floats, one row per line, no header."""
    rows = []
    width = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = [float(tok) for tok in line.split(",")]
            except ValueError as exc:
                raise ValueError(f"{path}: line {lineno}: {exc}") from None
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise ValueError(
                    f"{path}: line {lineno}: expected {width} columns, got {len(row)}"
                )
            rows.append(row)
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return as_matrix(rows)


def write_matrix_csv(path, a) -> None:
    a = as_matrix(a)
    with open(path, "w", encoding="utf-8") as fh:
        for row in a:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def read_vector_csv(path) -> np.ndarray:
    """Read a vector from a single CSV line."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if len(lines) != 1:
        raise ValueError(f"{path}: expected a single CSV line, got {len(lines)}")
    try:
        return as_vector([float(tok) for tok in lines[0].split(",")])
    except ValueError as exc:
        raise ValueError(f"{path}: line 1: {exc}") from None


def write_vector_csv(path, x) -> None:
    x = as_vector(x)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(repr(float(v)) for v in x) + "\n")
