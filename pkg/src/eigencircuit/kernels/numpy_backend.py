"""Pure-numpy finite-difference stepping kernels.

Import-compatible fallback for the compiled extension.  Each chunk call
advances the state vector in place for `nsteps` iterations of
w <- w + alpha*(M w) followed by supply clipping of the first n_clip
entries (the output block), zeroing the companion derivative entry of any
clipped output.

Returns follow the compiled kernel exactly:
  chunk     -> (first_clip, clip_idx, max_abs)
  findhit   -> (hit, first_clip, clip_idx, max_abs)
where first_clip is the 0-based step index (within the chunk) of the first
clipping event (-1 if none), clip_idx the lowest clipped output index at
that step, max_abs the largest pre-clip |w| entry seen, and hit the step
index after which ||x - x_ref||^2 < tol_sq (-1 if never).
"""

from __future__ import annotations

import numpy as np


def _dense_step(m, w, n_clip, alpha, v_supp):
    # identical arithmetic to fdsim.step, so fallback runs reproduce it
    w += alpha * (m @ w)
    max_abs = float(np.abs(w).max())
    clip_idx = -1
    x = w[:n_clip]
    over = np.abs(x) > v_supp
    if over.any():
        clip_idx = int(np.argmax(over))
        np.clip(x, -v_supp, v_supp, out=x)
        w[n_clip:][over] = 0.0
    return clip_idx, max_abs


def dense_chunk(m, w, scratch, alpha, v_supp, nsteps, n_clip):
    first = -1
    idx = -1
    max_abs = 0.0
    for s in range(nsteps):
        clip_idx, mx = _dense_step(m, w, n_clip, alpha, v_supp)
        if mx > max_abs:
            max_abs = mx
        if clip_idx >= 0 and first < 0:
            first = s
            idx = clip_idx
    return first, idx, max_abs


def dense_chunk_findhit(m, w, scratch, alpha, v_supp, nsteps, n_clip, x_ref, tol_sq):
    first = -1
    idx = -1
    hit = -1
    max_abs = 0.0
    for s in range(nsteps):
        clip_idx, mx = _dense_step(m, w, n_clip, alpha, v_supp)
        if mx > max_abs:
            max_abs = mx
        if clip_idx >= 0 and first < 0:
            first = s
            idx = clip_idx
        d = w[:n_clip] - x_ref
        if float(d @ d) < tol_sq:
            hit = s
            break
    return hit, first, idx, max_abs


def _struct_step(pdata, rows, cols, dangling, sigma, inv_n, u, lam, damp,
                 w, n, alpha, v_supp):
    x = w[:n]
    z = w[n:]
    y = np.bincount(rows, weights=pdata * x[cols], minlength=n)
    s_d = float(x[dangling].sum()) if dangling.size else 0.0
    y += sigma * (float(x.sum()) - s_d) + inv_n * s_d
    # materialize both increments from the pre-step state before mutating
    dx = 0.5 * z
    dz = u * (y - lam * x) - damp * z
    w[:n] += alpha * dx
    w[n:] += alpha * dz
    max_abs = float(np.abs(w).max())
    clip_idx = -1
    x = w[:n]
    over = np.abs(x) > v_supp
    if over.any():
        clip_idx = int(np.argmax(over))
        np.clip(x, -v_supp, v_supp, out=x)
        w[n:][over] = 0.0
    return clip_idx, max_abs


def struct_chunk(pdata, rows, cols, indptr, dangling, sigma, inv_n, u, lam,
                 damp, w, scratch, alpha, v_supp, nsteps):
    n = u.shape[0]
    first = -1
    idx = -1
    max_abs = 0.0
    for s in range(nsteps):
        clip_idx, mx = _struct_step(
            pdata, rows, cols, dangling, sigma, inv_n, u, lam, damp,
            w, n, alpha, v_supp,
        )
        if mx > max_abs:
            max_abs = mx
        if clip_idx >= 0 and first < 0:
            first = s
            idx = clip_idx
    return first, idx, max_abs


def struct_chunk_findhit(pdata, rows, cols, indptr, dangling, sigma, inv_n,
                         u, lam, damp, w, scratch, alpha, v_supp, nsteps,
                         x_ref, tol_sq):
    n = u.shape[0]
    first = -1
    idx = -1
    hit = -1
    max_abs = 0.0
    for s in range(nsteps):
        clip_idx, mx = _struct_step(
            pdata, rows, cols, dangling, sigma, inv_n, u, lam, damp,
            w, n, alpha, v_supp,
        )
        if mx > max_abs:
            max_abs = mx
        if clip_idx >= 0 and first < 0:
            first = s
            idx = clip_idx
        d = w[:n] - x_ref
        if float(d @ d) < tol_sq:
            hit = s
            break
    return hit, first, idx, max_abs
