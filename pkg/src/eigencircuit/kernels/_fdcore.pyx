# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled finite-difference stepping kernels.

Same call/return contract as numpy_backend; see that module's docstring.
The GIL is released for the whole chunk, so independent simulations can
run on real threads.
"""

from libc.math cimport fabs

cimport numpy as cnp

cnp.import_array()

ctypedef cnp.int64_t i64


cdef struct StepResult:
    Py_ssize_t clip_idx
    double max_abs


cdef inline StepResult _dense_step(const double[:, ::1] m, double[::1] w,
                                   double[::1] scratch, double alpha,
                                   double v_supp, Py_ssize_t n_clip) noexcept nogil:
    cdef Py_ssize_t dim = w.shape[0]
    cdef Py_ssize_t i, j
    cdef double acc, wi, mag
    cdef StepResult res
    res.clip_idx = -1
    res.max_abs = 0.0
    for i in range(dim):
        acc = 0.0
        for j in range(dim):
            acc += m[i, j] * w[j]
        scratch[i] = acc
    for i in range(dim):
        wi = w[i] + alpha * scratch[i]
        w[i] = wi
        mag = fabs(wi)
        if mag > res.max_abs:
            res.max_abs = mag
    for i in range(n_clip):
        if w[i] > v_supp:
            w[i] = v_supp
            w[n_clip + i] = 0.0
            if res.clip_idx < 0:
                res.clip_idx = i
        elif w[i] < -v_supp:
            w[i] = -v_supp
            w[n_clip + i] = 0.0
            if res.clip_idx < 0:
                res.clip_idx = i
    return res


cdef inline StepResult _struct_step(const double[::1] pdata, const i64[::1] rows,
                                    const i64[::1] indptr, const i64[::1] dangling,
                                    double sigma, double inv_n,
                                    const double[::1] u, const double[::1] lam,
                                    const double[::1] damp, double[::1] w,
                                    double[::1] scratch, double alpha,
                                    double v_supp) noexcept nogil:
    cdef Py_ssize_t n = u.shape[0]
    cdef Py_ssize_t nd = dangling.shape[0]
    cdef Py_ssize_t i, j, k
    cdef double s_all = 0.0, s_d = 0.0, base, xj, xi, zi, wx, wz, mag
    cdef StepResult res
    res.clip_idx = -1
    res.max_abs = 0.0
    for i in range(n):
        s_all += w[i]
    for i in range(nd):
        s_d += w[dangling[i]]
    base = sigma * (s_all - s_d) + inv_n * s_d
    for i in range(n):
        scratch[i] = base
    for j in range(n):
        xj = w[j]
        if xj != 0.0:
            for k in range(indptr[j], indptr[j + 1]):
                scratch[rows[k]] += pdata[k] * xj
    for i in range(n):
        xi = w[i]
        zi = w[n + i]
        wx = xi + alpha * (0.5 * zi)
        wz = zi + alpha * (u[i] * (scratch[i] - lam[i] * xi) - damp[i] * zi)
        mag = fabs(wx)
        if mag > res.max_abs:
            res.max_abs = mag
        mag = fabs(wz)
        if mag > res.max_abs:
            res.max_abs = mag
        if wx > v_supp:
            wx = v_supp
            wz = 0.0
            if res.clip_idx < 0:
                res.clip_idx = i
        elif wx < -v_supp:
            wx = -v_supp
            wz = 0.0
            if res.clip_idx < 0:
                res.clip_idx = i
        w[i] = wx
        w[n + i] = wz
    return res


def dense_chunk(const double[:, ::1] m, double[::1] w, double[::1] scratch,
                double alpha, double v_supp, Py_ssize_t nsteps, Py_ssize_t n_clip):
    cdef Py_ssize_t s, first = -1, idx = -1
    cdef double max_abs = 0.0
    cdef StepResult res
    with nogil:
        for s in range(nsteps):
            res = _dense_step(m, w, scratch, alpha, v_supp, n_clip)
            if res.max_abs > max_abs:
                max_abs = res.max_abs
            if res.clip_idx >= 0 and first < 0:
                first = s
                idx = res.clip_idx
    return first, idx, max_abs


def dense_chunk_findhit(const double[:, ::1] m, double[::1] w, double[::1] scratch,
                        double alpha, double v_supp, Py_ssize_t nsteps,
                        Py_ssize_t n_clip, const double[::1] x_ref, double tol_sq):
    cdef Py_ssize_t s, i, first = -1, idx = -1, hit = -1
    cdef double max_abs = 0.0, err, d
    cdef StepResult res
    with nogil:
        for s in range(nsteps):
            res = _dense_step(m, w, scratch, alpha, v_supp, n_clip)
            if res.max_abs > max_abs:
                max_abs = res.max_abs
            if res.clip_idx >= 0 and first < 0:
                first = s
                idx = res.clip_idx
            err = 0.0
            for i in range(n_clip):
                d = w[i] - x_ref[i]
                err += d * d
            if err < tol_sq:
                hit = s
                break
    return hit, first, idx, max_abs


def struct_chunk(const double[::1] pdata, const i64[::1] rows, const i64[::1] cols,
                 const i64[::1] indptr, const i64[::1] dangling, double sigma,
                 double inv_n, const double[::1] u, const double[::1] lam,
                 const double[::1] damp, double[::1] w, double[::1] scratch,
                 double alpha, double v_supp, Py_ssize_t nsteps):
    # cols is unused (the CSC walk uses indptr); kept for signature parity
    cdef Py_ssize_t s, first = -1, idx = -1
    cdef double max_abs = 0.0
    cdef StepResult res
    with nogil:
        for s in range(nsteps):
            res = _struct_step(pdata, rows, indptr, dangling, sigma, inv_n,
                               u, lam, damp, w, scratch, alpha, v_supp)
            if res.max_abs > max_abs:
                max_abs = res.max_abs
            if res.clip_idx >= 0 and first < 0:
                first = s
                idx = res.clip_idx
    return first, idx, max_abs


def struct_chunk_findhit(const double[::1] pdata, const i64[::1] rows,
                         const i64[::1] cols, const i64[::1] indptr,
                         const i64[::1] dangling, double sigma, double inv_n,
                         const double[::1] u, const double[::1] lam,
                         const double[::1] damp, double[::1] w, double[::1] scratch,
                         double alpha, double v_supp, Py_ssize_t nsteps,
                         const double[::1] x_ref, double tol_sq):
    cdef Py_ssize_t s, i, first = -1, idx = -1, hit = -1
    cdef Py_ssize_t n = u.shape[0]
    cdef double max_abs = 0.0, err, d
    cdef StepResult res
    with nogil:
        for s in range(nsteps):
            res = _struct_step(pdata, rows, indptr, dangling, sigma, inv_n,
                               u, lam, damp, w, scratch, alpha, v_supp)
            if res.max_abs > max_abs:
                max_abs = res.max_abs
            if res.clip_idx >= 0 and first < 0:
                first = s
                idx = res.clip_idx
            err = 0.0
            for i in range(n):
                d = w[i] - x_ref[i]
                err += d * d
            if err < tol_sq:
                hit = s
                break
    return hit, first, idx, max_abs
