# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled EM for the two-component 1-D mixture, plus batched distance fits.

Built with -ffast-math (vectorised exp/log); kept apart from the assignment and
merge kernels, which rely on IEEE infinities.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport log, sqrt, floor, fabs
from libc.stdlib cimport malloc, free, qsort

cnp.import_array()

cdef extern from "_em_pass.h":
    double sqe_em_pass(const double* x, long n, double mu1, double mu2,
                       double var1, double var2, double w1, double w2,
                       double* acc) nogil

# smallest weight passed to log(); fast-math assumes finite values
cdef double W_MIN = 1e-300


cdef int _cmp_double(const void* a, const void* b) noexcept nogil:
    cdef double x = (<double*>a)[0]
    cdef double y = (<double*>b)[0]
    if x < y:
        return -1
    if x > y:
        return 1
    return 0


cdef double _quantile_sorted(double* s, Py_ssize_t n, double q) noexcept nogil:
    cdef double pos = q * (n - 1)
    cdef Py_ssize_t lo = <Py_ssize_t>floor(pos)
    cdef double frac = pos - lo
    if lo + 1 >= n:
        return s[n - 1]
    return s[lo] + frac * (s[lo + 1] - s[lo])


cdef struct FitOut:
    double mu1, mu2, var1, var2, w1, w2, ll
    int n_iter
    int converged


cdef FitOut _fit2(double* x, double* xc, Py_ssize_t n, double tol, int max_iter,
                  double var_floor, double* history) noexcept nogil:
    """EM with deterministic initialisation.

    ``xc`` is scratch of length n (sorted copy, then centred data). ``history``
    may be NULL, otherwise it needs max_iter + 1 slots.
    """
    cdef FitOut out
    cdef Py_ssize_t i
    cdef double shift = 0.0, var = 0.0, t
    cdef double acc[6]
    for i in range(n):
        xc[i] = x[i]
    qsort(xc, n, sizeof(double), _cmp_double)
    if xc[0] == xc[n - 1]:
        out.mu1 = xc[0]
        out.mu2 = xc[0]
        out.var1 = var_floor
        out.var2 = var_floor
        out.w1 = 0.5
        out.w2 = 0.5
        out.ll = -0.5 * (1.8378770664093453 + log(var_floor))
        out.n_iter = 0
        out.converged = 1
        if history != NULL:
            history[0] = out.ll
        return out

    cdef double mu1 = _quantile_sorted(xc, n, 0.25)
    cdef double mu2 = _quantile_sorted(xc, n, 0.75)
    if mu1 == mu2:
        mu1 = xc[0]
        mu2 = xc[n - 1]
    for i in range(n):
        shift += x[i]
    shift /= n
    for i in range(n):
        t = x[i] - shift
        xc[i] = t
        var += t * t
    var /= n
    mu1 -= shift
    mu2 -= shift

    cdef double var1 = var / 4.0
    if var1 < var_floor:
        var1 = var_floor
    cdef double var2 = var1
    cdef double w1 = 0.5, w2 = 0.5
    cdef double ll = 0.0, prev = 0.0
    cdef int it = 0, conv = 0, k = 0

    while True:
        ll = sqe_em_pass(xc, n, mu1, mu2, var1, var2,
                         w1 if w1 > W_MIN else W_MIN,
                         w2 if w2 > W_MIN else W_MIN, acc)
        if history != NULL:
            history[k] = ll
        if k > 0 and ll - prev < tol:
            conv = 1
            break
        if it >= max_iter:
            break
        prev = ll
        k += 1
        if acc[0] > 0:
            mu1 = acc[1] / acc[0]
            var1 = acc[2] / acc[0] - mu1 * mu1
            if var1 < var_floor:
                var1 = var_floor
        if acc[3] > 0:
            mu2 = acc[4] / acc[3]
            var2 = acc[5] / acc[3] - mu2 * mu2
            if var2 < var_floor:
                var2 = var_floor
        w2 = acc[3] / (acc[0] + acc[3])
        w1 = 1.0 - w2
        it += 1

    out.mu1 = mu1 + shift
    out.mu2 = mu2 + shift
    out.var1 = var1
    out.var2 = var2
    out.w1 = w1
    out.w2 = w2
    out.ll = ll
    out.n_iter = it
    out.converged = conv
    return out


def fit2(double[::1] x, double tol, int max_iter, double var_floor):
    cdef Py_ssize_t n = x.shape[0]
    if n < 1:
        raise ValueError("empty sample")
    hist = np.empty(max_iter + 1, dtype=np.float64)
    cdef double[::1] h = hist
    cdef double* xc = <double*>malloc(n * sizeof(double))
    cdef FitOut out
    if xc == NULL:
        raise MemoryError()
    with nogil:
        out = _fit2(&x[0], xc, n, tol, max_iter, var_floor, &h[0])
    free(xc)
    return (out.mu1, out.mu2, out.var1, out.var2, out.w1, out.w2, out.ll,
            out.n_iter, bool(out.converged), hist[:out.n_iter + 1].copy())


def batch_gaps(double[:, ::1] feats, long[::1] offsets, long[:, ::1] tasks,
               double tol, int max_iter, double var_floor):
    """|mu2 - mu1| of the mixture fitted to each task's distances.

    Task (a, a) uses all unordered pairs inside trajectory a, task (a, b) all
    cross pairs; rows of ``feats`` for trajectory k are offsets[k]:offsets[k+1].
    Every task must have at least one pair.
    """
    cdef Py_ssize_t n_tasks = tasks.shape[0]
    cdef Py_ssize_t dim = feats.shape[1]
    cdef Py_ssize_t cap = 1, t, a, b, la, lb, i, j, m, c
    for t in range(n_tasks):
        a = tasks[t, 0]
        b = tasks[t, 1]
        la = offsets[a + 1] - offsets[a]
        lb = offsets[b + 1] - offsets[b]
        m = la * (la - 1) // 2 if a == b else la * lb
        if m < 1:
            raise ValueError(f"task {t} has no pairs")
        if m > cap:
            cap = m
    gaps = np.empty(n_tasks, dtype=np.float64)
    cdef double[::1] g = gaps
    cdef double* buf = <double*>malloc(cap * sizeof(double))
    cdef double* xc = <double*>malloc(cap * sizeof(double))
    cdef double acc2, d
    cdef FitOut out
    if buf == NULL or xc == NULL:
        free(buf)
        free(xc)
        raise MemoryError()
    with nogil:
        for t in range(n_tasks):
            a = tasks[t, 0]
            b = tasks[t, 1]
            m = 0
            for i in range(offsets[a], offsets[a + 1]):
                for j in range(i + 1 if a == b else offsets[b], offsets[b + 1]):
                    acc2 = 0.0
                    for c in range(dim):
                        d = feats[i, c] - feats[j, c]
                        acc2 += d * d
                    buf[m] = sqrt(acc2)
                    m += 1
            out = _fit2(buf, xc, m, tol, max_iter, var_floor, NULL)
            g[t] = fabs(out.mu2 - out.mu1)
    free(buf)
    free(xc)
    return gaps
