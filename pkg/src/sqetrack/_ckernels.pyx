# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops. Mirrors ``_pykernels`` function by function."""

import numpy as np
from scipy.spatial.distance import cdist
from sqetrack._cem import batch_gaps, fit2  # noqa: F401  (re-exported)
cimport numpy as cnp
from libc.math cimport sqrt, INFINITY

cnp.import_array()


def lsa(double[:, ::1] cost):
    """Shortest augmenting path assignment for n_rows <= n_cols.

    Returns (col_of_row, u, v) with reduced costs cost - u[:, None] - v >= 0,
    tight on matched entries.
    """
    cdef Py_ssize_t n = cost.shape[0]
    cdef Py_ssize_t m = cost.shape[1]
    if n > m:
        raise ValueError("lsa needs n_rows <= n_cols")
    u_arr = np.zeros(n + 1)
    v_arr = np.zeros(m + 1)
    p_arr = np.zeros(m + 1, dtype=np.intp)
    way_arr = np.zeros(m + 1, dtype=np.intp)
    minv_arr = np.empty(m + 1)
    used_arr = np.empty(m + 1, dtype=np.uint8)
    cdef double[::1] u = u_arr
    cdef double[::1] v = v_arr
    cdef Py_ssize_t[::1] p = p_arr
    cdef Py_ssize_t[::1] way = way_arr
    cdef double[::1] minv = minv_arr
    cdef unsigned char[::1] used = used_arr
    cdef Py_ssize_t i, j, j0, j1, i0
    cdef double delta, cur
    with nogil:
        for i in range(1, n + 1):
            p[0] = i
            j0 = 0
            for j in range(m + 1):
                minv[j] = INFINITY
                used[j] = 0
            while True:
                used[j0] = 1
                i0 = p[j0]
                delta = INFINITY
                j1 = 0
                for j in range(1, m + 1):
                    if not used[j]:
                        cur = cost[i0 - 1, j - 1] - u[i0] - v[j]
                        if cur < minv[j]:
                            minv[j] = cur
                            way[j] = j0
                        if minv[j] < delta:
                            delta = minv[j]
                            j1 = j
                for j in range(m + 1):
                    if used[j]:
                        u[p[j]] += delta
                        v[j] -= delta
                    else:
                        minv[j] -= delta
                j0 = j1
                if p[j0] == 0:
                    break
            while True:
                j1 = way[j0]
                p[j0] = p[j1]
                j0 = j1
                if j0 == 0:
                    break
    col_of_row = np.full(n, -1, dtype=np.intp)
    for j in range(1, m + 1):
        if p_arr[j] != 0:
            col_of_row[p_arr[j] - 1] = j - 1
    return col_of_row, u_arr[1:].copy(), v_arr[1:].copy()


cdef inline double _row_dist(double[:, ::1] means, Py_ssize_t i, Py_ssize_t j) noexcept nogil:
    cdef Py_ssize_t c
    cdef double acc = 0.0, d
    for c in range(means.shape[1]):
        d = means[i, c] - means[j, c]
        acc += d * d
    return sqrt(acc)


cdef inline bint _disjoint(long[::1] first, long[::1] last,
                           Py_ssize_t i, Py_ssize_t j) noexcept nogil:
    return last[i] < first[j] or last[j] < first[i]


cdef void _refresh_row(double[:, ::1] dm, long[::1] first, long[::1] last,
                       unsigned char[::1] alive, double threshold, Py_ssize_t i,
                       double[::1] nnd, Py_ssize_t[::1] nn) noexcept nogil:
    cdef Py_ssize_t j, t = dm.shape[0]
    cdef double d
    nnd[i] = INFINITY
    nn[i] = -1
    for j in range(t):
        if j == i or not alive[j] or not _disjoint(first, last, i, j):
            continue
        d = dm[i, j]
        if d < threshold and d < nnd[i]:
            nnd[i] = d
            nn[i] = j


def greedy_merge(double[:, ::1] sums, double[::1] counts, long[::1] first,
                 long[::1] last, double threshold):
    """Greedy closest-pair merging of span-disjoint tracklets.

    Arrays are modified in place. Tracklets must be indexed in creation order so
    the lower index is the earlier tracklet. Returns the (absorber, absorbed) log.
    """
    cdef Py_ssize_t t = sums.shape[0]
    cdef Py_ssize_t i, j, a, b, best_i, c
    cdef double best, d
    if t < 2:
        return []
    means_arr = np.asarray(sums) / np.asarray(counts)[:, None]
    dm_arr = np.ascontiguousarray(cdist(means_arr, means_arr))
    cdef double[:, ::1] means = means_arr
    cdef double[:, ::1] dm = dm_arr
    alive_arr = np.ones(t, dtype=np.uint8)
    nnd_arr = np.full(t, np.inf)
    nn_arr = np.full(t, -1, dtype=np.intp)
    cdef unsigned char[::1] alive = alive_arr
    cdef double[::1] nnd = nnd_arr
    cdef Py_ssize_t[::1] nn = nn_arr
    log_ = []
    with nogil:
        for i in range(t):
            _refresh_row(dm, first, last, alive, threshold, i, nnd, nn)
    while True:
        best = INFINITY
        best_i = -1
        for i in range(t):
            if alive[i] and nnd[i] < best:
                best = nnd[i]
                best_i = i
        if best_i < 0:
            break
        a = best_i
        b = nn[best_i]
        if b < a:
            a, b = b, a
        log_.append((a, b))
        with nogil:
            for c in range(sums.shape[1]):
                sums[a, c] += sums[b, c]
            counts[a] += counts[b]
            for c in range(sums.shape[1]):
                means[a, c] = sums[a, c] / counts[a]
            if first[b] < first[a]:
                first[a] = first[b]
            if last[b] > last[a]:
                last[a] = last[b]
            alive[b] = 0
            nnd[b] = INFINITY
            nn[b] = -1
            for j in range(t):
                if alive[j] and j != a:
                    d = _row_dist(means, a, j)
                    dm[a, j] = d
                    dm[j, a] = d
            for i in range(t):
                if not alive[i] or i == a:
                    continue
                if nn[i] == a or nn[i] == b:
                    _refresh_row(dm, first, last, alive, threshold, i, nnd, nn)
                elif _disjoint(first, last, i, a):
                    d = dm[i, a]
                    if d < threshold and (d < nnd[i] or (d == nnd[i] and a < nn[i])):
                        nnd[i] = d
                        nn[i] = a
            _refresh_row(dm, first, last, alive, threshold, a, nnd, nn)
    return log_
