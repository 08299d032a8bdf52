"""Pure numpy implementations of the hot loops.

Used when the compiled extension is unavailable or ``SQETRACK_PURE_PYTHON`` is
set. Signatures and tie-breaking match ``_ckernels`` exactly; results agree up
to floating-point summation order.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.spatial.distance import cdist

_LOG_2PI = math.log(2.0 * math.pi)


def _quantile_sorted(s: np.ndarray, q: float) -> float:
    n = s.shape[0]
    pos = q * (n - 1)
    lo = int(math.floor(pos))
    frac = pos - lo
    if lo + 1 >= n:
        return float(s[n - 1])
    return float(s[lo] + frac * (s[lo + 1] - s[lo]))


_W_MIN = 1e-300


def _em_pass(x, mu1, mu2, var1, var2, w1, w2):
    """Mean log-likelihood plus (n1, s1, q1, n2, s2, q2) sufficient statistics."""
    c1 = math.log(max(w1, _W_MIN)) - 0.5 * (_LOG_2PI + math.log(var1))
    c2 = math.log(max(w2, _W_MIN)) - 0.5 * (_LOG_2PI + math.log(var2))
    l1 = c1 - (x - mu1) ** 2 * (0.5 / var1)
    l2 = c2 - (x - mu2) ** 2 * (0.5 / var2)
    d = l2 - l1
    e = np.exp(-np.abs(d))
    inv = 1.0 / (1.0 + e)
    pos = d >= 0
    r2 = np.where(pos, inv, e * inv)
    r1 = np.where(pos, e * inv, inv)
    ll = float((np.maximum(l1, l2) + np.log(1.0 + e)).mean())
    x2 = x * x
    acc = (r1.sum(), (r1 * x).sum(), (r1 * x2).sum(), r2.sum(), (r2 * x).sum(), (r2 * x2).sum())
    return ll, [float(a) for a in acc]


def _fit2(x: np.ndarray, tol: float, max_iter: int, var_floor: float, keep_history: bool):
    n = x.shape[0]
    s = np.sort(x)
    if s[0] == s[-1]:
        ll = -0.5 * (_LOG_2PI + math.log(var_floor))
        return (float(s[0]), float(s[0]), var_floor, var_floor, 0.5, 0.5, ll, 0, True,
                np.array([ll]) if keep_history else None)
    mu1 = _quantile_sorted(s, 0.25)
    mu2 = _quantile_sorted(s, 0.75)
    if mu1 == mu2:
        mu1, mu2 = float(s[0]), float(s[-1])
    # EM runs on centred data; means are shifted back at the end
    shift = float(x.sum()) / n
    xc = x - shift
    var = float((xc * xc).sum()) / n
    mu1 -= shift
    mu2 -= shift
    var1 = var2 = max(var / 4.0, var_floor)
    w1 = w2 = 0.5
    history = []
    prev = 0.0
    it = 0
    converged = False
    while True:
        ll, (n1, s1, q1, n2, s2, q2) = _em_pass(xc, mu1, mu2, var1, var2, w1, w2)
        history.append(ll)
        if len(history) > 1 and ll - prev < tol:
            converged = True
            break
        if it >= max_iter:
            break
        prev = ll
        if n1 > 0:
            mu1 = s1 / n1
            var1 = max(q1 / n1 - mu1 * mu1, var_floor)
        if n2 > 0:
            mu2 = s2 / n2
            var2 = max(q2 / n2 - mu2 * mu2, var_floor)
        w2 = n2 / (n1 + n2)
        w1 = 1.0 - w2
        it += 1
    return (mu1 + shift, mu2 + shift, var1, var2, w1, w2, ll, it, converged,
            np.asarray(history) if keep_history else None)


def fit2(x, tol, max_iter, var_floor):
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.shape[0] < 1:
        raise ValueError("empty sample")
    return _fit2(x, tol, max_iter, var_floor, True)


def batch_gaps(feats, offsets, tasks, tol, max_iter, var_floor):
    gaps = np.empty(len(tasks), dtype=np.float64)
    for t, (a, b) in enumerate(tasks):
        fa = feats[offsets[a]:offsets[a + 1]]
        if a == b:
            iu, ju = np.triu_indices(fa.shape[0], k=1)
            d = np.sqrt(((fa[iu] - fa[ju]) ** 2).sum(axis=1))
        else:
            fb = feats[offsets[b]:offsets[b + 1]]
            d = np.sqrt(((fa[:, None, :] - fb[None, :, :]) ** 2).sum(axis=2)).ravel()
        res = _fit2(d, tol, max_iter, var_floor, False)
        gaps[t] = abs(res[1] - res[0])
    return gaps


def lsa(cost):
    """Shortest augmenting path assignment (rows <= cols), numpy-vectorised."""
    cost = np.asarray(cost, dtype=np.float64)
    n, m = cost.shape
    if n > m:
        raise ValueError("lsa needs n_rows <= n_cols")
    u = np.zeros(n + 1)
    v = np.zeros(m + 1)
    p = np.zeros(m + 1, dtype=np.intp)
    way = np.zeros(m + 1, dtype=np.intp)
    # 1-indexed rows/cols; column 0 is the virtual source
    a = np.zeros((n + 1, m + 1))
    a[1:, 1:] = cost
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = np.full(m + 1, np.inf)
        used = np.zeros(m + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = p[j0]
            free = ~used
            free[0] = False
            cur = a[i0] - u[i0] - v
            upd = free & (cur < minv)
            minv[upd] = cur[upd]
            way[upd] = j0
            cand = np.where(free, minv, np.inf)
            j1 = int(np.argmin(cand[1:])) + 1
            delta = cand[j1]
            u[p[used]] += delta
            v[used] -= delta
            minv[~used] -= delta
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
        if p[j] != 0:
            col_of_row[p[j] - 1] = j - 1
    return col_of_row, u[1:].copy(), v[1:].copy()


def greedy_merge(sums, counts, first, last, threshold):
    """Greedy closest-pair merging of span-disjoint tracklets (in place).

    Same contract as the compiled kernel: the lexicographically smallest
    (i, j) among equally close pairs merges first, i absorbs j.
    """
    t = sums.shape[0]
    log_ = []
    if t < 2:
        return log_
    alive = np.ones(t, dtype=bool)
    means = sums / counts[:, None]
    full = cdist(means, means)

    def masked(i, d):
        ok = alive & ((last[i] < first) | (last < first[i])) & (d < threshold)
        ok[i] = False
        return np.where(ok, d, np.inf)

    dist = np.empty((t, t))
    for i in range(t):
        dist[i] = masked(i, full[i])
    dist[np.tril_indices(t)] = np.inf
    while True:
        k = int(np.argmin(dist))
        a, b = divmod(k, t)
        if not np.isfinite(dist[a, b]):
            break
        log_.append((a, b))
        sums[a] += sums[b]
        counts[a] += counts[b]
        means[a] = sums[a] / counts[a]
        first[a] = min(first[a], first[b])
        last[a] = max(last[a], last[b])
        alive[b] = False
        dist[b, :] = np.inf
        dist[:, b] = np.inf
        r = masked(a, np.sqrt(((means - means[a]) ** 2).sum(axis=1)))
        dist[a, a + 1:] = r[a + 1:]
        dist[:a, a] = r[:a]
    return log_
