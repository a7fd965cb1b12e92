"""Compiled per-center density scans.

Both kernels return, for every center ``i``, the largest value of
``(2d)**s / m(d)`` over distinct distances ``d`` to other points with
``lo < d <= hi``, where ``m(d)`` is the weight of points at distance
``< d - eps``.  The witness is the smallest point index realizing the best
distance.  Centers without an admissible distance get value ``-1``.
"""

import math

import numba
import numpy as np
from numba import njit, prange

# Prefer OpenMP or the built-in work queue over TBB, which may be too old.
numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]


@njit(cache=True)
def _sq_dists(X, i, d2):
    dim, n = X.shape
    for j in range(n):
        acc = 0.0
        for a in range(dim):
            t = X[a, j] - X[a, i]
            acc += t * t
        d2[j] = acc


@njit(cache=True)
def _scan_sorted_one(X, w, s, lo, hi, eps, i, d2):
    _sq_dists(X, i, d2)
    n = d2.shape[0]
    hi2 = hi * hi * (1.0 + 1e-12)
    m = 0
    idx = np.empty(n, np.int64)
    for j in range(n):
        if d2[j] <= hi2:
            idx[m] = j
            m += 1
    idx = idx[:m]
    dd = np.sqrt(d2[idx])
    order = np.argsort(dd, kind="mergesort")
    best, best_d, best_w = -1.0, 0.0, -1
    below = 0.0  # weight of points with distance < d - eps
    p = 0
    prev = -1.0
    for q in range(m):
        d = dd[order[q]]
        if d == prev:
            continue
        prev = d
        while p < m and dd[order[p]] < d - eps:
            below += w[idx[order[p]]]
            p += 1
        if d > lo and d <= hi and below > 0.0:
            h = (2.0 * d) ** s / below
            if h > best:
                best, best_d, best_w = h, d, idx[order[q]]
    return best, best_d, best_w


@njit(parallel=True, cache=True)
def scan_sorted(X, w, s, lo, hi, eps, nblocks):
    n = X.shape[1]
    val = np.full(n, -1.0)
    rad = np.zeros(n)
    wit = np.full(n, -1, np.int64)
    for blk in prange(nblocks):
        d2 = np.empty(n)
        for i in range(blk * n // nblocks, (blk + 1) * n // nblocks):
            val[i], rad[i], wit[i] = _scan_sorted_one(X, w, s, lo, hi, eps, i, d2)
    return val, rad, wit


@njit(cache=True)
def _mass_below(x, d2, w, cum, scale, nb, bid):
    # Weight of points at distance < x, for x possibly below the current bucket.
    bx = int(x * x * scale)
    if bx >= nb:
        bx = nb - 1
    total = cum[bx]
    for j in range(d2.shape[0]):
        if bid[j] == bx and math.sqrt(d2[j]) < x:
            total += w[j]
    return total


@njit(cache=True)
def _scan_bucketed_one(X, w, s, lo, hi, eps, i, nb, d2, bid, cnt, bmass, cum, bound, mem):
    _sq_dists(X, i, d2)
    n = d2.shape[0]
    hi2 = hi * hi * (1.0 + 1e-12)
    lo2 = lo * lo
    scale = nb / hi2
    cnt[:] = 0
    bmass[:] = 0.0
    for j in range(n):
        v = d2[j]
        b = -1
        if v <= hi2:
            b = int(v * scale)
            if b >= nb:
                b = nb - 1
            cnt[b] += 1
            bmass[b] += w[j]
        bid[j] = b
    cum[0] = 0.0
    for b in range(nb):
        cum[b + 1] = cum[b] + bmass[b]
    # Upper bound of the density over each bucket: largest radius over least mass.
    top = -1
    top_bound = -1.0
    for b in range(nb):
        up2 = (b + 1) / scale
        if cnt[b] > 0 and up2 > lo2:
            if up2 > hi2:
                up2 = hi2
            den = cum[b] if eps == 0.0 else cum[max(b - 1, 0)]
            bound[b] = np.inf if den <= 0.0 else (2.0 * math.sqrt(up2)) ** s / den
            if bound[b] > top_bound:
                top_bound = bound[b]
                top = b
        else:
            bound[b] = -1.0
    best, best_d, best_w = -1.0, 0.0, -1
    b = top
    while b >= 0:
        m = 0
        for j in range(n):
            if bid[j] == b:
                mem[m] = j
                m += 1
        dd = np.sqrt(d2[mem[:m]])
        order = np.argsort(dd, kind="mergesort")
        below = cum[b]
        p = 0
        prev = -1.0
        for q in range(m):
            d = dd[order[q]]
            if d == prev:
                continue
            prev = d
            x = d - eps
            if eps > 0.0 and int(x * x * scale) < b:
                mass = _mass_below(x, d2, w, cum, scale, nb, bid)
            else:
                while p < m and dd[order[p]] < x:
                    below += w[mem[order[p]]]
                    p += 1
                mass = below
            if d > lo and d <= hi and mass > 0.0:
                h = (2.0 * d) ** s / mass
                if h > best:
                    best, best_d, best_w = h, d, mem[order[q]]
        bound[b] = -1.0
        nxt = -1
        nv = best
        for bb in range(nb):
            if bound[bb] > nv:
                nv = bound[bb]
                nxt = bb
        b = nxt
    return best, best_d, best_w


@njit(parallel=True, cache=True)
def scan_bucketed(X, w, s, lo, hi, eps, nblocks, nb):
    n = X.shape[1]
    val = np.full(n, -1.0)
    rad = np.zeros(n)
    wit = np.full(n, -1, np.int64)
    for blk in prange(nblocks):
        d2 = np.empty(n)
        bid = np.empty(n, np.int64)
        mem = np.empty(n, np.int64)
        cnt = np.zeros(nb, np.int64)
        bmass = np.zeros(nb)
        cum = np.zeros(nb + 1)
        bound = np.empty(nb)
        for i in range(blk * n // nblocks, (blk + 1) * n // nblocks):
            val[i], rad[i], wit[i] = _scan_bucketed_one(
                X, w, s, lo, hi, eps, i, nb, d2, bid, cnt, bmass, cum, bound, mem)
    return val, rad, wit
