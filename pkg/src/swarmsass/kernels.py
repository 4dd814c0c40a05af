"""Hot numeric kernels.

Every kernel exists twice: a loop version compiled with numba and a
vectorised numpy version.  The public names dispatch on
``swarmsass._jit.USE_NUMBA``; both variants stay importable so tests can
check they agree and ``benchmarks/bench_kernels.py`` can time them.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from swarmsass._jit import USE_NUMBA, njit

# 4-neighbourhood in the fixed expansion order used everywhere: E, W, N, S.
NEIGHBOURS = ((1, 0), (-1, 0), (0, 1), (0, -1))

MAX_PERMUTATION_N = 10


# ---------------------------------------------------------------------------
# breadth-first distance field
# ---------------------------------------------------------------------------


@njit(cache=True)
def bfs_distances_numba(free, sx, sy):
    w, h = free.shape
    dist = np.full((w, h), -1, dtype=np.int64)
    if not free[sx, sy]:
        return dist
    qx = np.empty(w * h, dtype=np.int64)
    qy = np.empty(w * h, dtype=np.int64)
    head = 0
    tail = 1
    qx[0] = sx
    qy[0] = sy
    dist[sx, sy] = 0
    dxs = (1, -1, 0, 0)
    dys = (0, 0, 1, -1)
    while head < tail:
        x = qx[head]
        y = qy[head]
        head += 1
        d = dist[x, y] + 1
        for k in range(4):
            nx = x + dxs[k]
            ny = y + dys[k]
            if nx < 0 or ny < 0 or nx >= w or ny >= h:
                continue
            if not free[nx, ny] or dist[nx, ny] >= 0:
                continue
            dist[nx, ny] = d
            qx[tail] = nx
            qy[tail] = ny
            tail += 1
    return dist


def bfs_distances_numpy(free, sx, sy):
    free = np.asarray(free, dtype=bool)
    dist = np.full(free.shape, -1, dtype=np.int64)
    if not free[sx, sy]:
        return dist
    dist[sx, sy] = 0
    frontier = np.zeros(free.shape, dtype=bool)
    frontier[sx, sy] = True
    d = 0
    while frontier.any():
        d += 1
        grown = np.zeros_like(frontier)
        grown[1:, :] |= frontier[:-1, :]
        grown[:-1, :] |= frontier[1:, :]
        grown[:, 1:] |= frontier[:, :-1]
        grown[:, :-1] |= frontier[:, 1:]
        grown &= free & (dist < 0)
        dist[grown] = d
        frontier = grown
    return dist


def bfs_distances(free, start):
    """Shortest 4-connected step counts from ``start``; -1 where unreachable.

    ``free`` is a boolean array indexed ``[x, y]``.
    """
    free = np.ascontiguousarray(free, dtype=np.bool_)
    sx, sy = int(start[0]), int(start[1])
    if USE_NUMBA:
        return bfs_distances_numba(free, sx, sy)
    return bfs_distances_numpy(free, sx, sy)


# ---------------------------------------------------------------------------
# exhaustive minimum-cost permutation
# ---------------------------------------------------------------------------


@njit(cache=True)
def min_cost_permutation_numba(cost):
    n = cost.shape[0]
    perm = np.arange(n)
    best = perm.copy()
    best_cost = cost[0, 0] * 0
    for i in range(n):
        best_cost += cost[i, perm[i]]
    while True:
        i = n - 2
        while i >= 0 and perm[i] >= perm[i + 1]:
            i -= 1
        if i < 0:
            break
        j = n - 1
        while perm[j] <= perm[i]:
            j -= 1
        tmp = perm[i]
        perm[i] = perm[j]
        perm[j] = tmp
        lo = i + 1
        hi = n - 1
        while lo < hi:
            tmp = perm[lo]
            perm[lo] = perm[hi]
            perm[hi] = tmp
            lo += 1
            hi -= 1
        c = cost[0, 0] * 0
        for r in range(n):
            c += cost[r, perm[r]]
        if c < best_cost:
            best_cost = c
            best[:] = perm
    return best, best_cost


def min_cost_permutation_numpy(cost):
    cost = np.asarray(cost)
    n = cost.shape[0]
    perms = np.array(list(itertools.permutations(range(n))), dtype=np.int64)
    totals = np.zeros(len(perms), dtype=cost.dtype)
    for r in range(n):
        totals += cost[r, perms[:, r]]
    k = int(np.argmin(totals))
    return perms[k].copy(), totals[k]


def min_cost_permutation(cost):
    """Lexicographically first permutation ``p`` minimising ``sum cost[i, p[i]]``.

    Exhaustive over all ``n!`` permutations, so ``n`` is capped at
    ``MAX_PERMUTATION_N``.
    """
    cost = np.ascontiguousarray(cost)
    n = cost.shape[0]
    if cost.ndim != 2 or cost.shape[1] != n:
        raise ValueError(f"cost must be square, got shape {cost.shape}")
    if n > MAX_PERMUTATION_N:
        raise ValueError(f"exhaustive search limited to n <= {MAX_PERMUTATION_N}")
    if n == 0:
        return np.zeros(0, dtype=np.int64), cost.dtype.type(0)
    if USE_NUMBA:
        return min_cost_permutation_numba(cost)
    return min_cost_permutation_numpy(cost)


# ---------------------------------------------------------------------------
# fictitious play for two-player zero-sum games (row maximises)
# ---------------------------------------------------------------------------


@njit(cache=True)
def fictitious_play_numba(payoff, iterations):
    m, n = payoff.shape
    row_counts = np.zeros(m)
    col_counts = np.zeros(n)
    row_acc = np.zeros(m)
    col_acc = np.zeros(n)
    for _ in range(iterations):
        i = 0
        for k in range(1, m):
            if row_acc[k] > row_acc[i]:
                i = k
        j = 0
        for k in range(1, n):
            if col_acc[k] < col_acc[j]:
                j = k
        row_counts[i] += 1.0
        col_counts[j] += 1.0
        for k in range(m):
            row_acc[k] += payoff[k, j]
        for k in range(n):
            col_acc[k] += payoff[i, k]
    return row_counts / iterations, col_counts / iterations


def fictitious_play_numpy(payoff, iterations):
    payoff = np.asarray(payoff, dtype=np.float64)
    m, n = payoff.shape
    row_counts = np.zeros(m)
    col_counts = np.zeros(n)
    row_acc = np.zeros(m)
    col_acc = np.zeros(n)
    for _ in range(iterations):
        i = int(np.argmax(row_acc))
        j = int(np.argmin(col_acc))
        row_counts[i] += 1.0
        col_counts[j] += 1.0
        row_acc += payoff[:, j]
        col_acc += payoff[i, :]
    return row_counts / iterations, col_counts / iterations


def fictitious_play(payoff, iterations):
    """Empirical frequencies after ``iterations`` rounds of simultaneous play."""
    payoff = np.ascontiguousarray(payoff, dtype=np.float64)
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    if USE_NUMBA:
        return fictitious_play_numba(payoff, int(iterations))
    return fictitious_play_numpy(payoff, int(iterations))


# ---------------------------------------------------------------------------
# pairwise Jensen-Shannon divergence (nats)
# ---------------------------------------------------------------------------


@njit(cache=True)
def pairwise_js_numba(dists):
    n, k = dists.shape
    out = np.zeros((n, n))
    for a in range(n):
        for b in range(a + 1, n):
            s = 0.0
            for i in range(k):
                p = dists[a, i]
                q = dists[b, i]
                # 2p / (p + q) rather than p / m: m underflows for subnormal inputs
                t = p + q
                if p > 0.0:
                    s += 0.5 * p * math.log(2.0 * p / t)
                if q > 0.0:
                    s += 0.5 * q * math.log(2.0 * q / t)
            if s < 0.0:
                s = 0.0
            out[a, b] = s
            out[b, a] = s
    return out


def pairwise_js_numpy(dists):
    dists = np.asarray(dists, dtype=np.float64)
    p = dists[:, None, :]
    q = dists[None, :, :]
    t = p + q
    safe_t = np.where(t > 0.0, t, 1.0)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        tp = np.where(p > 0.0, 0.5 * p * np.log(2.0 * np.where(p > 0.0, p, 1.0) / safe_t), 0.0)
        tq = np.where(q > 0.0, 0.5 * q * np.log(2.0 * np.where(q > 0.0, q, 1.0) / safe_t), 0.0)
    full = np.maximum((tp + tq).sum(axis=2), 0.0)
    upper = np.triu(full, 1)
    return upper + upper.T


def pairwise_js(dists):
    """Symmetric matrix of JS divergences between the rows of ``dists``."""
    dists = np.ascontiguousarray(dists, dtype=np.float64)
    if dists.ndim != 2:
        raise ValueError("expected a 2-D array of distributions")
    if USE_NUMBA:
        return pairwise_js_numba(dists)
    return pairwise_js_numpy(dists)


# ---------------------------------------------------------------------------
# 64-bit FNV-1a
# ---------------------------------------------------------------------------

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF


@njit(cache=True)
def fnv1a64_numba(data):
    h = np.uint64(FNV_OFFSET)
    prime = np.uint64(FNV_PRIME)
    for b in data:
        h = h ^ np.uint64(b)
        h = h * prime
    return h


def fnv1a64_python(data: bytes) -> int:
    h = FNV_OFFSET
    for b in data:
        h = ((h ^ b) * FNV_PRIME) & _MASK64
    return h


def fnv1a64(data: bytes) -> int:
    """64-bit FNV-1a digest of ``data``."""
    if USE_NUMBA:
        return int(fnv1a64_numba(np.frombuffer(data, dtype=np.uint8)))
    return fnv1a64_python(data)
