"""Relative needs entropy: divergences between needs distributions and trust."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from swarmsass.kernels import pairwise_js

EPS = 1e-9
LN2 = math.log(2.0)


def _as_dist(p) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 1 or p.size == 0:
        raise ValueError("a distribution is a non-empty 1-D vector")
    if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-6:
        raise ValueError(f"not a probability distribution: {p}")
    return p


def _kl_raw(p: np.ndarray, q: np.ndarray) -> float:
    mask = p > 0
    return float(np.sum(p[mask] * np.log(p[mask] / q[mask])))


def kl_divergence(p, q) -> float:
    """KL(p || q) in nats; ``q`` is floored at 1e-9 and renormalised."""
    p, q = _as_dist(p), _as_dist(q)
    if p.shape != q.shape:
        raise ValueError("distributions differ in length")
    q = np.maximum(q, EPS)
    q = q / q.sum()
    return max(_kl_raw(p, q), 0.0)


def js_divergence(p, q) -> float:
    """Jensen-Shannon divergence in nats, in ``[0, ln 2]``."""
    p, q = _as_dist(p), _as_dist(q)
    if p.shape != q.shape:
        raise ValueError("distributions differ in length")
    # KL against the midpoint written as log(2p / (p + q)), since the
    # midpoint itself underflows to zero for subnormal entries
    t = p + q
    a = 0.5 * float(np.sum(p[p > 0] * np.log(2.0 * p[p > 0] / t[p > 0])))
    b = 0.5 * float(np.sum(q[q > 0] * np.log(2.0 * q[q > 0] / t[q > 0])))
    # summing in a fixed order keeps js(p, q) == js(q, p) bit for bit
    lo, hi = min(a, b), max(a, b)
    return min(max(lo + hi, 0.0), LN2)


def trust(p, q) -> float:
    return 1.0 - js_divergence(p, q) / LN2


def trust_matrix(dists: Sequence) -> np.ndarray:
    """Pairwise trust; symmetric with unit diagonal."""
    arr = np.array([_as_dist(p) for p in dists])
    if arr.ndim != 2 or arr.shape[0] < 1:
        raise ValueError("need at least one distribution")
    js = np.minimum(pairwise_js(arr), LN2)
    tm = 1.0 - js / LN2
    tm = np.clip(np.triu(tm, 1), 0.0, 1.0)
    out = tm + tm.T
    np.fill_diagonal(out, 1.0)
    return out


def group_by_trust(tm, threshold: float, ids: Sequence[int] = None) -> list[list[int]]:
    """Connected components of the graph with an edge where trust >= threshold.

    Groups are sorted by their smallest member.
    """
    tm = np.asarray(tm, dtype=np.float64)
    n = tm.shape[0]
    ids = list(range(n)) if ids is None else list(ids)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if tm[i, j] >= threshold:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[max(ri, rj)] = min(ri, rj)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(ids[i])
    return sorted((sorted(g) for g in groups.values()), key=lambda g: g[0])


def group_distribution(dists: Sequence) -> np.ndarray:
    """Normalised mean of member distributions."""
    arr = np.array([_as_dist(p) for p in dists])
    mean = arr.mean(axis=0)
    return mean / mean.sum()
