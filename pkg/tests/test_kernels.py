import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from swarmsass import kernels


def brute_bfs(free, start):
    w, h = free.shape
    dist = -np.ones((w, h), dtype=np.int64)
    if not free[start]:
        return dist
    dist[start] = 0
    frontier = [start]
    while frontier:
        nxt = []
        for x, y in frontier:
            for dx, dy in kernels.NEIGHBOURS:
                c = (x + dx, y + dy)
                if 0 <= c[0] < w and 0 <= c[1] < h and free[c] and dist[c] < 0:
                    dist[c] = dist[x, y] + 1
                    nxt.append(c)
        frontier = nxt
    return dist


@settings(max_examples=60, deadline=None)
@given(arrays(np.bool_, st.tuples(st.integers(1, 9), st.integers(1, 9))), st.data())
def test_bfs_variants_agree_with_brute_force(free, data):
    sx = data.draw(st.integers(0, free.shape[0] - 1))
    sy = data.draw(st.integers(0, free.shape[1] - 1))
    want = brute_bfs(free, (sx, sy))
    np.testing.assert_array_equal(kernels.bfs_distances_numpy(free, sx, sy), want)
    np.testing.assert_array_equal(kernels.bfs_distances_numba(free, sx, sy), want)


def test_bfs_dispatch_both_backends(backend):
    free = np.ones((3, 3), dtype=bool)
    free[1, 1] = False
    d = kernels.bfs_distances(free, (0, 0))
    assert d[2, 2] == 4 and d[1, 1] == -1


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6).flatmap(
    lambda n: arrays(np.int64, (n, n), elements=st.integers(0, 9))))
def test_min_cost_permutation_variants_agree(cost):
    n = cost.shape[0]
    totals = {p: sum(cost[i, p[i]] for i in range(n)) for p in itertools.permutations(range(n))}
    best = min(totals.values())
    first = min(p for p, t in totals.items() if t == best)
    for fn in (kernels.min_cost_permutation_numba, kernels.min_cost_permutation_numpy):
        perm, total = fn(cost)
        assert tuple(int(v) for v in perm) == first
        assert total == best


def test_min_cost_permutation_limits(backend):
    perm, total = kernels.min_cost_permutation(np.zeros((0, 0), dtype=np.int64))
    assert len(perm) == 0 and total == 0
    with pytest.raises(ValueError):
        kernels.min_cost_permutation(np.zeros((11, 11)))
    with pytest.raises(ValueError):
        kernels.min_cost_permutation(np.zeros((2, 3)))


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 5), st.integers(1, 5)),
              elements=st.integers(-5, 5).map(float)),
       st.integers(1, 300))
def test_fictitious_play_variants_identical(payoff, iterations):
    a = kernels.fictitious_play_numba(payoff, iterations)
    b = kernels.fictitious_play_numpy(payoff, iterations)
    np.testing.assert_array_equal(a[0], b[0])
    np.testing.assert_array_equal(a[1], b[1])
    assert a[0].sum() == pytest.approx(1.0) and a[1].sum() == pytest.approx(1.0)


def test_fictitious_play_rejects_zero_iterations(backend):
    with pytest.raises(ValueError):
        kernels.fictitious_play(np.eye(2), 0)


def _dists(draw_n, k, seed):
    rng = np.random.default_rng(seed)
    d = rng.random((draw_n, k))
    d[rng.random((draw_n, k)) < 0.3] = 0.0
    d[:, 0] += 1e-3
    return d / d.sum(axis=1, keepdims=True)


@pytest.mark.parametrize("seed", range(10))
def test_pairwise_js_variants_agree(seed):
    d = _dists(6, 5, seed)
    a = kernels.pairwise_js_numba(d)
    b = kernels.pairwise_js_numpy(d)
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-14)
    for m in (a, b):
        np.testing.assert_array_equal(m, m.T)
        np.testing.assert_array_equal(np.diag(m), 0.0)


@pytest.mark.parametrize("data,expected", [
    (b"", 0xCBF29CE484222325),
    (b"a", 0xAF63DC4C8601EC8C),
    (b"foobar", 0x85944171F73967E8),
])
def test_fnv1a64_reference_vectors(backend, data, expected):
    assert kernels.fnv1a64(data) == expected


@settings(max_examples=50, deadline=None)
@given(st.binary(max_size=200))
def test_fnv1a64_variants_agree(data):
    assert int(kernels.fnv1a64_numba(np.frombuffer(data, dtype=np.uint8))) == kernels.fnv1a64_python(data)


def test_disable_flag_is_read_from_environment(monkeypatch):
    import importlib

    import swarmsass._jit as jit

    monkeypatch.setenv("SWARMSASS_DISABLE_NUMBA", "yes")
    reloaded = importlib.reload(jit)
    try:
        assert reloaded.USE_NUMBA is False
    finally:
        monkeypatch.delenv("SWARMSASS_DISABLE_NUMBA")
        importlib.reload(jit)
