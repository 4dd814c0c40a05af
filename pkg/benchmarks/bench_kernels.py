"""Time the compiled kernels against their pure-numpy counterparts.

Run with ``python3 benchmarks/bench_kernels.py [--repeat N]``.  The first
compiled call is made before timing so JIT compilation is excluded; its cost
is reported separately.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from swarmsass import kernels


def _cases(rng):
    free = rng.random((64, 64)) >= 0.2
    free[0, 0] = True
    cost = rng.integers(0, 50, size=(8, 8)).astype(np.int64)
    payoff = rng.normal(size=(6, 6))
    dists = rng.dirichlet(np.ones(5), size=64)
    blob = np.frombuffer(rng.bytes(1 << 16), dtype=np.uint8)
    return [
        ("bfs 64x64", lambda: kernels.bfs_distances_numba(free, 0, 0),
         lambda: kernels.bfs_distances_numpy(free, 0, 0)),
        ("assignment 8x8", lambda: kernels.min_cost_permutation_numba(cost),
         lambda: kernels.min_cost_permutation_numpy(cost)),
        ("fictitious play 6x6 x2000", lambda: kernels.fictitious_play_numba(payoff, 2000),
         lambda: kernels.fictitious_play_numpy(payoff, 2000)),
        ("pairwise js 64x5", lambda: kernels.pairwise_js_numba(dists),
         lambda: kernels.pairwise_js_numpy(dists)),
        ("fnv1a64 64 KiB", lambda: kernels.fnv1a64_numba(blob),
         lambda: kernels.fnv1a64_python(blob.tobytes())),
    ]


def _best(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None) -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    rng = np.random.default_rng(0)
    print(f"{'kernel':<28}{'compile s':>10}{'numba ms':>11}{'numpy ms':>11}{'speedup':>9}")
    for name, fast, slow in _cases(rng):
        t0 = time.perf_counter()
        fast()
        compile_s = time.perf_counter() - t0
        tf = _best(fast, args.repeat)
        ts = _best(slow, args.repeat)
        print(f"{name:<28}{compile_s:>10.2f}{tf * 1e3:>11.3f}{ts * 1e3:>11.3f}{ts / tf:>8.1f}x")


if __name__ == "__main__":
    main()
