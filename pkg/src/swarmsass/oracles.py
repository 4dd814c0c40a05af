"""Brute-force reference implementations used to verify the fast paths.

Every oracle here is deliberately naive and independent of the code it
checks: exhaustive matchings, plain breadth-first search, exhaustive
support enumeration and closed-form divergences.  ``run_suite`` drives them
over seeded random instances.
"""

from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

# ---------------------------------------------------------------------------
# assignment
# ---------------------------------------------------------------------------


def best_matching_value(util: Sequence[Sequence[Optional[float]]]) -> float:
    """Maximum total utility of a partial one-to-one agent/task matching.

    ``util[a][t]`` is ``None`` (or -inf) where agent ``a`` cannot take task
    ``t``.  Exhaustive over all injective partial maps; fine up to 5x5.
    """
    n_agents = len(util)
    n_tasks = len(util[0]) if n_agents else 0
    best = 0.0
    choices = list(range(n_tasks)) + [None]
    for combo in itertools.product(choices, repeat=n_agents):
        taken = [t for t in combo if t is not None]
        if len(set(taken)) != len(taken):
            continue
        total = 0.0
        ok = True
        for a, t in enumerate(combo):
            if t is None:
                continue
            u = util[a][t]
            if u is None or u == -math.inf:
                ok = False
                break
            total += u
        if ok and total > best:
            best = total
    return best


def min_total_distance(agents: Sequence[tuple], slots: Sequence[tuple]) -> int:
    """Exhaustive minimum total Manhattan distance of a perfect matching."""
    best = None
    for perm in itertools.permutations(range(len(slots))):
        d = sum(abs(a[0] - slots[p][0]) + abs(a[1] - slots[p][1]) for a, p in zip(agents, perm))
        if best is None or d < best:
            best = d
    return 0 if best is None else best


# ---------------------------------------------------------------------------
# shortest paths
# ---------------------------------------------------------------------------


def bfs_length(free: np.ndarray, start: tuple, goal: tuple) -> Optional[int]:
    """Number of moves on a 4-connected grid, or None when unreachable."""
    w, h = free.shape
    if not (free[start] and free[goal]):
        return None
    seen = {start: 0}
    queue = deque([start])
    while queue:
        c = queue.popleft()
        if c == goal:
            return seen[c]
        x, y = c
        for nx, ny in ((x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)):
            if 0 <= nx < w and 0 <= ny < h and free[nx, ny] and (nx, ny) not in seen:
                seen[(nx, ny)] = seen[c] + 1
                queue.append((nx, ny))
    return None


# ---------------------------------------------------------------------------
# matrix games
# ---------------------------------------------------------------------------


def maxmin_pure(a) -> float:
    a = np.asarray(a)
    return a.min(axis=1).max()


def minmax_pure(a) -> float:
    a = np.asarray(a)
    return a.max(axis=0).min()


def game_value_enumeration(a, tol: float = 1e-9) -> float:
    """Value of a zero-sum game by trying every pair of equal-size supports."""
    a = np.asarray(a, dtype=np.float64)
    m, n = a.shape
    if maxmin_pure(a) == minmax_pure(a):
        return float(maxmin_pure(a))
    for k in range(1, min(m, n) + 1):
        for rows in itertools.combinations(range(m), k):
            for cols in itertools.combinations(range(n), k):
                sub = a[np.ix_(rows, cols)]
                # row mix x: x @ sub = v * 1, sum x = 1 ; column mix y likewise
                lhs = np.zeros((k + 1, k + 1))
                lhs[:k, :k] = sub.T
                lhs[:k, k] = -1.0
                lhs[k, :k] = 1.0
                rhs = np.zeros(k + 1)
                rhs[k] = 1.0
                lhs_c = np.zeros((k + 1, k + 1))
                lhs_c[:k, :k] = sub
                lhs_c[:k, k] = -1.0
                lhs_c[k, :k] = 1.0
                try:
                    xs = np.linalg.solve(lhs, rhs)
                    ys = np.linalg.solve(lhs_c, rhs)
                except np.linalg.LinAlgError:
                    continue
                x, v = xs[:k], xs[k]
                y = ys[:k]
                if np.any(x < -tol) or np.any(y < -tol):
                    continue
                full_x = np.zeros(m)
                full_x[list(rows)] = x
                full_y = np.zeros(n)
                full_y[list(cols)] = y
                if np.max(a @ full_y) <= v + 1e-7 and np.min(full_x @ a) >= v - 1e-7:
                    return float(v)
    raise ArithmeticError("no equilibrium found by enumeration")


# ---------------------------------------------------------------------------
# divergences
# ---------------------------------------------------------------------------


def entropy(p) -> float:
    return -sum(x * math.log(x) for x in p if x > 0)


def kl_closed_form(p, q) -> float:
    return sum(x * math.log(x / y) for x, y in zip(p, q) if x > 0)


def js_closed_form(p, q) -> float:
    """``H(m) - (H(p) + H(q)) / 2`` with ``m`` the midpoint."""
    m = [(x + y) / 2 for x, y in zip(p, q)]
    return entropy(m) - 0.5 * (entropy(p) + entropy(q))


# ---------------------------------------------------------------------------
# suites
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CheckResult:
    suite: str
    cases: int
    failures: int
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.failures == 0


def _random_dist(rng, k):
    p = rng.random(k) + 1e-3
    return p / p.sum()


def check_assignment(cases: int = 100, seed: int = 0) -> CheckResult:
    from swarmsass.atomic import assign_slots, assignment_cost
    from swarmsass.negotiation import auction_assign

    rng = np.random.default_rng(seed)
    bad = 0
    for _ in range(cases):
        na, nt = int(rng.integers(1, 6)), int(rng.integers(1, 6))
        util = rng.integers(0, 20, size=(na, nt)).astype(float)
        res = auction_assign(range(na), range(nt), lambda a, t: util[a, t])
        total = sum(util[a, t] for t, a in res.mapping.items())
        if 2 * total < best_matching_value(util.tolist()):
            bad += 1
        n = int(rng.integers(1, 7))
        cells = [tuple(map(int, c)) for c in rng.integers(0, 10, size=(2 * n, 2))]
        agents = {i: cells[i] for i in range(n)}
        slots = cells[n:]
        got = assignment_cost(agents, slots, assign_slots(agents, slots))
        if got != min_total_distance([agents[i] for i in range(n)], slots):
            bad += 1
    return CheckResult("assignment", 2 * cases, bad)


def check_bfs(cases: int = 100, seed: int = 0, size: int = 16, density: float = 0.2) -> CheckResult:
    from swarmsass.atomic import route
    from swarmsass.errors import UnreachableError
    from swarmsass.world import Grid

    rng = np.random.default_rng(seed)
    bad = 0
    for _ in range(cases):
        blocked = rng.random((size, size)) < density
        cells = [(int(x), int(y)) for x, y in zip(*np.nonzero(~blocked))]
        s, g = (cells[int(k)] for k in rng.choice(len(cells), 2, replace=False))
        grid = Grid(size, size, frozenset((int(x), int(y)) for x, y in zip(*np.nonzero(blocked))))
        want = bfs_length(~blocked, s, g)
        try:
            got = len(route(grid, s, g)) - 1
        except UnreachableError:
            got = None
        if got != want:
            bad += 1
    return CheckResult("bfs", cases, bad)


def check_games(cases: int = 300, seed: int = 0) -> CheckResult:
    from swarmsass.gut import solve_matrix_game

    rng = np.random.default_rng(seed)
    bad = 0
    for _ in range(cases):
        m, n = (int(v) for v in rng.integers(1, 5, size=2))
        a = rng.integers(-5, 6, size=(m, n)).astype(float)
        if abs(solve_matrix_game(a).value - game_value_enumeration(a)) > 1e-7:
            bad += 1
    return CheckResult("games", cases, bad)


def check_divergences(cases: int = 300, seed: int = 0) -> CheckResult:
    from swarmsass.rne import js_divergence, kl_divergence

    rng = np.random.default_rng(seed)
    bad = 0
    for _ in range(cases):
        k = int(rng.integers(2, 7))
        p, q = _random_dist(rng, k), _random_dist(rng, k)
        if abs(kl_divergence(p, q) - kl_closed_form(p, q)) > 1e-9:
            bad += 1
        if abs(js_divergence(p, q) - js_closed_form(p, q)) > 1e-12:
            bad += 1
    return CheckResult("divergences", 2 * cases, bad)


SUITES: dict[str, Callable[[], CheckResult]] = {
    "assignment": check_assignment,
    "bfs": check_bfs,
    "games": check_games,
    "divergences": check_divergences,
}


def run_suite(name: str) -> list[CheckResult]:
    """Run one named suite, or every suite for ``all``."""
    if name == "all":
        return [fn() for _, fn in sorted(SUITES.items())]
    if name not in SUITES:
        raise KeyError(f"unknown oracle suite {name!r}; choose from {sorted(SUITES) + ['all']}")
    return [SUITES[name]()]
