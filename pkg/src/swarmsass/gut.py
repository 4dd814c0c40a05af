"""Game-theoretic utility tree: nested two-player zero-sum matrix games.

The row player is the team (maximiser), the column player the adversary.
Each node's payoff matrix is an affine function of named state features;
solving a node and following the chosen joint strategy into the matching
child yields a strategy combination.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence, Union

import numpy as np

from swarmsass.errors import GameError
from swarmsass.kernels import fictitious_play

SUPPORT_ENUM_LIMIT = 4
EXPLOITABILITY_TOL = 1e-6


# ---------------------------------------------------------------------------
# matrix-game solver
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GameSolution:
    row: np.ndarray
    col: np.ndarray
    value: float
    method: str = "support"

    @property
    def row_support(self) -> tuple:
        return tuple(int(i) for i in np.flatnonzero(self.row > 0))

    @property
    def col_support(self) -> tuple:
        return tuple(int(j) for j in np.flatnonzero(self.col > 0))


def exploitability(payoff, row, col) -> float:
    """Largest gain either player gets from a pure best response."""
    a = np.asarray(payoff, dtype=np.float64)
    v = float(row @ a @ col)
    row_gain = float(np.max(a @ col)) - v
    col_gain = v - float(np.min(row @ a))
    return max(row_gain, col_gain, 0.0)


def _check_matrix(payoff) -> np.ndarray:
    a = np.array(payoff, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise GameError(f"payoff must be a non-empty matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise GameError("payoff contains non-finite entries")
    return a


def _pure(a: np.ndarray, i: int, j: int) -> Optional[GameSolution]:
    v = a[i, j]
    if a[i, :].min() < v or a[:, j].max() > v:
        return None
    row = np.zeros(a.shape[0])
    col = np.zeros(a.shape[1])
    row[i] = 1.0
    col[j] = 1.0
    return GameSolution(row, col, float(v))


def _bordered(m: np.ndarray) -> Optional[np.ndarray]:
    """Solve ``[m, -1; 1, 0] [p; v] = [0; 1]``; None when singular."""
    k = m.shape[0]
    lhs = np.zeros((k + 1, k + 1))
    lhs[:k, :k] = m
    lhs[:k, k] = -1.0
    lhs[k, :k] = 1.0
    rhs = np.zeros(k + 1)
    rhs[k] = 1.0
    if np.linalg.cond(lhs) > 1e12:
        return None
    try:
        return np.linalg.solve(lhs, rhs)
    except np.linalg.LinAlgError:
        return None


def _mixed(a: np.ndarray, rows: tuple, cols: tuple, tol: float) -> Optional[GameSolution]:
    sub = a[np.ix_(rows, cols)]
    ys = _bordered(sub)
    xs = _bordered(sub.T)
    if ys is None or xs is None:
        return None
    y_s, x_s = ys[:-1], xs[:-1]
    if y_s.min() < -tol or x_s.min() < -tol:
        return None
    row = np.zeros(a.shape[0])
    col = np.zeros(a.shape[1])
    row[list(rows)] = np.clip(x_s, 0.0, None)
    col[list(cols)] = np.clip(y_s, 0.0, None)
    row /= row.sum()
    col /= col.sum()
    v = float(row @ a @ col)
    if np.max(a @ col) > v + tol or np.min(row @ a) < v - tol:
        return None
    return GameSolution(row, col, v)


def _support_enumeration(a: np.ndarray, rows=None, cols=None) -> Optional[GameSolution]:
    m, n = a.shape
    rows = range(m) if rows is None else rows
    cols = range(n) if cols is None else cols
    for i in rows:
        for j in cols:
            sol = _pure(a, i, j)
            if sol is not None:
                return sol
    scale = float(np.max(np.abs(a)))
    if scale == 0.0:
        return None
    unit = a / scale
    tol = 1e-10
    for k in range(2, min(len(rows), len(cols)) + 1):
        for sr in itertools.combinations(rows, k):
            for sc in itertools.combinations(cols, k):
                sol = _mixed(unit, sr, sc, tol)
                if sol is not None:
                    return GameSolution(sol.row, sol.col, float(sol.row @ a @ sol.col))
    return None


def _iterative(a: np.ndarray) -> GameSolution:
    iterations = 2000
    while iterations <= 1 << 18:
        x, y = fictitious_play(a, iterations)
        if exploitability(a, x, y) <= EXPLOITABILITY_TOL:
            return GameSolution(x, y, float(x @ a @ y), "fictitious-play")
        # polish: exact solve restricted to the strategies play keeps using
        cut = 1.0 / math.sqrt(iterations)
        sr = tuple(int(i) for i in np.flatnonzero(x >= cut))
        sc = tuple(int(j) for j in np.flatnonzero(y >= cut))
        if len(sr) <= 6 and len(sc) <= 6:
            sol = _support_enumeration(a, sr, sc)
            if sol is not None and exploitability(a, sol.row, sol.col) <= EXPLOITABILITY_TOL:
                return GameSolution(sol.row, sol.col, sol.value, "fictitious-play+support")
        iterations *= 4
    return _linear_program(a)


def _linear_program(a: np.ndarray) -> GameSolution:
    from scipy.optimize import linprog

    m, n = a.shape

    def side(mat):
        # maximise v s.t. mat^T p >= v, sum p = 1, p >= 0
        r, c = mat.shape
        cost = np.zeros(r + 1)
        cost[-1] = -1.0
        a_ub = np.hstack([-mat.T, np.ones((c, 1))])
        a_eq = np.hstack([np.ones((1, r)), np.zeros((1, 1))])
        bounds = [(0, None)] * r + [(None, None)]
        res = linprog(cost, A_ub=a_ub, b_ub=np.zeros(c), A_eq=a_eq, b_eq=[1.0],
                      bounds=bounds, method="highs")
        p = np.clip(res.x[:r], 0.0, None)
        return p / p.sum()

    row = side(a)
    col = side(-a.T)
    return GameSolution(row, col, float(row @ a @ col), "linear-program")


def solve_matrix_game(payoff) -> GameSolution:
    """Zero-sum mixed equilibrium with exploitability at most 1e-6.

    Support enumeration (pure supports first, then square supports in
    lexicographic order) for matrices up to 4x4; larger games use fictitious
    play polished by an exact solve on the recovered supports.
    """
    a = _check_matrix(payoff)
    m, n = a.shape
    if max(m, n) <= SUPPORT_ENUM_LIMIT:
        sol = _support_enumeration(a)
        if sol is not None:
            return sol
    return _iterative(a)


# ---------------------------------------------------------------------------
# tree
# ---------------------------------------------------------------------------


@dataclass
class PayoffModel:
    """``base + sum_f coef[f] * state[f]``; missing features count as 0."""

    base: np.ndarray
    coef: dict = field(default_factory=dict)

    def __post_init__(self):
        self.base = np.array(self.base, dtype=np.float64)
        if self.base.ndim != 2:
            raise GameError("payoff base must be a matrix")
        self.coef = {k: np.array(v, dtype=np.float64) for k, v in sorted(self.coef.items())}
        for name, mat in self.coef.items():
            if mat.shape != self.base.shape:
                raise GameError(f"coefficient {name!r} has shape {mat.shape}, expected {self.base.shape}")

    @property
    def shape(self) -> tuple:
        return self.base.shape

    def __call__(self, state: Optional[Mapping[str, float]] = None) -> np.ndarray:
        out = self.base.copy()
        if state:
            for name, mat in self.coef.items():
                out = out + mat * float(state.get(name, 0.0))
        return out


PayoffFn = Union[PayoffModel, Callable[[Mapping[str, float]], np.ndarray]]


@dataclass
class GutNode:
    node_id: str
    level: int
    rows: tuple
    cols: tuple
    payoff: PayoffFn
    children: dict = field(default_factory=dict)

    def __post_init__(self):
        self.rows = tuple(self.rows)
        self.cols = tuple(self.cols)
        if not self.rows or not self.cols:
            raise GameError(f"node {self.node_id}: strategy lists must be non-empty")
        shape = getattr(self.payoff, "shape", None)
        if shape is not None and tuple(shape) != (len(self.rows), len(self.cols)):
            raise GameError(
                f"node {self.node_id}: payoff shape {tuple(shape)} does not match "
                f"{len(self.rows)}x{len(self.cols)} strategies"
            )
        for (i, j), child in self.children.items():
            if not (0 <= i < len(self.rows) and 0 <= j < len(self.cols)):
                raise GameError(f"node {self.node_id}: child index {(i, j)} out of range")
            if child.level != self.level + 1:
                raise GameError(f"node {child.node_id}: level {child.level} under level {self.level}")

    def matrix(self, state: Optional[Mapping[str, float]] = None) -> np.ndarray:
        m = np.asarray(self.payoff(state or {}), dtype=np.float64)
        if m.shape != (len(self.rows), len(self.cols)):
            raise GameError(f"node {self.node_id}: payoff function returned shape {m.shape}")
        return m

    def walk(self):
        yield self
        for key in sorted(self.children):
            yield from self.children[key].walk()

    def count(self) -> int:
        return sum(1 for _ in self.walk())

    def depth(self) -> int:
        return 1 + max((c.depth() for c in self.children.values()), default=0)

    def structure(self):
        """Hashable shape of the tree (ids, strategies, child keys)."""
        return (self.node_id, self.rows, self.cols,
                tuple((k, self.children[k].structure()) for k in sorted(self.children)))

    def find(self, node_id: str) -> "GutNode":
        for node in self.walk():
            if node.node_id == node_id:
                return node
        raise KeyError(node_id)


def child_id(parent_id: str, i: int, j: int) -> str:
    return f"{parent_id}/{i}.{j}"


def build_tree(
    levels: Sequence[tuple[Sequence[str], Sequence[str]]],
    payoff_for: Callable[[str, int], PayoffFn],
    root_id: str = "root",
) -> GutNode:
    """Full tree: every joint strategy at level k has a level k+1 child."""

    def make(node_id: str, level: int) -> GutNode:
        rows, cols = levels[level]
        children = {}
        if level + 1 < len(levels):
            for i in range(len(rows)):
                for j in range(len(cols)):
                    children[(i, j)] = make(child_id(node_id, i, j), level + 1)
        return GutNode(node_id, level, tuple(rows), tuple(cols), payoff_for(node_id, level), children)

    if not levels:
        raise GameError("a tree needs at least one level")
    return make(root_id, 0)


# ---------------------------------------------------------------------------
# descent
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ComboStep:
    level: int
    node_id: str
    row: int
    col: int
    row_name: str
    col_name: str


StrategyCombination = tuple  # of ComboStep


@dataclass(frozen=True)
class Argmax:
    pass


@dataclass(frozen=True)
class Sample:
    seed: int


def descend(
    gut: GutNode,
    state: Optional[Mapping[str, float]] = None,
    selector: Union[Argmax, Sample] = Argmax(),
    on_solve: Optional[Callable[[GutNode, GameSolution], None]] = None,
) -> tuple[StrategyCombination, float]:
    """Solve node by node along the chosen joint strategies.

    Argmax takes the most probable row and column (lowest index on ties);
    Sample draws both from the equilibrium using one generator seeded once.
    Returns the combination and the root game value.
    """
    rng = np.random.default_rng(selector.seed) if isinstance(selector, Sample) else None
    node = gut
    combo = []
    root_value = None
    while node is not None:
        sol = solve_matrix_game(node.matrix(state))
        if on_solve is not None:
            on_solve(node, sol)
        if root_value is None:
            root_value = sol.value
        if rng is None:
            i = int(np.argmax(sol.row))
            j = int(np.argmax(sol.col))
        else:
            i = int(rng.choice(len(sol.row), p=sol.row))
            j = int(rng.choice(len(sol.col), p=sol.col))
        combo.append(ComboStep(node.level, node.node_id, i, j, node.rows[i], node.cols[j]))
        node = node.children.get((i, j))
    return tuple(combo), float(root_value)


def expected_payoff(
    gut: GutNode,
    state: Optional[Mapping[str, float]],
    combo: StrategyCombination,
    gamma: float = 1.0,
) -> float:
    """Sum over levels of ``gamma**level`` times the combo's payoff entry."""
    if not 0.0 < gamma <= 1.0:
        raise ValueError("gamma must lie in (0, 1]")
    node = gut
    total = 0.0
    for depth, stepx in enumerate(combo):
        if node is None:
            raise IndexError(f"combination longer than the tree at level {depth}")
        if not (0 <= stepx.row < len(node.rows) and 0 <= stepx.col < len(node.cols)):
            raise IndexError(f"invalid joint strategy {(stepx.row, stepx.col)} at {node.node_id}")
        total += gamma ** node.level * float(node.matrix(state)[stepx.row, stepx.col])
        node = node.children.get((stepx.row, stepx.col))
    return total


def combo_from_indices(gut: GutNode, pairs: Sequence[tuple[int, int]]) -> StrategyCombination:
    node = gut
    out = []
    for i, j in pairs:
        if node is None:
            raise IndexError("combination longer than the tree")
        out.append(ComboStep(node.level, node.node_id, i, j, node.rows[i], node.cols[j]))
        node = node.children.get((i, j))
    return tuple(out)
