"""Atomic operations: Selection, Formation and Routing."""

from __future__ import annotations

import enum
import heapq
import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from swarmsass.errors import InfeasibleFormationError, UnreachableError
from swarmsass.kernels import bfs_distances, min_cost_permutation
from swarmsass.needs import NeedsConfig, evaluate_needs, task_utility
from swarmsass.negotiation import (
    FORMATION,
    ROUTING,
    SELECTION,
    Assignment,
    NegotiationLayer,
    auction_assign,
    run_negotiation,
)
from swarmsass.world import Cell, Grid, TaskStatus, World, manhattan, observe

EXACT_SLOT_LIMIT = 8


# ---------------------------------------------------------------------------
# selection
# ---------------------------------------------------------------------------


def select(
    world: World,
    layer: NegotiationLayer,
    agents: Iterable[int],
    tasks: Iterable[int],
    cfg: NeedsConfig,
    *,
    retry_budget: int = 10,
) -> Assignment:
    """Auction open ``tasks`` among ``agents`` using needs-based utilities.

    Bound tasks move to Assigned and an Assign event is traced.  The lowest
    agent id acts as initiator.
    """
    agents = sorted(agents)
    tasks = sorted(t for t in tasks if world.tasks[t].status is TaskStatus.OPEN)
    if not tasks or not agents:
        return Assignment({}, tuple(tasks), 0)
    needs = {a: evaluate_needs(world.agents[a], observe(world, a), cfg) for a in agents}
    members = set(agents)

    def utility(agent: int, item: int) -> float:
        if agent not in members or agent not in world.agents:
            return -math.inf
        task = world.tasks[item]
        if task.status is not TaskStatus.OPEN:
            return -math.inf
        return task_utility(world.agents[agent], task, needs[agent], cfg)

    def bind(session, item, agent) -> bool:
        task = world.tasks[item]
        if task.status is not TaskStatus.OPEN:
            return False
        task.assign(agent)
        world.trace.emit(world.tick, "Assign", session=session.id, agent=agent, task=item)
        return True

    prop = layer.open_session(agents[0], SELECTION, tasks, utility,
                              retry_budget=retry_budget, on_bind=bind)
    return run_negotiation(world, layer, prop.session)


# ---------------------------------------------------------------------------
# formation
# ---------------------------------------------------------------------------


class Shape(enum.Enum):
    REGULAR_POLYGON = "polygon"
    LINE = "line"


@dataclass(frozen=True)
class FormationSpec:
    center: Cell
    n: int
    radius: float = 1.0
    shape: Shape = Shape.REGULAR_POLYGON

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("formation needs n >= 1")
        if not self.radius > 0:
            raise ValueError("formation radius must be positive")
        object.__setattr__(self, "center", tuple(self.center))


def _round_half_up(v: float) -> int:
    return int(math.floor(v + 0.5))


def formation_targets(spec: FormationSpec) -> list[Cell]:
    """Ideal (unsnapped) slot cells."""
    cx, cy = spec.center
    if spec.n == 1:
        return [(cx, cy)]
    if spec.shape is Shape.LINE:
        return [(cx + k, cy) for k in range(1, spec.n + 1)]
    out = []
    for k in range(spec.n):
        theta = 2.0 * math.pi * k / spec.n
        out.append((cx + _round_half_up(spec.radius * math.cos(theta)),
                    cy + _round_half_up(spec.radius * math.sin(theta))))
    return out


def formation_slots(spec: FormationSpec, grid: Grid) -> list[Cell]:
    """Slot cells snapped to the nearest unused free cell near the centre.

    Snapping minimises squared Euclidean distance to the ideal cell, ties to
    the lowest ``(x, y)``.  Candidates lie within ``reach + 2`` of the
    centre, where reach is the radius (polygon) or ``n`` (line).
    """
    reach = spec.n if spec.shape is Shape.LINE else spec.radius
    limit = (reach + 2.0) ** 2
    cx, cy = spec.center
    span = int(math.ceil(reach + 2.0))
    candidates = []
    for x in range(cx - span, cx + span + 1):
        for y in range(cy - span, cy + span + 1):
            if (x - cx) ** 2 + (y - cy) ** 2 <= limit and grid.is_free((x, y)):
                candidates.append((x, y))
    if len(candidates) < spec.n:
        raise InfeasibleFormationError(
            f"only {len(candidates)} free cells within {reach + 2:g} of {spec.center}, need {spec.n}"
        )
    used: set[Cell] = set()
    slots = []
    for tx, ty in formation_targets(spec):
        best = min((c for c in candidates if c not in used),
                   key=lambda c: ((c[0] - tx) ** 2 + (c[1] - ty) ** 2, c))
        used.add(best)
        slots.append(best)
    return slots


def assign_slots(agents: Mapping[int, Cell], slots: Sequence[Cell]) -> Assignment:
    """Match agents to slots minimising total Manhattan distance.

    Exact (exhaustive, lexicographically first optimum) for up to eight
    agents; larger teams fall back to the auction with utility -distance.
    Returned mapping is slot index -> agent id.
    """
    ids = sorted(agents)
    if len(ids) != len(slots):
        raise ValueError(f"{len(ids)} agents for {len(slots)} slots")
    if not ids:
        return Assignment({}, (), 0)
    cost = np.array([[manhattan(agents[a], s) for s in slots] for a in ids], dtype=np.int64)
    if len(ids) <= EXACT_SLOT_LIMIT:
        perm, _ = min_cost_permutation(cost)
        mapping = {int(perm[i]): ids[i] for i in range(len(ids))}
        return Assignment(dict(sorted(mapping.items())), (), 0)
    index = {a: i for i, a in enumerate(ids)}
    return auction_assign(ids, range(len(slots)), lambda a, j: -float(cost[index[a], j]))


def assignment_cost(agents: Mapping[int, Cell], slots: Sequence[Cell], result: Assignment) -> int:
    return sum(manhattan(agents[a], slots[j]) for j, a in result.mapping.items())


# ---------------------------------------------------------------------------
# routing
# ---------------------------------------------------------------------------

Path = list  # [(cell, tick), ...]


@dataclass(frozen=True)
class Reservations:
    """Space-time cells, directed moves and parked cells claimed by others."""

    cells: frozenset = frozenset()  # {(cell, tick)}
    moves: frozenset = frozenset()  # {(from, to, arrive_tick)}
    parked: Mapping = field(default_factory=dict)  # cell -> first tick

    def last_tick(self) -> int:
        ticks = [t for _, t in self.cells] + [t for _, _, t in self.moves]
        ticks += list(self.parked.values())
        return max(ticks, default=-1)

    def blocks(self, cell: Cell, t: int) -> bool:
        if (cell, t) in self.cells:
            return True
        since = self.parked.get(cell)
        return since is not None and t >= since

    def blocks_move(self, a: Cell, b: Cell, t: int) -> bool:
        return a != b and (b, a, t) in self.moves


def route(
    grid: Grid,
    start: Cell,
    goal: Cell,
    blocked: Iterable = (),
    *,
    reservations: Optional[Reservations] = None,
    start_tick: int = 0,
    horizon: Optional[int] = None,
) -> Path:
    """Shortest space-time path by A* with a Manhattan heuristic.

    Wait moves cost one tick.  ``blocked`` is a set of ``(cell, tick)`` pairs;
    ``reservations`` adds swap and parking constraints.  The goal is only
    accepted at a tick after which it is never blocked again.
    Expansion order: lower f, then lower tick, then lexicographic cell.
    """
    start, goal = tuple(start), tuple(goal)
    if not grid.is_free(start) or not grid.is_free(goal):
        raise UnreachableError(f"start {start} or goal {goal} is not a free cell")
    res = reservations or Reservations()
    extra = frozenset((tuple(c), int(t)) for c, t in blocked)
    if extra:
        res = Reservations(res.cells | extra, res.moves, res.parked)
    if horizon is None:
        horizon = 4 * grid.perimeter
    if bfs_distances(grid.free_mask(), start)[goal] < 0:
        raise UnreachableError(f"{goal} is not connected to {start}")
    if res.blocks(start, start_tick):
        raise UnreachableError(f"start {start} is reserved at tick {start_tick}")

    t_last = res.last_tick()
    goal_free_from = max([t for c, t in res.cells if c == goal], default=-1) + 1
    if goal in res.parked:
        raise UnreachableError(f"goal {goal} is permanently occupied")

    def h(c):
        return abs(c[0] - goal[0]) + abs(c[1] - goal[1])

    def key(c, t):
        return c, min(t, t_last + 1)

    counter = itertools.count()
    open_heap = [(h(start), start_tick, start, next(counter))]
    parent: dict = {(start, start_tick): None}
    closed = set()
    while open_heap:
        f, t, cell, _ = heapq.heappop(open_heap)
        k = key(cell, t)
        if k in closed:
            continue
        closed.add(k)
        if cell == goal and t >= goal_free_from:
            path = []
            node = (cell, t)
            while node is not None:
                path.append(node)
                node = parent[node]
            return path[::-1]
        if t - start_tick >= horizon:
            continue
        nt = t + 1
        for nxt in [cell] + grid.neighbours(cell):
            if res.blocks(nxt, nt) or res.blocks_move(cell, nxt, nt):
                continue
            if key(nxt, nt) in closed:
                continue
            if (nxt, nt) not in parent:
                parent[(nxt, nt)] = (cell, t)
            elif parent[(nxt, nt)] != (cell, t):
                continue
            heapq.heappush(open_heap, (nt - start_tick + h(nxt), nt, nxt, next(counter)))
    raise UnreachableError(f"no path from {start} to {goal} within {horizon} ticks")


def path_cells(path: Path) -> list[Cell]:
    return [c for c, _ in path]


@dataclass(frozen=True)
class RoutePlan:
    paths: dict
    unreachable: tuple = ()
    priority: tuple = ()


def multi_route(
    grid: Grid,
    requests: Sequence[tuple[int, Cell, Cell]],
    *,
    start_tick: int = 0,
    horizon: Optional[int] = None,
) -> RoutePlan:
    """Prioritised planning: each agent routes around all higher-priority paths.

    Priorities are auctioned with utility ``-manhattan(start, goal)``, so
    shorter trips go first; ties go to the lower id.
    """
    starts = [tuple(s) for _, s, _ in requests]
    if len(set(starts)) != len(starts):
        raise ValueError("multi_route requires distinct start cells")
    req = {aid: (tuple(s), tuple(g)) for aid, s, g in requests}
    ranks = auction_assign(
        req, range(len(req)), lambda a, _rank: -float(manhattan(*req[a])), one_per_agent=True
    )
    order = [ranks.mapping[r] for r in sorted(ranks.mapping)]

    cells: set = set()
    moves: set = set()
    parked: dict = {}
    paths: dict = {}
    failed = []
    for aid in order:
        s, g = req[aid]
        res = Reservations(frozenset(cells), frozenset(moves), dict(parked))
        try:
            path = route(grid, s, g, reservations=res, start_tick=start_tick, horizon=horizon)
        except UnreachableError:
            failed.append(aid)
            parked[s] = start_tick
            continue
        paths[aid] = path
        for (c, t) in path:
            cells.add((c, t))
        for (a, _), (b, t) in zip(path, path[1:]):
            if a != b:
                moves.add((a, b, t))
        end_cell, end_t = path[-1]
        parked[end_cell] = end_t
    return RoutePlan(dict(sorted(paths.items())), tuple(sorted(failed)), tuple(order))


def find_conflicts(paths: Mapping[int, Path]) -> list[tuple]:
    """Exhaustive vertex and swap conflict check; agents wait at their goals."""
    if not paths:
        return []
    horizon = max(p[-1][1] for p in paths.values())
    t0 = min(p[0][1] for p in paths.values())

    def at(path, t):
        if t <= path[0][1]:
            return path[0][0]
        if t >= path[-1][1]:
            return path[-1][0]
        return path[t - path[0][1]][0]

    conflicts = []
    ids = sorted(paths)
    for t in range(t0, horizon + 1):
        for i, a in enumerate(ids):
            for b in ids[i + 1:]:
                if at(paths[a], t) == at(paths[b], t):
                    conflicts.append(("vertex", a, b, t))
                if t > t0 and at(paths[a], t - 1) == at(paths[b], t) and at(paths[b], t - 1) == at(paths[a], t) \
                        and at(paths[a], t) != at(paths[a], t - 1):
                    conflicts.append(("swap", a, b, t))
    return conflicts
