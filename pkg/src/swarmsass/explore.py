"""Explore Domain: a team crosses the grid to a goal column past adversaries.

Each time an active adversary has a team member within ``encounter_radius``
(Chebyshev) an encounter is resolved by descending the GUT: the team picks
its row at every level, the adversary its column, and the outcome is a
Bernoulli draw from the scenario's hidden success probability.  A win
neutralises the adversary; a loss disables the engaged agent.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from swarmsass.atomic import multi_route, path_cells
from swarmsass.gut import ComboStep, GutNode, solve_matrix_game
from swarmsass.trace import Trace
from swarmsass.world import Idle, Moving, chebyshev, step


@dataclass(frozen=True)
class Encounter:
    tick: int
    agent: int
    adversary: int
    combo: tuple  # of ComboStep
    success: bool

    @property
    def cells(self) -> list[tuple]:
        """Posterior keys ``(node_id, row, col)`` along the combination."""
        return [(s.node_id, s.row, s.col) for s in self.combo]


@dataclass
class EpisodeResult:
    episode: int
    success: bool
    cost: float
    arrivals: int
    ticks: int
    encounters: list = field(default_factory=list)
    trace: Optional[Trace] = None


def goal_column(scenario) -> int:
    gx = scenario.explore.goal_x
    return scenario.grid.width - 1 if gx < 0 else gx


def required_arrivals(scenario) -> int:
    need = scenario.explore.required_arrivals
    return len(scenario.agents) if need <= 0 else need


class ExplorePlanner:
    """Caches the team's conflict-free routes; they depend on the scenario only."""

    def __init__(self, scenario):
        self.scenario = scenario
        self._plan = None

    def goals(self) -> dict[int, tuple]:
        scn = self.scenario
        gx = goal_column(scn)
        blocked = {pos for _, pos in scn.adversaries}
        column = [(gx, y) for y in range(scn.grid.height)
                  if scn.grid.is_free((gx, y)) and (gx, y) not in blocked]
        used: set = set()
        out = {}
        for a in sorted(scn.agents, key=lambda a: a.id):
            free = [c for c in column if c not in used]
            if not free:
                break
            cell = min(free, key=lambda c: (abs(c[1] - a.pos[1]), c[1]))
            used.add(cell)
            out[a.id] = cell
        return out

    def paths(self) -> dict[int, list]:
        if self._plan is None:
            scn = self.scenario
            grid = scn.grid.with_obstacles(pos for _, pos in scn.adversaries)
            goals = self.goals()
            starts = {a.id: a.pos for a in scn.agents}
            requests = [(aid, starts[aid], goals[aid]) for aid in sorted(goals)
                        if grid.is_free(starts[aid])]
            plan = multi_route(grid, requests, start_tick=0)
            self._plan = {aid: path_cells(p) for aid, p in plan.paths.items()}
        return self._plan


def state_features(world, scenario, agent_id: int) -> dict[str, float]:
    """Features the payoff coefficients may depend on."""
    total = max(len(scenario.agents), 1)
    agent = world.agents[agent_id]
    full = scenario.needs.energy_full
    span = max(scenario.grid.width - 1, 1)
    return {
        "team_ratio": len(world.agents) / total,
        "energy_ratio": min(agent.energy / full, 1.0),
        "goal_distance": abs(goal_column(scenario) - agent.pos[0]) / span,
    }


def _choose(probs: np.ndarray, rng, sample: bool) -> int:
    if sample:
        return int(rng.choice(len(probs), p=probs))
    return int(np.argmax(probs))


def resolve_encounter(world, scenario, decision_tree: GutNode, fallback_tree: Optional[GutNode],
                      selector: str, agent_id: int, adversary_id: int) -> Encounter:
    """Descend the tree, draw the outcome and apply it to the world."""
    gspec = scenario.gut
    state = state_features(world, scenario, agent_id)
    rng = world.rng
    node = decision_tree
    combo = []
    while node is not None:
        sol = solve_matrix_game(node.matrix(state))
        i = _choose(sol.row, rng, selector == "sample")
        if gspec.adversary_policy == "equilibrium":
            j = _choose(sol.col, rng, True)
        else:
            j = int(rng.integers(len(node.cols)))
        world.trace.emit(world.tick, "Solve", node=node.node_id, value=sol.value,
                         method=sol.method, row=i, col=j)
        combo.append(ComboStep(node.level, node.node_id, i, j, node.rows[i], node.cols[j]))
        child = node.children.get((i, j))
        if child is None and fallback_tree is not None and node.level + 1 < len(gspec.levels):
            # the decision tree was pruned here; continue in the unpruned tree
            child = fallback_tree.find(node.node_id).children.get((i, j))
        node = child
    combo = tuple(combo)
    p = gspec.hidden_prob(combo)
    won = bool(rng.random() < p)
    world.trace.emit(world.tick, "Encounter", agent=agent_id, adversary=adversary_id,
                     combo=[[s.node_id, s.row, s.col] for s in combo],
                     strategies=[[s.row_name, s.col_name] for s in combo], success=won)
    if won:
        world.adversaries[adversary_id].active = False
    else:
        world.remove_agent(agent_id, reason="encounter")
    return Encounter(world.tick, agent_id, adversary_id, combo, won)


def _check_encounters(world, scenario, decision_tree, fallback_tree, selector, out) -> None:
    radius = scenario.explore.encounter_radius
    for vid in sorted(world.adversaries):
        adv = world.adversaries[vid]
        if not adv.active:
            continue
        engaged = [aid for aid in sorted(world.agents)
                   if chebyshev(world.agents[aid].pos, adv.pos) <= radius]
        if engaged:
            out.append(resolve_encounter(world, scenario, decision_tree, fallback_tree,
                                         selector, engaged[0], vid))


def run_explore_episode(scenario, rng_seed: int, *, decision_tree: Optional[GutNode] = None,
                        fallback_tree: Optional[GutNode] = None, selector: Optional[str] = None,
                        planner: Optional[ExplorePlanner] = None, episode: int = 0,
                        keep_trace: bool = True, world=None) -> EpisodeResult:
    """Run one crossing attempt and return its outcome."""
    if scenario.gut is None:
        from swarmsass.errors import ScenarioError

        raise ScenarioError("explore mode needs a [gut] section")
    decision_tree = decision_tree if decision_tree is not None else scenario.gut.tree()
    selector = selector or scenario.gut.selector
    planner = planner or ExplorePlanner(scenario)
    if world is None:
        world = scenario.build_world(rng_seed)
    goals = planner.goals()
    for aid, cells in planner.paths().items():
        if aid in world.agents and len(cells) > 1:
            world.agents[aid].activity = Moving(tuple(cells[1:]))
    encounters: list[Encounter] = []
    _check_encounters(world, scenario, decision_tree, fallback_tree, selector, encounters)
    while world.tick < scenario.horizon and world.agents:
        if all(isinstance(a.activity, Idle) for a in world.agents.values()):
            break
        step(world)
        _check_encounters(world, scenario, decision_tree, fallback_tree, selector, encounters)
    arrivals = sum(1 for aid, a in world.agents.items() if goals.get(aid) == a.pos)
    cost = float(sum(e.payload["cost"] for e in world.trace.of_kind("Move", "Rescue")))
    success = arrivals >= required_arrivals(scenario)
    world.trace.emit(world.tick, "EpisodeEnd", episode=episode, success=success, cost=cost,
                     arrivals=arrivals, encounters=len(encounters))
    return EpisodeResult(episode, success, cost, arrivals, world.tick, encounters,
                         world.trace if keep_trace else None)
