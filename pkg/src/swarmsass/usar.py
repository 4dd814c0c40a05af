"""Urban search and rescue: agents run the needs behaviour tree each tick.

Victims are tasks.  An agent that wins a victim in a Selection auction
walks to it and rescues it, provided it is capable and the deadline has not
passed.  A uniform-random central assignment serves as the baseline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from swarmsass import bt
from swarmsass.atomic import path_cells, route
from swarmsass.bt import Blackboard, Leaves, TickResult
from swarmsass.errors import UnreachableError
from swarmsass.needs import evaluate_needs, is_capable, needs_distribution, task_utility
from swarmsass.negotiation import SELECTION, NegotiationLayer
from swarmsass.rne import group_by_trust, trust_matrix
from swarmsass.world import (
    Avoiding,
    Executing,
    Idle,
    Moving,
    Recharging,
    TaskStatus,
    World,
    observe,
    step,
)

TRUST_THRESHOLD = 0.8


@dataclass
class AgentMemory:
    needs: Optional[object] = None
    obs: Optional[object] = None
    waited: int = 0


@dataclass
class UsarController:
    """Drives one world: behaviour trees, negotiation and periodic trust."""

    world: World
    scenario: object
    tree: object = field(default_factory=bt.build_sass_tree)
    memory: dict = field(default_factory=dict)
    visits: Optional[dict] = None  # agent -> list of visited node ids, for tests

    def __post_init__(self):
        self.layer = NegotiationLayer(self.world)
        g = self.world.grid
        # tick each cell was last inside some agent's sensing range
        self.last_seen = np.full((g.width, g.height), -1, dtype=np.int64)
        self.patrol_goal: dict = {}
        self.cfg = self.scenario.needs
        self.random_baseline = self.scenario.negotiation.assignment == "random"
        self.leaves = self._leaves()
        bt.check_wiring(self.tree, self.leaves)

    # -- queries ------------------------------------------------------------

    def committed_task(self, agent_id: int):
        for tid in sorted(self.world.tasks):
            t = self.world.tasks[tid]
            if t.status is TaskStatus.ASSIGNED and t.assignee == agent_id:
                return t
        return None

    def _in_negotiation(self) -> set:
        items = set()
        for s in self.layer.active():
            items.update(s.items)
        return items

    def _agent_in_session(self, agent_id: int) -> bool:
        return any(s.initiator == agent_id for s in self.layer.active())

    def needs_of(self, agent_id: int):
        mem = self.memory.get(agent_id)
        if mem is None or mem.needs is None:
            agent = self.world.agents[agent_id]
            return evaluate_needs(agent, observe(self.world, agent_id), self.cfg)
        return mem.needs

    def utility(self, agent_id: int, task_id: int) -> float:
        w = self.world
        if agent_id not in w.agents:
            return -math.inf
        task = w.tasks[task_id]
        if task.status is not TaskStatus.OPEN or self.committed_task(agent_id) is not None:
            return -math.inf
        return task_utility(w.agents[agent_id], task, self.needs_of(agent_id), self.cfg)

    def _bind(self, session, task_id: int, agent_id: int) -> bool:
        w = self.world
        task = w.tasks[task_id]
        if task.status is not TaskStatus.OPEN or agent_id not in w.agents:
            return False
        if self.committed_task(agent_id) is not None:
            return False
        task.assign(agent_id)
        w.trace.emit(w.tick, "Assign", session=session.id, agent=agent_id, task=task_id)
        return True

    # -- leaves ---------------------------------------------------------------

    def _leaves(self) -> Leaves:
        leaves = Leaves()
        w = self.world
        cfg = self.cfg

        @leaves.action(bt.PERCEIVE)
        def perceive(bb):
            aid = bb["agent"]
            obs = observe(w, aid)
            nv = evaluate_needs(w.agents[aid], obs, cfg)
            mem = self.memory.setdefault(aid, AgentMemory())
            mem.obs, mem.needs = obs, nv
            self._mark_seen(w.agents[aid].pos)
            bb["obs"], bb["needs"] = obs, nv
            return TickResult.SUCCESS

        @leaves.condition(bt.SAFETY_OK)
        def safety_ok(bb):
            return bb["needs"].safety >= cfg.thresholds[0]

        @leaves.action(bt.EVADE)
        def evade(bb):
            bb["unsafe"] = True
            w.agents[bb["agent"]].activity = Avoiding()
            return TickResult.RUNNING

        @leaves.condition(bt.BASIC_OK)
        def basic_ok(bb):
            agent = w.agents[bb["agent"]]
            if isinstance(agent.activity, Recharging):
                return agent.energy >= agent.energy_full
            return bb["needs"].basic >= cfg.thresholds[1]

        @leaves.action(bt.RECHARGE)
        def recharge(bb):
            aid = bb["agent"]
            task = self.committed_task(aid)
            if task is not None:
                task.release()
            w.agents[aid].activity = Recharging()
            return TickResult.RUNNING

        @leaves.condition(bt.CAPABLE)
        def capable(bb):
            aid = bb["agent"]
            if self.committed_task(aid) is not None:
                return True
            agent = w.agents[aid]
            return any(is_capable(agent, t) for t in bb["obs"].open_tasks())

        @leaves.action(bt.UTILITIES)
        def utilities(bb):
            aid = bb["agent"]
            agent = w.agents[aid]
            bb["utilities"] = {t.id: task_utility(agent, w.tasks[t.id], bb["needs"], cfg)
                               for t in bb["obs"].open_tasks()
                               if w.tasks[t.id].status is TaskStatus.OPEN}
            return TickResult.SUCCESS

        @leaves.action(bt.PLAN)
        def plan(bb):
            aid = bb["agent"]
            task = self.committed_task(aid)
            bb["plan"] = None
            if task is None:
                return TickResult.SUCCESS
            agent = w.agents[aid]
            blocked = [(a.pos, w.tick + 1) for a in w.agents.values()
                       if a.id != aid and a.pos != task.pos]
            try:
                path = route(w.grid, agent.pos, task.pos, blocked, start_tick=w.tick)
            except UnreachableError:
                try:
                    path = route(w.grid, agent.pos, task.pos, start_tick=w.tick)
                except UnreachableError:
                    task.release()
                    return TickResult.FAILURE
            bb["plan"] = path_cells(path)
            return TickResult.SUCCESS

        @leaves.action(bt.NEGOTIATE)
        def negotiate(bb):
            aid = bb["agent"]
            mem = self.memory[aid]
            if self.committed_task(aid) is not None:
                mem.waited = 0
                return TickResult.SUCCESS
            if self.random_baseline:
                return TickResult.RUNNING
            if self._agent_in_session(aid):
                return TickResult.RUNNING
            busy = self._in_negotiation()
            items = sorted(tid for tid, u in bb["utilities"].items()
                           if u != -math.inf and tid not in busy)
            if not items:
                return TickResult.FAILURE
            peers = [a.id for a in bb["obs"].agents
                     if a.id in w.agents and self.committed_task(a.id) is None]
            mem.waited += 1
            if peers and min(peers) < aid and mem.waited <= 2 * w.bus.latency + 1:
                return TickResult.RUNNING
            mem.waited = 0
            self.layer.open_session(aid, SELECTION, items, self.utility,
                                    retry_budget=self.scenario.negotiation.retry_budget,
                                    on_bind=self._bind)
            return TickResult.RUNNING

        @leaves.action(bt.EXECUTE)
        def execute(bb):
            aid = bb["agent"]
            agent = w.agents[aid]
            task = self.committed_task(aid)
            if task is None:
                return TickResult.FAILURE
            if agent.pos == task.pos:
                if not is_capable(agent, task):
                    task.release()
                    return TickResult.FAILURE
                agent.activity = Executing(task.id)
            else:
                cells = bb.get("plan") or []
                agent.activity = Moving(tuple(cells[1:]))
            return TickResult.RUNNING

        return leaves

    # -- loop -----------------------------------------------------------------

    def _mark_seen(self, pos) -> None:
        r = self.world.config.sensing_radius
        x, y = pos
        self.last_seen[max(0, x - r):x + r + 1, max(0, y - r):y + r + 1] = self.world.tick

    def _patrol(self, aid: int) -> None:
        """Head for the stalest free cell not already claimed by a teammate."""
        w = self.world
        agent = w.agents[aid]
        goal = self.patrol_goal.get(aid)
        if goal is None or agent.pos == goal:
            claimed = {c for other, c in self.patrol_goal.items() if other != aid}
            best = None
            for x in range(w.grid.width):
                for y in range(w.grid.height):
                    c = (x, y)
                    if c in claimed or not w.grid.is_free(c) or c == agent.pos:
                        continue
                    k = (self.last_seen[c], abs(x - agent.pos[0]) + abs(y - agent.pos[1]), c)
                    if best is None or k < best:
                        best = k
            if best is None:
                return
            goal = best[2]
            self.patrol_goal[aid] = goal
        act = agent.activity
        if isinstance(act, Moving) and act.path and act.path[-1] == goal \
                and w.occupant(act.path[0]) is None:
            return  # current route is still good
        blocked = [(a.pos, w.tick + 1) for a in w.agents.values() if a.id != aid]
        try:
            path = route(w.grid, agent.pos, goal, blocked, start_tick=w.tick)
        except UnreachableError:
            self.patrol_goal.pop(aid, None)
            return
        agent.activity = Moving(tuple(path_cells(path)[1:]))

    def _random_assign(self) -> None:
        w = self.world
        for tid in sorted(w.tasks):
            task = w.tasks[tid]
            if task.status is not TaskStatus.OPEN:
                continue
            free = [aid for aid in sorted(w.agents) if self.committed_task(aid) is None
                    and not isinstance(w.agents[aid].activity, Recharging)]
            if not free:
                return
            aid = free[int(w.rng.integers(len(free)))]
            task.assign(aid)
            w.trace.emit(w.tick, "Assign", session=None, agent=aid, task=tid)

    def _trust_snapshot(self) -> None:
        w = self.world
        ids = [aid for aid in sorted(w.agents) if aid in self.memory]
        if not ids:
            return
        dists = [needs_distribution(self.memory[aid].needs) for aid in ids]
        tm = trust_matrix(dists)
        w.trace.emit(w.tick, "TrustSnapshot", agents=ids, trust=np.round(tm, 12),
                     groups=group_by_trust(tm, TRUST_THRESHOLD, ids))

    def tick_agents(self) -> set:
        """One behaviour-tree pass over all agents; returns the unsafe ones."""
        unsafe = set()
        for aid in sorted(self.world.agents):
            bb = Blackboard(agent=aid)
            log = [] if self.visits is not None else None
            result, _ = bt.tick(self.tree, bb, self.leaves, log)
            agent = self.world.agents[aid]
            if result is TickResult.FAILURE and self.committed_task(aid) is None \
                    and isinstance(agent.activity, (Idle, Moving)):
                self._patrol(aid)
            else:
                self.patrol_goal.pop(aid, None)
            if log is not None:
                self.visits.setdefault(aid, []).append((self.world.tick, log))
            if bb.get("unsafe"):
                unsafe.add(aid)
        return unsafe

    def finished(self) -> bool:
        return all(t.closed for t in self.world.tasks.values())

    def advance(self) -> None:
        w = self.world
        if self.random_baseline:
            self._random_assign()
        unsafe = self.tick_agents()
        self.layer.process(silenced=unsafe)
        if w.tick % self.scenario.trust_interval == 0:
            self._trust_snapshot()
        step(w)

    def run(self) -> World:
        while self.world.tick < self.scenario.horizon and not self.finished():
            self.advance()
        return self.world


def run_usar(scenario, seed: int, *, visits: Optional[dict] = None) -> World:
    world = scenario.build_world(seed)
    UsarController(world, scenario, visits=visits).run()
    return world
