"""Discrete-time grid world, simulated message bus and the global tick loop.

Motion is 4-connected, sensing uses Chebyshev distance.  Agents act once per
tick in ascending id order and the single rng stream is consumed bus first,
then agents by id.
"""

from __future__ import annotations

import copy
import enum
import heapq
from dataclasses import dataclass, field
from typing import Any, Iterable, Optional

import numpy as np

from swarmsass.errors import AddressingError, ConfigError
from swarmsass.trace import Trace

Cell = tuple[int, int]

BROADCAST = None


def chebyshev(a: Cell, b: Cell) -> int:
    return max(abs(a[0] - b[0]), abs(a[1] - b[1]))


def manhattan(a: Cell, b: Cell) -> int:
    return abs(a[0] - b[0]) + abs(a[1] - b[1])


# ---------------------------------------------------------------------------
# activities
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Idle:
    name = "Idle"


@dataclass(frozen=True)
class Moving:
    path: tuple[Cell, ...]
    name = "Moving"


@dataclass(frozen=True)
class Executing:
    task: int
    name = "Executing"


@dataclass(frozen=True)
class Recharging:
    name = "Recharging"


@dataclass(frozen=True)
class Avoiding:
    name = "Avoiding"


Activity = Idle | Moving | Executing | Recharging | Avoiding


# ---------------------------------------------------------------------------
# entities
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Grid:
    width: int
    height: int
    obstacles: frozenset = frozenset()

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ConfigError("grid dimensions must be positive")

    def in_bounds(self, cell: Cell) -> bool:
        return 0 <= cell[0] < self.width and 0 <= cell[1] < self.height

    def is_free(self, cell: Cell) -> bool:
        return self.in_bounds(cell) and tuple(cell) not in self.obstacles

    def neighbours(self, cell: Cell) -> list[Cell]:
        x, y = cell
        out = []
        for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            c = (x + dx, y + dy)
            if self.is_free(c):
                out.append(c)
        return out

    def free_mask(self) -> np.ndarray:
        mask = np.ones((self.width, self.height), dtype=bool)
        for x, y in self.obstacles:
            mask[x, y] = False
        return mask

    def with_obstacles(self, cells: Iterable[Cell]) -> "Grid":
        return Grid(self.width, self.height, self.obstacles | frozenset(map(tuple, cells)))

    @property
    def perimeter(self) -> int:
        return 2 * (self.width + self.height)


@dataclass
class AgentState:
    id: int
    pos: Cell
    energy: float
    capabilities: dict[str, float] = field(default_factory=dict)
    activity: Activity = field(default_factory=Idle)
    move_cost: float = 1.0
    execute_cost: float = 1.0
    energy_full: float = 10.0
    role: str = "agent"

    def __post_init__(self):
        self.pos = tuple(self.pos)
        if self.energy < 0:
            raise ConfigError(f"agent {self.id}: energy must be >= 0")
        for name, level in self.capabilities.items():
            if not 0.0 <= level <= 1.0:
                raise ConfigError(f"agent {self.id}: capability {name!r} outside [0, 1]")

    def skill(self, name: str) -> float:
        return self.capabilities.get(name, 0.0)


class TaskStatus(enum.Enum):
    OPEN = "Open"
    ASSIGNED = "Assigned"
    DONE = "Done"
    EXPIRED = "Expired"


@dataclass
class Task:
    id: int
    pos: Cell
    required: dict[str, float] = field(default_factory=dict)
    reward: float = 1.0
    deadline: Optional[int] = None
    status: TaskStatus = TaskStatus.OPEN
    assignee: Optional[int] = None

    def __post_init__(self):
        self.pos = tuple(self.pos)
        if self.reward <= 0:
            raise ConfigError(f"task {self.id}: reward must be positive")

    @property
    def closed(self) -> bool:
        return self.status in (TaskStatus.DONE, TaskStatus.EXPIRED)

    def assign(self, agent_id: int) -> None:
        if self.status is not TaskStatus.OPEN:
            raise ValueError(f"task {self.id} is {self.status.value}, cannot assign")
        self.status = TaskStatus.ASSIGNED
        self.assignee = agent_id

    def release(self) -> None:
        if self.status is TaskStatus.ASSIGNED:
            self.status = TaskStatus.OPEN
            self.assignee = None

    def finish(self, status: TaskStatus) -> None:
        if self.closed:
            raise ValueError(f"task {self.id} already {self.status.value}")
        self.status = status


@dataclass
class AdversaryState:
    id: int
    pos: Cell
    active: bool = True

    def __post_init__(self):
        self.pos = tuple(self.pos)


# ---------------------------------------------------------------------------
# message bus
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Envelope:
    sender: int
    recipient: int
    seq: int
    sent_tick: int
    message: Any

    def to_payload(self) -> dict:
        msg = self.message.to_payload() if hasattr(self.message, "to_payload") else self.message
        return {
            "sender": self.sender,
            "recipient": self.recipient,
            "seq": self.seq,
            "sent": self.sent_tick,
            "msg": msg,
        }


@dataclass
class MessageBus:
    delay: int = 0
    loss_prob: float = 0.0
    in_flight: list = field(default_factory=list)
    next_seq: int = 0

    def __post_init__(self):
        if self.delay < 0:
            raise ConfigError("bus delay must be >= 0")
        if not 0.0 <= self.loss_prob < 1.0:
            raise ConfigError("loss_prob must lie in [0, 1)")

    @property
    def latency(self) -> int:
        """Ticks from send to the earliest tick a handler can see the message."""
        return max(self.delay, 1)

    def pending(self) -> int:
        return len(self.in_flight)


# ---------------------------------------------------------------------------
# observation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Observation:
    observer: int
    tick: int
    pos: Cell
    agents: tuple
    tasks: tuple
    adversaries: tuple

    def open_tasks(self) -> list[Task]:
        return [t for t in self.tasks if t.status is TaskStatus.OPEN]


# ---------------------------------------------------------------------------
# world
# ---------------------------------------------------------------------------


@dataclass
class WorldConfig:
    recharge_rate: float = 1.0
    sensing_radius: int = 3
    omission_prob: float = 0.0

    def __post_init__(self):
        if self.recharge_rate <= 0:
            raise ConfigError("recharge_rate must be positive")
        if self.sensing_radius < 0:
            raise ConfigError("sensing_radius must be >= 0")
        if not 0.0 <= self.omission_prob < 1.0:
            raise ConfigError("omission_prob must lie in [0, 1)")


@dataclass
class World:
    grid: Grid
    agents: dict[int, AgentState] = field(default_factory=dict)
    tasks: dict[int, Task] = field(default_factory=dict)
    adversaries: dict[int, AdversaryState] = field(default_factory=dict)
    bus: MessageBus = field(default_factory=MessageBus)
    config: WorldConfig = field(default_factory=WorldConfig)
    rng: np.random.Generator = field(default_factory=lambda: np.random.default_rng(0))
    trace: Trace = field(default_factory=Trace)
    tick: int = 0
    inbox: dict[int, list[Envelope]] = field(default_factory=dict)

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        seen: dict[Cell, int] = {}
        for aid, agent in self.agents.items():
            if not self.grid.is_free(agent.pos):
                raise ConfigError(f"agent {aid} at {agent.pos} is off-grid or on an obstacle")
            if agent.pos in seen:
                raise ConfigError(f"agents {seen[agent.pos]} and {aid} share cell {agent.pos}")
            seen[agent.pos] = aid
        for tid, task in self.tasks.items():
            if not self.grid.is_free(task.pos):
                raise ConfigError(f"task {tid} at {task.pos} is off-grid or on an obstacle")
        for vid, adv in self.adversaries.items():
            if not self.grid.is_free(adv.pos):
                raise ConfigError(f"adversary {vid} at {adv.pos} is off-grid or on an obstacle")

    def spawn_events(self) -> None:
        """Record the initial population; call once before the first step."""
        for aid in sorted(self.agents):
            a = self.agents[aid]
            self.trace.emit(self.tick, "Spawn", entity="agent", id=aid, pos=a.pos,
                            energy=a.energy, role=a.role)
        for tid in sorted(self.tasks):
            t = self.tasks[tid]
            self.trace.emit(self.tick, "Spawn", entity="task", id=tid, pos=t.pos,
                            reward=t.reward, deadline=t.deadline)
        for vid in sorted(self.adversaries):
            self.trace.emit(self.tick, "Spawn", entity="adversary", id=vid,
                            pos=self.adversaries[vid].pos)

    def occupant(self, cell: Cell) -> Optional[int]:
        for aid, agent in self.agents.items():
            if agent.pos == cell:
                return aid
        return None

    def agent(self, agent_id: int) -> AgentState:
        try:
            return self.agents[agent_id]
        except KeyError:
            raise AddressingError(f"unknown agent id {agent_id}") from None

    def remove_agent(self, agent_id: int, reason: str) -> None:
        agent = self.agent(agent_id)
        del self.agents[agent_id]
        self.inbox.pop(agent_id, None)
        for task in self.tasks.values():
            if task.assignee == agent_id:
                task.release()
        self.trace.emit(self.tick, "Disable", agent=agent_id, pos=agent.pos, reason=reason)

    def take_inbox(self, agent_id: int) -> list[Envelope]:
        return self.inbox.pop(agent_id, [])

    def snapshot(self) -> "World":
        """Deep copy that shares nothing mutable with ``self``."""
        return copy.deepcopy(self)


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------


def send(world: World, sender: int, recipient: Optional[int], message: Any) -> list[Envelope]:
    """Queue ``message``; ``recipient=None`` broadcasts to every other agent.

    Each resulting envelope is delivered ``bus.delay`` ticks after the current
    tick (never earlier than the next step) or, with probability
    ``bus.loss_prob``, dropped and logged as such.
    """
    if sender not in world.agents:
        raise AddressingError(f"unknown sender id {sender}")
    if recipient is BROADCAST:
        targets = [aid for aid in sorted(world.agents) if aid != sender]
    else:
        if recipient not in world.agents:
            raise AddressingError(f"unknown recipient id {recipient}")
        targets = [recipient]
    bus = world.bus
    out = []
    for target in targets:
        env = Envelope(sender, target, bus.next_seq, world.tick, message)
        bus.next_seq += 1
        world.trace.emit(world.tick, "Send", **env.to_payload())
        if bus.loss_prob > 0.0 and world.rng.random() < bus.loss_prob:
            world.trace.emit(world.tick, "Drop", seq=env.seq, sender=sender,
                             recipient=target, reason="loss")
        else:
            heapq.heappush(bus.in_flight, (world.tick + bus.delay, sender, env.seq, env))
        out.append(env)
    return out


def _deliver(world: World) -> None:
    bus = world.bus
    while bus.in_flight and bus.in_flight[0][0] <= world.tick:
        _, _, _, env = heapq.heappop(bus.in_flight)
        if env.recipient not in world.agents:
            world.trace.emit(world.tick, "Drop", seq=env.seq, sender=env.sender,
                             recipient=env.recipient, reason="gone")
            continue
        world.inbox.setdefault(env.recipient, []).append(env)
        world.trace.emit(world.tick, "Deliver", seq=env.seq, sender=env.sender,
                         recipient=env.recipient)


def _move(world: World, agent: AgentState, target: Cell) -> bool:
    if target == agent.pos:
        return True
    if agent.energy <= 0 or agent.energy < agent.move_cost:
        return False
    if not world.grid.is_free(target) or world.occupant(target) is not None:
        return False
    src = agent.pos
    agent.pos = target
    agent.energy = max(0.0, agent.energy - agent.move_cost)
    world.trace.emit(world.tick, "Move", agent=agent.id, frm=src, to=target,
                     cost=agent.move_cost, energy=agent.energy)
    return True


def _evasion_target(world: World, agent: AgentState) -> Cell:
    r = world.config.sensing_radius
    threats = [v.pos for v in world.adversaries.values()
               if v.active and chebyshev(v.pos, agent.pos) <= r]
    threats += [a.pos for a in world.agents.values()
                if a.id != agent.id and isinstance(a.activity, Moving)
                and chebyshev(a.pos, agent.pos) <= r]
    if not threats:
        return agent.pos
    options = [agent.pos] + [c for c in world.grid.neighbours(agent.pos)
                             if world.occupant(c) is None]

    def clearance(c):
        return min(chebyshev(c, t) for t in threats)

    # prefer more clearance, then staying put, then lexicographic cell
    return max(options, key=lambda c: (clearance(c), c == agent.pos, tuple(-v for v in c)))


def _advance(world: World, agent: AgentState) -> None:
    act = agent.activity
    if isinstance(act, Moving):
        if not act.path:
            agent.activity = Idle()
            return
        nxt = tuple(act.path[0])
        if nxt != agent.pos and (abs(nxt[0] - agent.pos[0]) + abs(nxt[1] - agent.pos[1])) != 1:
            agent.activity = Idle()
            return
        if _move(world, agent, nxt):
            rest = act.path[1:]
            agent.activity = Moving(rest) if rest else Idle()
    elif isinstance(act, Executing):
        task = world.tasks.get(act.task)
        if (
            task is None
            or task.status is not TaskStatus.ASSIGNED
            or task.assignee != agent.id
            or task.pos != agent.pos
        ):
            agent.activity = Idle()
            return
        if any(agent.skill(k) < v for k, v in task.required.items()):
            agent.activity = Idle()
            return
        if agent.energy <= 0 or agent.energy < agent.execute_cost:
            return
        agent.energy = max(0.0, agent.energy - agent.execute_cost)
        task.finish(TaskStatus.DONE)
        world.trace.emit(world.tick, "Rescue", agent=agent.id, task=task.id,
                         reward=task.reward, cost=agent.execute_cost, energy=agent.energy)
        agent.activity = Idle()
    elif isinstance(act, Recharging):
        gain = min(world.config.recharge_rate, agent.energy_full - agent.energy)
        if gain > 0:
            agent.energy += gain
            world.trace.emit(world.tick, "Recharge", agent=agent.id, amount=gain,
                             energy=agent.energy)
        if agent.energy >= agent.energy_full:
            agent.activity = Idle()
    elif isinstance(act, Avoiding):
        _move(world, agent, _evasion_target(world, agent))


def step(world: World) -> World:
    """Advance ``world`` in place by one tick and return it."""
    world.tick += 1
    _deliver(world)
    for aid in sorted(world.agents):
        _advance(world, world.agents[aid])
    for tid in sorted(world.tasks):
        task = world.tasks[tid]
        if not task.closed and task.deadline is not None and world.tick >= task.deadline:
            task.finish(TaskStatus.EXPIRED)
            world.trace.emit(world.tick, "Expire", task=tid)
    return world


def observe(world: World, agent_id: int, radius: Optional[int] = None) -> Observation:
    """Snapshot of everything within Chebyshev ``radius`` of the agent."""
    agent = world.agent(agent_id)
    if radius is None:
        radius = world.config.sensing_radius
    if radius < 0:
        raise ConfigError("radius must be >= 0")
    omit = world.config.omission_prob

    def seen(pos):
        if chebyshev(pos, agent.pos) > radius:
            return False
        return not (omit > 0.0 and world.rng.random() < omit)

    agents = tuple(copy.copy(a) for aid, a in sorted(world.agents.items())
                   if aid != agent_id and seen(a.pos))
    tasks = tuple(copy.copy(t) for _, t in sorted(world.tasks.items()) if seen(t.pos))
    advs = tuple(copy.copy(v) for _, v in sorted(world.adversaries.items())
                 if v.active and seen(v.pos))
    return Observation(agent_id, world.tick, agent.pos, agents, tasks, advs)
