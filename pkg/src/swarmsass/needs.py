"""Five-level needs scoring, priority gating and needs-based task utility."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, fields
from typing import Optional, Sequence

import numpy as np

from swarmsass.errors import ConfigError
from swarmsass.world import AgentState, Moving, Observation, Task, TaskStatus, chebyshev, manhattan

EPS = 1e-9


class NeedLevel(enum.IntEnum):
    SAFETY = 0
    BASIC = 1
    CAPABILITY = 2
    TEAMING = 3
    SELF_UPGRADE = 4


@dataclass(frozen=True)
class NeedsVector:
    safety: float = 1.0
    basic: float = 1.0
    capability: float = 1.0
    teaming: float = 1.0
    self_upgrade: float = 0.0

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{f.name} score {v!r} outside [0, 1]")

    @classmethod
    def of(cls, values: Sequence[float]) -> "NeedsVector":
        if len(values) != 5:
            raise ValueError("a needs vector has exactly five components")
        return cls(*map(float, values))

    def as_array(self) -> np.ndarray:
        return np.array([self.safety, self.basic, self.capability, self.teaming, self.self_upgrade])

    def __getitem__(self, level: int) -> float:
        return float(self.as_array()[int(level)])


DEFAULT_THRESHOLDS = (0.3, 0.2, 0.0, 0.0, 0.0)


@dataclass(frozen=True)
class NeedsConfig:
    safety_radius: float = 2.0
    energy_full: float = 10.0
    thresholds: tuple = DEFAULT_THRESHOLDS
    alpha: float = 1.0

    def __post_init__(self):
        for name in ("safety_radius", "energy_full", "alpha"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"needs config {name} must be positive")
        if len(self.thresholds) != 5 or not all(0.0 <= t <= 1.0 for t in self.thresholds):
            raise ConfigError("thresholds must be five values in [0, 1]")
        object.__setattr__(self, "thresholds", tuple(float(t) for t in self.thresholds))


def clamp(x: float, lo: float = 0.0, hi: float = 1.0) -> float:
    return max(lo, min(hi, x))


def match_score(agent: AgentState, task: Task) -> float:
    """Mean skill of ``agent`` over the task's required capabilities."""
    if not task.required:
        return 1.0
    return sum(agent.skill(name) for name in sorted(task.required)) / len(task.required)


def is_capable(agent: AgentState, task: Task) -> bool:
    return all(agent.skill(name) >= need for name, need in task.required.items())


def evaluate_needs(
    agent: AgentState,
    obs: Observation,
    cfg: NeedsConfig,
    self_upgrade: float = 0.0,
) -> NeedsVector:
    if obs.observer != agent.id:
        raise ValueError("observation belongs to a different agent")
    threats = [v.pos for v in obs.adversaries]
    threats += [a.pos for a in obs.agents if isinstance(a.activity, Moving)]
    if threats:
        nearest = min(chebyshev(agent.pos, p) for p in threats)
        safety = clamp(nearest / cfg.safety_radius)
    else:
        safety = 1.0
    basic = clamp(agent.energy / cfg.energy_full)

    open_tasks = obs.open_tasks()
    capability = max((match_score(agent, t) for t in open_tasks), default=1.0)

    live = [t for t in obs.tasks if not t.closed]
    if live:
        teaming = sum(t.status is TaskStatus.ASSIGNED for t in live) / len(live)
    else:
        teaming = 1.0
    return NeedsVector(safety, basic, clamp(capability), teaming, clamp(self_upgrade))


def needs_distribution(nv: NeedsVector) -> np.ndarray:
    """Normalised deficit (unmet need) distribution over the five levels."""
    deficits = np.maximum(1.0 - nv.as_array(), EPS)
    return deficits / deficits.sum()


def priority_gate(nv: NeedsVector, thresholds: Sequence[float] = DEFAULT_THRESHOLDS) -> NeedLevel:
    """Lowest level whose score is below its threshold, else SELF_UPGRADE."""
    scores = nv.as_array()
    for level in NeedLevel:
        if scores[level] < thresholds[level]:
            return level
    return NeedLevel.SELF_UPGRADE


def task_utility(
    agent: AgentState,
    task: Task,
    nv: NeedsVector,
    cfg: NeedsConfig,
    distance: Optional[float] = None,
) -> float:
    """Reward scaled by skill match minus weighted travel cost.

    Returns ``-inf`` when the agent lacks a required capability or a lower
    need level is unmet.  ``distance`` defaults to the Manhattan distance.
    """
    if task.status is not TaskStatus.OPEN:
        raise ValueError(f"task {task.id} is not open")
    if not is_capable(agent, task):
        return -math.inf
    if priority_gate(nv, cfg.thresholds) < NeedLevel.CAPABILITY:
        return -math.inf
    if distance is None:
        distance = manhattan(agent.pos, task.pos)
    return match_score(agent, task) * task.reward - cfg.alpha * distance * agent.move_cost
