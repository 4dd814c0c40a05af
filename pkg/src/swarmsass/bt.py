"""Memory-less behaviour-tree engine and the SASS agent tree."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

from swarmsass.errors import WiringError


class TickResult(enum.Enum):
    SUCCESS = "Success"
    FAILURE = "Failure"
    RUNNING = "Running"


@dataclass(frozen=True)
class Condition:
    id: str


@dataclass(frozen=True)
class Action:
    id: str


@dataclass(frozen=True)
class Selector:
    children: tuple

    def __post_init__(self):
        if not self.children:
            raise ValueError("selector needs at least one child")
        object.__setattr__(self, "children", tuple(self.children))


@dataclass(frozen=True)
class Sequence:
    children: tuple

    def __post_init__(self):
        if not self.children:
            raise ValueError("sequence needs at least one child")
        object.__setattr__(self, "children", tuple(self.children))


BTNode = Union[Selector, Sequence, Condition, Action]


class Blackboard(dict):
    """Agent-local key/value store shared by all leaves of one tree."""


@dataclass
class Leaves:
    """Predicate and action tables that leaf ids resolve against."""

    conditions: dict[str, Callable[[Blackboard], bool]] = field(default_factory=dict)
    actions: dict[str, Callable[[Blackboard], TickResult]] = field(default_factory=dict)

    def condition(self, leaf_id: str):
        def register(fn):
            self.conditions[leaf_id] = fn
            return fn

        return register

    def action(self, leaf_id: str):
        def register(fn):
            self.actions[leaf_id] = fn
            return fn

        return register


def tick(
    node: BTNode,
    bb: Blackboard,
    leaves: Leaves,
    log: Optional[list] = None,
) -> tuple[TickResult, Blackboard]:
    """Evaluate ``node`` once.  Every visited node is appended to ``log``."""
    if log is not None:
        log.append(node.id if isinstance(node, (Condition, Action)) else type(node).__name__)
    if isinstance(node, Selector):
        for child in node.children:
            result, bb = tick(child, bb, leaves, log)
            if result is not TickResult.FAILURE:
                return result, bb
        return TickResult.FAILURE, bb
    if isinstance(node, Sequence):
        for child in node.children:
            result, bb = tick(child, bb, leaves, log)
            if result is not TickResult.SUCCESS:
                return result, bb
        return TickResult.SUCCESS, bb
    if isinstance(node, Condition):
        try:
            pred = leaves.conditions[node.id]
        except KeyError:
            raise WiringError(f"no predicate registered for {node.id!r}") from None
        return (TickResult.SUCCESS if pred(bb) else TickResult.FAILURE), bb
    if isinstance(node, Action):
        try:
            act = leaves.actions[node.id]
        except KeyError:
            raise WiringError(f"no action registered for {node.id!r}") from None
        result = act(bb)
        if not isinstance(result, TickResult):
            raise WiringError(f"action {node.id!r} returned {result!r}, not a TickResult")
        return result, bb
    raise WiringError(f"not a behaviour-tree node: {node!r}")


def leaf_ids(node: BTNode) -> list[str]:
    if isinstance(node, (Condition, Action)):
        return [node.id]
    out = []
    for child in node.children:
        out.extend(leaf_ids(child))
    return out


def check_wiring(node: BTNode, leaves: Leaves) -> None:
    """Raise WiringError if any leaf id of ``node`` is unregistered."""
    for child in _walk(node):
        if isinstance(child, Condition) and child.id not in leaves.conditions:
            raise WiringError(f"no predicate registered for {child.id!r}")
        if isinstance(child, Action) and child.id not in leaves.actions:
            raise WiringError(f"no action registered for {child.id!r}")


def _walk(node):
    yield node
    if isinstance(node, (Selector, Sequence)):
        for child in node.children:
            yield from _walk(child)


PERCEIVE = "Pe:update-observation-and-needs"
SAFETY_OK = "Sa:safety-satisfied"
EVADE = "Sa:evade"
BASIC_OK = "BN:basic-satisfied"
RECHARGE = "BN:recharge"
CAPABLE = "Ca:capable-of-some-task"
UTILITIES = "U:compute-utilities"
PLAN = "Pl:plan-atomic-ops"
NEGOTIATE = "Ne:negotiate"
EXECUTE = "A&E:execute-agreement"


def build_sass_tree() -> Sequence:
    """Perception, then safety and energy guards, then the cooperation chain."""
    return Sequence((
        Action(PERCEIVE),
        Selector((Condition(SAFETY_OK), Action(EVADE))),
        Selector((Condition(BASIC_OK), Action(RECHARGE))),
        Sequence((
            Condition(CAPABLE),
            Action(UTILITIES),
            Action(PLAN),
            Action(NEGOTIATE),
            Action(EXECUTE),
        )),
    ))
