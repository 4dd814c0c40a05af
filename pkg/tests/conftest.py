import numpy as np
import pytest

import swarmsass.kernels as kernels
from swarmsass.trace import Trace
from swarmsass.world import AgentState, Grid, MessageBus, Task, World, WorldConfig


@pytest.fixture(params=["numba", "numpy"])
def backend(request, monkeypatch):
    """Run the test once with the compiled kernels and once with pure numpy."""
    monkeypatch.setattr(kernels, "USE_NUMBA", request.param == "numba")
    return request.param


def make_world(width=8, height=8, agents=(), tasks=(), adversaries=(), *, delay=0,
               loss_prob=0.0, seed=0, sensing_radius=3, obstacles=()):
    """Small world builder used throughout the tests.

    ``agents`` items are ``(id, pos)`` or ``(id, pos, energy, capabilities)``.
    """
    agent_map = {}
    for spec in agents:
        aid, pos, *rest = spec
        energy = rest[0] if rest else 10.0
        caps = rest[1] if len(rest) > 1 else {}
        agent_map[aid] = AgentState(aid, pos, energy, dict(caps))
    task_map = {}
    for spec in tasks:
        tid, pos, *rest = spec
        required = rest[0] if rest else {}
        deadline = rest[1] if len(rest) > 1 else None
        task_map[tid] = Task(tid, pos, dict(required), 1.0, deadline)
    from swarmsass.world import AdversaryState

    adv = {vid: AdversaryState(vid, pos) for vid, pos in adversaries}
    return World(
        Grid(width, height, frozenset(obstacles)), agent_map, task_map, adv,
        MessageBus(delay, loss_prob), WorldConfig(sensing_radius=sensing_radius),
        np.random.default_rng(seed), Trace(),
    )


@pytest.fixture
def world_factory():
    return make_world
