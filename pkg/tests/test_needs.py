import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from swarmsass.errors import ConfigError
from swarmsass.needs import (
    NeedLevel, NeedsConfig, NeedsVector, evaluate_needs, needs_distribution,
    priority_gate, task_utility,
)
from swarmsass.world import AgentState, Task, observe

from conftest import make_world

unit = st.floats(0.0, 1.0, allow_nan=False)
vectors = st.tuples(unit, unit, unit, unit, unit).map(NeedsVector.of)


def test_zero_energy_means_zero_basic():
    w = make_world(agents=[(0, (0, 0), 0.0)])
    nv = evaluate_needs(w.agents[0], observe(w, 0), NeedsConfig())
    assert nv.basic == 0.0


def test_all_satisfied_when_nothing_is_visible():
    w = make_world(agents=[(0, (0, 0), 10.0)])
    nv = evaluate_needs(w.agents[0], observe(w, 0), NeedsConfig(), self_upgrade=0.4)
    assert nv == NeedsVector(1.0, 1.0, 1.0, 1.0, 0.4)


def test_adjacent_adversary_scales_safety():
    w = make_world(agents=[(0, (2, 2))], adversaries=[(0, (3, 2))])
    nv = evaluate_needs(w.agents[0], observe(w, 0), NeedsConfig(safety_radius=4))
    assert nv.safety == pytest.approx(0.25)


def test_teaming_is_assigned_share_of_visible_live_tasks():
    w = make_world(agents=[(0, (0, 0))], tasks=[(0, (1, 1)), (1, (2, 2))])
    w.tasks[0].assign(0)
    nv = evaluate_needs(w.agents[0], observe(w, 0), NeedsConfig())
    assert nv.teaming == pytest.approx(0.5)


def test_non_positive_constants_are_rejected():
    for kwargs in ({"safety_radius": 0}, {"energy_full": -1}, {"alpha": 0}):
        with pytest.raises(ConfigError):
            NeedsConfig(**kwargs)
    with pytest.raises(ConfigError):
        NeedsConfig(thresholds=(0.1, 0.2))


def test_vector_components_are_bounded():
    with pytest.raises(ValueError):
        NeedsVector(1.2, 1, 1, 1, 1)
    with pytest.raises(ValueError):
        NeedsVector.of([1, 1, 1])


@pytest.mark.parametrize("values,expected", [
    ((1, 1, 1, 1, 1), (0.2, 0.2, 0.2, 0.2, 0.2)),
    ((1, 0, 1, 1, 1), (0, 1, 0, 0, 0)),
    ((0.5, 0.5, 1, 1, 1), (0.5, 0.5, 0, 0, 0)),
])
def test_needs_distribution_examples(values, expected):
    np.testing.assert_allclose(needs_distribution(NeedsVector.of(values)), expected, atol=1e-8)


@given(vectors)
def test_needs_distribution_sums_to_one(nv):
    d = needs_distribution(nv)
    assert abs(d.sum() - 1.0) <= 1e-9 and np.all(d >= 0)


@pytest.mark.parametrize("values,thresholds,expected", [
    ((1, 1, 1, 1, 1), (0.99,) * 5, NeedLevel.SELF_UPGRADE),
    ((0.1, 0.9, 0.9, 0.9, 0.9), (0.3, 0, 0, 0, 0), NeedLevel.SAFETY),
    ((0.9, 0.2, 0.9, 0.9, 0.9), (0.3,) * 5, NeedLevel.BASIC),
])
def test_priority_gate_examples(values, thresholds, expected):
    assert priority_gate(NeedsVector.of(values), thresholds) is expected


def test_need_levels_are_totally_ordered():
    assert list(NeedLevel) == sorted(NeedLevel)
    assert NeedLevel.SAFETY < NeedLevel.BASIC < NeedLevel.CAPABILITY < NeedLevel.TEAMING < NeedLevel.SELF_UPGRADE


@settings(max_examples=200)
@given(vectors, st.integers(0, 4), unit, st.tuples(unit, unit, unit, unit, unit))
def test_priority_gate_is_monotone(nv, level, bump, thresholds):
    raised = nv.as_array()
    raised[level] = max(raised[level], bump)
    assert priority_gate(NeedsVector.of(raised), thresholds) >= priority_gate(nv, thresholds)


def _pair(skill=1.0, pos=(0, 0), move_cost=1.0, required=None, reward=10.0):
    agent = AgentState(0, pos, 10.0, {"rescue": skill}, move_cost=move_cost)
    task = Task(0, (0, 0), {"rescue": 0.0} if required is None else required, reward)
    return agent, task


def test_missing_capability_is_ineligible():
    agent, task = _pair(skill=0.2, required={"rescue": 0.5})
    assert task_utility(agent, task, NeedsVector(), NeedsConfig()) == -math.inf


def test_unmet_lower_need_is_ineligible():
    agent, task = _pair()
    assert task_utility(agent, task, NeedsVector(basic=0.1), NeedsConfig()) == -math.inf


def test_full_match_at_zero_distance_returns_reward():
    agent, task = _pair()
    assert task_utility(agent, task, NeedsVector(), NeedsConfig()) == pytest.approx(10.0)


def test_half_match_with_travel_cost():
    agent, task = _pair(skill=0.5, pos=(4, 0), move_cost=0.5)
    assert task_utility(agent, task, NeedsVector(), NeedsConfig(alpha=1.0)) == pytest.approx(3.0)


def test_closed_task_is_a_precondition_error():
    agent, task = _pair()
    task.assign(0)
    with pytest.raises(ValueError):
        task_utility(agent, task, NeedsVector(), NeedsConfig())


@given(st.integers(0, 50), st.integers(1, 50), st.floats(0.1, 3.0))
def test_utility_strictly_decreases_with_distance(d, extra, alpha):
    agent, task = _pair()
    cfg = NeedsConfig(alpha=alpha)
    near = task_utility(agent, task, NeedsVector(), cfg, distance=d)
    far = task_utility(agent, task, NeedsVector(), cfg, distance=d + extra)
    assert far < near


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000))
def test_evaluate_needs_always_yields_valid_vector(seed):
    rng = np.random.default_rng(seed)
    cells = [tuple(map(int, c)) for c in rng.permutation([(x, y) for x in range(5) for y in range(5)])]
    w = make_world(5, 5, agents=[(0, cells[0], float(rng.uniform(0, 30))), (1, cells[1])],
                   tasks=[(0, cells[2], {"a": float(rng.random())})],
                   adversaries=[(0, cells[3])])
    cfg = NeedsConfig(safety_radius=float(rng.uniform(0.5, 5)), energy_full=float(rng.uniform(1, 20)))
    nv = evaluate_needs(w.agents[0], observe(w, 0), cfg)
    assert np.all((nv.as_array() >= 0) & (nv.as_array() <= 1))
