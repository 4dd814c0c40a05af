import pytest

from swarmsass import bt
from swarmsass.runner import run, usar_metrics
from swarmsass.scenario import bundled
from swarmsass.usar import UsarController, run_usar
from swarmsass.world import TaskStatus


def test_adjacent_victim_is_rescued_before_deadline():
    world = run_usar(bundled("usar_minimal"), 0)
    assert world.tasks[0].status is TaskStatus.DONE
    (rescue,) = world.trace.of_kind("Rescue")
    assert rescue.tick < 10
    assert [e.payload["agent"] for e in world.trace.of_kind("Assign")] == [0]


def test_zero_victims_completes_at_start():
    scn = bundled("usar_minimal").replace(tasks=[])
    m = run(scn, 0).metrics
    assert m.victims == 0 and m.victims_rescued == 0 and m.completion_tick == 0


def test_runs_are_deterministic():
    scn = bundled("usar_default")
    assert run(scn, 7).trace.digest() == run(scn, 7).trace.digest()
    assert run(scn, 7).trace.digest() != run(scn, 8).trace.digest()


@pytest.mark.parametrize("seed", range(5))
def test_no_task_is_assigned_twice(seed):
    trace = run(bundled("usar_lossy"), seed).trace
    for tid in {e.payload["task"] for e in trace.of_kind("Assign")}:
        rescues = [e for e in trace.of_kind("Rescue") if e.payload["task"] == tid]
        assert len(rescues) <= 1


def test_unsafe_agents_send_nothing_on_unsafe_ticks():
    from dataclasses import replace

    base = bundled("usar_default")
    scn = base.replace(adversaries=[(0, (1, 1))], needs=replace(base.needs, safety_radius=4.0))
    visits = {}
    world = run_usar(scn, 3, visits=visits)
    senders_by_tick = {}
    for e in world.trace.of_kind("Send"):
        senders_by_tick.setdefault(e.tick, set()).add(e.payload["sender"])
    unsafe_ticks = 0
    for aid, log in visits.items():
        for tick, nodes in log:
            if bt.EVADE in nodes:
                unsafe_ticks += 1
                assert bt.NEGOTIATE not in nodes and bt.EXECUTE not in nodes
                assert aid not in senders_by_tick.get(tick, set())
    assert unsafe_ticks > 0


def test_random_baseline_assigns_without_sessions():
    scn = bundled("usar_default")
    scn = scn.replace(negotiation=type(scn.negotiation)(**{**scn.negotiation.__dict__, "assignment": "random"}))
    trace = run(scn, 0).trace
    assigns = trace.of_kind("Assign")
    assert assigns and all(e.payload["session"] is None for e in assigns)
    assert not trace.of_kind("Propose")


def test_trust_snapshots_are_recorded():
    trace = run(bundled("usar_default"), 0).trace
    snaps = trace.of_kind("TrustSnapshot")
    assert snaps and snaps[0].tick == 0
    tm = snaps[0].payload["trust"]
    assert all(tm[i][i] == 1.0 for i in range(len(tm)))


def test_metrics_are_recomputed_from_trace():
    result = run(bundled("usar_default"), 4)
    assert usar_metrics(result.trace) == result.metrics
    world = run_usar(bundled("usar_default"), 4)
    done = sum(t.status is TaskStatus.DONE for t in world.tasks.values())
    assert result.metrics.victims_rescued == done


def test_controller_rejects_unwired_tree():
    from swarmsass.errors import WiringError

    scn = bundled("usar_minimal")
    with pytest.raises(WiringError):
        UsarController(scn.build_world(0), scn, tree=bt.Action("unknown"))
