import pytest

from swarmsass.errors import TraceIntegrityError
from swarmsass.replay import frames, render, replay
from swarmsass.runner import run
from swarmsass.scenario import bundled, parse_scenario
from swarmsass.trace import new_trace

EMPTY = """format: sass-scenario v1
name: empty
mode: usar
horizon: 3
grid: 3 2
obstacles: 1,1
"""


def test_empty_world_renders_bare_grid():
    world = parse_scenario(EMPTY).build_world(0)
    (frame,) = frames(world.trace)
    assert frame[1] == [".#.", "..."]


def _diff(a, b):
    return [(y, x) for y, (ra, rb) in enumerate(zip(a, b)) for x, (ca, cb) in enumerate(zip(ra, rb)) if ca != cb]


def test_single_move_changes_source_and_target_cells():
    trace = new_trace(grid={"width": 3, "height": 1, "obstacles": []})
    trace.emit(0, "Spawn", entity="agent", id=0, pos=(0, 0), energy=1, role="a")
    trace.emit(1, "Move", agent=0, frm=(0, 0), to=(1, 0), cost=1, energy=0)
    (t0, f0, _), (t1, f1, counts) = frames(trace)
    assert (t0, t1) == (0, 1)
    assert f0 == ["0.."] and f1 == [".0."]
    assert _diff(f0, f1) == [(0, 0), (0, 1)]
    assert counts["Move"] == 1


def test_tampered_trace_fails_integrity(tmp_path):
    path = run(bundled("usar_minimal"), 0).trace.dump(tmp_path / "t.trace")
    text = path.read_text()
    assert replay(path).startswith("scenario usar_minimal")
    path.write_text(text.replace('"energy":9', '"energy":8', 1))
    with pytest.raises(TraceIntegrityError, match="trace hash mismatch"):
        replay(path)


def test_render_lists_every_tick():
    trace = run(bundled("usar_minimal"), 0).trace
    out = render(trace)
    last = trace.events[-1].tick
    assert f"t={last}:" in out and "t=0:" in out
