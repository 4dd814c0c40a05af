import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from swarmsass.errors import TraceIntegrityError
from swarmsass.trace import Trace, new_trace, plain


def sample_trace():
    trace = new_trace("abc", 5, scenario="demo")
    trace.emit(0, "Spawn", entity="agent", id=0, pos=(1, 2), energy=np.float64(3.5), role="r")
    trace.emit(1, "Move", agent=0, frm=(1, 2), to=(2, 2), cost=1, energy=2.5)
    return trace


def test_round_trip_preserves_content_and_hash():
    trace = sample_trace()
    again = Trace.from_text(trace.to_text())
    assert again.header == trace.header and again.events == trace.events
    assert again.digest() == trace.digest()


def test_lines_are_sorted_json():
    lines = sample_trace().to_text().splitlines()
    assert lines[1] == '{"k":"Spawn","p":{"energy":3.5,"entity":"agent","id":0,"pos":[1,2],"role":"r"},"t":0}'
    assert lines[-1].startswith("#fnv1a64 ") and len(lines[-1]) == len("#fnv1a64 ") + 16


@pytest.mark.parametrize("mutate", [
    lambda t: t.replace('"cost":1', '"cost":2'),
    lambda t: t[:-1],
    lambda t: "\n".join(t.splitlines()[:-1]) + "\n",
    lambda t: t.replace("#fnv1a64 ", "#fnv1a64 0"),
])
def test_any_corruption_is_detected(mutate):
    with pytest.raises(TraceIntegrityError):
        Trace.from_text(mutate(sample_trace().to_text()))


def test_unknown_event_kind_is_rejected():
    with pytest.raises(ValueError):
        Trace().emit(0, "Teleport")


@given(st.recursive(st.integers() | st.booleans() | st.text(max_size=5),
                    lambda c: st.lists(c, max_size=3) | st.tuples(c, c)
                    | st.dictionaries(st.text(max_size=3), c, max_size=3), max_leaves=10))
def test_plain_values_survive_serialisation(value):
    trace = Trace()
    trace.emit(0, "Spawn", value=value)
    assert Trace.from_text(trace.to_text()).events[0].payload["value"] == plain(value)
