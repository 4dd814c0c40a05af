import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from swarmsass.negotiation import (
    SELECTION, Award, Bid, NegotiationLayer, Propose, auction_assign, make_bids,
    resolve_round, run_negotiation,
)
from swarmsass.oracles import best_matching_value
from swarmsass.world import step

from conftest import make_world


def line_world(n, **kw):
    return make_world(8, 8, agents=[(i, (i, 0)) for i in range(n)], **kw)


def table_utility(table):
    def u(agent, item):
        v = table[agent][item]
        return -math.inf if v is None else float(v)
    return u


def test_open_session_broadcasts_one_propose():
    w = line_world(3)
    layer = NegotiationLayer(w)
    prop = layer.open_session(0, SELECTION, [7], lambda a, t: 1.0)
    assert prop.items == (7,)
    sends = w.trace.of_kind("Send")
    assert len(sends) == 2 and all(e.payload["msg"]["type"] == "Propose" for e in sends)
    assert len(w.trace.of_kind("Propose")) == 1


def test_session_ids_are_unique_within_a_tick():
    w = line_world(2)
    layer = NegotiationLayer(w)
    a = layer.open_session(0, SELECTION, [1], lambda a, t: 1.0)
    b = layer.open_session(0, SELECTION, [2], lambda a, t: 1.0)
    assert a.session == (0, 0, 0) and b.session == (0, 0, 1)


def test_open_session_rejects_empty_items():
    layer = NegotiationLayer(line_world(1))
    with pytest.raises(ValueError):
        layer.open_session(0, SELECTION, [], lambda a, t: 1.0)


PROP = Propose((0, 0, 0), SELECTION, (1, 2))


def test_make_bids_abstains_on_ineligible_items():
    assert make_bids(3, PROP, {1: -math.inf, 2: -math.inf}) == []
    assert make_bids(3, PROP, {1: 3.0, 2: -math.inf}) == [Bid(PROP.session, 1, 3.0, 3)]
    bids = make_bids(3, PROP, {1: 3.0, 2: 1.0})
    assert len(bids) == 2 and {b.session for b in bids} == {PROP.session}


def test_resolve_round_argmax_and_tie_rule():
    bids = [Bid((), 1, 5.0, 1), Bid((), 1, 3.0, 2)]
    assert resolve_round(bids, [1]) == [Award((), 1, 1)]
    bids = [Bid((), 1, 4.0, 2), Bid((), 1, 4.0, 1)]
    assert resolve_round(bids, [1]) == [Award((), 1, 1)]


def test_resolve_round_one_item_per_agent():
    bids = [Bid((), 1, 5.0, 1), Bid((), 2, 4.0, 1), Bid((), 2, 1.0, 2)]
    assert resolve_round(bids, [1, 2]) == [Award((), 1, 1)]
    assert resolve_round(bids, [1, 2], one_per_agent=False) == [Award((), 1, 1), Award((), 2, 1)]


def test_resolve_round_without_bids_awards_nothing():
    assert resolve_round([], [1, 2]) == []


def negotiate(table, **kw):
    n = len(table)
    w = line_world(n, **kw)
    layer = NegotiationLayer(w)
    prop = layer.open_session(0, SELECTION, range(len(table[0])), table_utility(table))
    return w, run_negotiation(w, layer, prop.session)


def test_single_agent_single_task_in_one_round():
    _, res = negotiate([[2.0]])
    assert res.mapping == {0: 0} and res.rounds == 1


def test_three_by_three_greedy_rounds():
    w, res = negotiate([[9, 1, 1], [8, 7, 1], [1, 6, 5]])
    assert res.mapping == {0: 0, 1: 1, 2: 2}
    assert res.unassigned == ()
    acks = w.trace.of_kind("Ack")
    assert sorted(e.payload["item"] for e in acks) == [0, 1, 2]


def test_more_tasks_than_agents_leaves_remainder():
    _, res = negotiate([[3, 2, 1], [1, 2, 3]])
    assert len(res.mapping) == 2 and len(res.unassigned) == 1
    assert sorted(res.mapping.values()) == [0, 1]


def test_bus_protocol_matches_synchronous_auction():
    rng = np.random.default_rng(3)
    for _ in range(20):
        na, nt = rng.integers(1, 5, size=2)
        table = rng.integers(0, 9, size=(na, nt)).astype(float).tolist()
        _, res = negotiate(table, delay=int(rng.integers(0, 3)))
        sync = auction_assign(range(na), range(nt), table_utility(table))
        assert res.mapping == sync.mapping


def test_ineligible_agents_never_win():
    _, res = negotiate([[None, 5], [None, None], [2, None]])
    assert res.mapping == {0: 2, 1: 0}


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 4), st.integers(1, 4), st.integers(0, 10_000))
def test_auction_is_within_half_of_optimum(na, nt, seed):
    util = np.random.default_rng(seed).integers(0, 20, size=(na, nt)).astype(float)
    res = auction_assign(range(na), range(nt), lambda a, t: util[a, t])
    total = sum(util[a, t] for t, a in res.mapping.items())
    assert 2 * total >= best_matching_value(util.tolist())
    assert len(set(res.mapping.values())) == len(res.mapping)
    assert res.rounds <= min(na, nt) + 1


@pytest.mark.parametrize("seed", range(15))
def test_lossy_bus_never_double_awards(seed):
    rng = np.random.default_rng(seed)
    table = rng.integers(1, 9, size=(4, 4)).astype(float).tolist()
    w, res = negotiate(table, delay=int(rng.integers(0, 3)), loss_prob=0.3, seed=seed)
    acked = [e.payload["item"] for e in w.trace.of_kind("Ack")]
    assert len(acked) == len(set(acked))
    assert len(set(res.mapping.values())) == len(res.mapping)


def test_silenced_initiator_stalls_its_session():
    w = line_world(2)
    layer = NegotiationLayer(w)
    prop = layer.open_session(0, SELECTION, [0], lambda a, t: float(a))
    for _ in range(6):
        step(w)
        layer.process(silenced={0})
    assert not layer.sessions[prop.session].done
    assert not w.trace.of_kind("Award")
