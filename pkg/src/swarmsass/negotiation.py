"""Synchronous-round single-initiator auction over the simulated bus.

One agent (the initiator) proposes a set of items, every other agent
answers with bids, the initiator resolves the round and broadcasts awards,
and winners acknowledge.  Only the initiator issues awards, so an item can
never be bound to two agents.  Awards that are not acknowledged within
``2 * latency + 1`` ticks expire and the item is re-auctioned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Optional

from swarmsass.world import BROADCAST, World, send, step

SELECTION = "selection"
FORMATION = "formation"
ROUTING = "routing"
OP_KINDS = (SELECTION, FORMATION, ROUTING)

SessionId = tuple  # (initiator, tick, counter)
Utility = Callable[[int, int], float]


# ---------------------------------------------------------------------------
# messages
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Propose:
    session: SessionId
    op_kind: str
    items: tuple
    round: int = 0

    def to_payload(self):
        return {"type": "Propose", "session": list(self.session), "op": self.op_kind,
                "items": list(self.items), "round": self.round}


@dataclass(frozen=True)
class Bid:
    session: SessionId
    item: int
    utility: float
    bidder: int
    round: int = 0

    def to_payload(self):
        return {"type": "Bid", "session": list(self.session), "item": self.item,
                "utility": self.utility, "bidder": self.bidder, "round": self.round}


@dataclass(frozen=True)
class Award:
    session: SessionId
    item: int
    winner: int
    round: int = 0

    def to_payload(self):
        return {"type": "Award", "session": list(self.session), "item": self.item,
                "winner": self.winner, "round": self.round}


@dataclass(frozen=True)
class Ack:
    session: SessionId
    item: int
    agent: int

    def to_payload(self):
        return {"type": "Ack", "session": list(self.session), "item": self.item,
                "agent": self.agent}


@dataclass(frozen=True)
class Assignment:
    mapping: dict
    unassigned: tuple = ()
    rounds: int = 0

    def agents(self) -> list[int]:
        return sorted(self.mapping.values())

    def total(self, utility: Utility) -> float:
        return sum(utility(agent, item) for item, agent in self.mapping.items())


# ---------------------------------------------------------------------------
# pure round logic
# ---------------------------------------------------------------------------


def make_bids(agent: int, propose: Propose, utilities: Mapping[int, float]) -> list[Bid]:
    """One bid per proposed item with finite utility; others are abstentions."""
    bids = []
    for item in propose.items:
        u = utilities.get(item, -math.inf)
        if u == -math.inf or math.isnan(u):
            continue
        bids.append(Bid(propose.session, item, float(u), agent, propose.round))
    return bids


def resolve_round(
    bids: Iterable[Bid],
    open_items: Iterable[int],
    one_per_agent: bool = True,
    session: SessionId = (),
    round_no: int = 0,
) -> list[Award]:
    """Highest bid wins each item, ties to the lowest agent id.

    With ``one_per_agent`` an agent topping several items keeps only its
    highest-utility one (ties to the lowest item id); its other items get no
    award this round.
    """
    open_items = sorted(set(open_items))
    best: dict[int, tuple[float, int]] = {}
    for bid in bids:
        if bid.item not in open_items:
            continue
        cur = best.get(bid.item)
        if cur is None or bid.utility > cur[0] or (bid.utility == cur[0] and bid.bidder < cur[1]):
            best[bid.item] = (bid.utility, bid.bidder)
    winners = {item: best[item] for item in open_items if item in best}
    if one_per_agent:
        keep: dict[int, tuple[float, int]] = {}
        for item, (u, agent) in winners.items():
            cur = keep.get(agent)
            if cur is None or u > cur[0]:
                keep[agent] = (u, item)
        winners = {item: (u, agent) for agent, (u, item) in keep.items()}
    return [Award(session, item, winners[item][1], round_no) for item in sorted(winners)]


def auction_assign(
    agents: Iterable[int],
    items: Iterable[int],
    utility: Utility,
    one_per_agent: bool = True,
) -> Assignment:
    """Run the round protocol synchronously, without a bus.

    Produces the same assignment as :func:`run_negotiation` on a lossless
    bus; used where the auction is a planning step rather than a message
    exchange.
    """
    agents = sorted(agents)
    remaining = sorted(items)
    mapping: dict[int, int] = {}
    holders: set[int] = set()
    rounds = 0
    while remaining:
        bids = []
        for agent in agents:
            if one_per_agent and agent in holders:
                continue
            for item in remaining:
                u = utility(agent, item)
                if u != -math.inf and not math.isnan(u):
                    bids.append(Bid((), item, float(u), agent, rounds))
        rounds += 1
        if not bids:
            break
        for award in resolve_round(bids, remaining, one_per_agent, (), rounds - 1):
            mapping[award.item] = award.winner
            holders.add(award.winner)
        remaining = [i for i in remaining if i not in mapping]
    return Assignment(mapping, tuple(remaining), rounds)


# ---------------------------------------------------------------------------
# bus-driven protocol
# ---------------------------------------------------------------------------


@dataclass
class Session:
    id: SessionId
    initiator: int
    op_kind: str
    items: tuple
    utility: Utility
    one_per_agent: bool = True
    retry_budget: int = 10
    on_bind: Optional[Callable[["Session", int, int], bool]] = None

    bound: dict = field(default_factory=dict)
    pending: dict = field(default_factory=dict)  # item -> (winner, award tick)
    dropped: set = field(default_factory=set)
    bids: list = field(default_factory=list)
    round_items: tuple = ()
    round_deadline: int = 0
    rounds: int = 0
    retries: int = 0
    phase: str = "start"
    progressed: bool = False

    @property
    def done(self) -> bool:
        return self.phase == "done"

    def open_items(self) -> list[int]:
        return [i for i in self.items
                if i not in self.bound and i not in self.pending and i not in self.dropped]

    def assignment(self) -> Assignment:
        unassigned = tuple(i for i in self.items if i not in self.bound)
        return Assignment(dict(sorted(self.bound.items())), unassigned, self.rounds)


class NegotiationLayer:
    """Per-world protocol state: initiator sessions and participant holdings."""

    def __init__(self, world: World):
        self.world = world
        self.sessions: dict[SessionId, Session] = {}
        self.holding: dict[tuple[int, SessionId], int] = {}
        self._counters: dict[tuple[int, int], int] = {}

    # -- initiator side -----------------------------------------------------

    def open_session(
        self,
        initiator: int,
        op_kind: str,
        items: Iterable[int],
        utility: Utility,
        *,
        retry_budget: int = 10,
        on_bind=None,
    ) -> Propose:
        items = tuple(items)
        if not items:
            raise ValueError("cannot open a negotiation session with no items")
        if op_kind not in OP_KINDS:
            raise ValueError(f"unknown op kind {op_kind!r}")
        self.world.agent(initiator)
        key = (initiator, self.world.tick)
        counter = self._counters.get(key, 0)
        self._counters[key] = counter + 1
        sid = (initiator, self.world.tick, counter)
        session = Session(sid, initiator, op_kind, items, utility,
                          retry_budget=retry_budget, on_bind=on_bind)
        self.sessions[sid] = session
        return self._start_round(session)

    def _start_round(self, s: Session) -> Propose:
        w = self.world
        s.round_items = tuple(self.open_items_for(s))
        s.bids = []
        s.progressed = False
        s.round_deadline = w.tick + 2 * w.bus.latency + 1
        s.phase = "bidding"
        prop = Propose(s.id, s.op_kind, s.round_items, s.rounds)
        w.trace.emit(w.tick, "Propose", session=s.id, op=s.op_kind, items=s.round_items,
                     round=s.rounds, initiator=s.initiator)
        if len(w.agents) > 1:
            send(w, s.initiator, BROADCAST, prop)
        if not (s.one_per_agent and s.initiator in s.bound.values()):
            self._record_bids(s, self._bids_for(s.initiator, prop, s))
        return prop

    def open_items_for(self, s: Session) -> list[int]:
        return s.open_items()

    def _bids_for(self, agent: int, prop: Propose, s: Session) -> list[Bid]:
        utilities = {item: s.utility(agent, item) for item in prop.items}
        return make_bids(agent, prop, utilities)

    def _record_bids(self, s: Session, bids: list[Bid]) -> None:
        for bid in bids:
            if bid.item not in s.round_items:
                continue
            if s.one_per_agent and bid.bidder in s.bound.values():
                continue
            s.bids.append(bid)
            self.world.trace.emit(self.world.tick, "Bid", session=s.id, bidder=bid.bidder,
                                  item=bid.item, utility=bid.utility, round=bid.round)

    def _bind(self, s: Session, item: int, agent: int) -> None:
        if s.on_bind is not None and not s.on_bind(s, item, agent):
            s.dropped.add(item)
            return
        s.bound[item] = agent
        s.progressed = True
        self.world.trace.emit(self.world.tick, "Ack", session=s.id, item=item, agent=agent)

    def _resolve(self, s: Session) -> None:
        w = self.world
        awards = resolve_round(s.bids, s.round_items, s.one_per_agent, s.id, s.rounds)
        s.rounds += 1
        if not awards:
            if w.bus.loss_prob == 0.0 or s.retries >= s.retry_budget or not self._bidders_left(s):
                s.phase = "done"
            else:
                s.retries += 1
                self._start_round(s)
            return
        for award in awards:
            w.trace.emit(w.tick, "Award", session=s.id, item=award.item,
                         winner=award.winner, round=award.round)
            if len(w.agents) > 1:
                send(w, s.initiator, BROADCAST, award)
            if award.winner == s.initiator:
                self._bind(s, award.item, award.winner)
            else:
                s.pending[award.item] = (award.winner, w.tick)
        s.phase = "awarding"
        self._maybe_finish_round(s)

    def _bidders_left(self, s: Session) -> bool:
        if not s.one_per_agent:
            return True
        return any(a not in s.bound.values() for a in self.world.agents)

    def _maybe_finish_round(self, s: Session) -> None:
        w = self.world
        expiry = 2 * w.bus.latency + 1
        for item in sorted(s.pending):
            winner, at = s.pending[item]
            if winner not in w.agents or w.tick >= at + expiry:
                del s.pending[item]
        if s.pending:
            return
        if not s.progressed:
            s.retries += 1
        if not s.open_items():
            s.phase = "done"
        elif s.retries > s.retry_budget or not self._bidders_left(s):
            s.phase = "done"
        else:
            self._start_round(s)

    def _host_tick(self, s: Session) -> None:
        if s.phase == "bidding" and self.world.tick >= s.round_deadline:
            self._resolve(s)
        elif s.phase == "awarding":
            self._maybe_finish_round(s)

    # -- message handling -----------------------------------------------------

    def _handle(self, agent: int, env) -> None:
        msg = env.message
        w = self.world
        if isinstance(msg, Propose):
            s = self.sessions.get(msg.session)
            if s is None:
                return
            key = (agent, msg.session)
            held = self.holding.get(key)
            if held is not None and held in msg.items:
                # our ack never arrived and the item was re-opened
                del self.holding[key]
                held = None
            if held is not None and s.one_per_agent:
                return
            utilities = {item: s.utility(agent, item) for item in msg.items}
            for bid in make_bids(agent, msg, utilities):
                send(w, agent, msg.session[0], bid)
        elif isinstance(msg, Bid):
            s = self.sessions.get(msg.session)
            if s is None or s.phase != "bidding" or msg.round != s.rounds:
                return
            self._record_bids(s, [msg])
        elif isinstance(msg, Award):
            if msg.winner != agent:
                return
            self.holding[(agent, msg.session)] = msg.item
            send(w, agent, msg.session[0], Ack(msg.session, msg.item, agent))
        elif isinstance(msg, Ack):
            s = self.sessions.get(msg.session)
            if s is None:
                return
            pend = s.pending.get(msg.item)
            if pend is None or pend[0] != env.sender:
                return  # stale ack for an expired award
            del s.pending[msg.item]
            self._bind(s, msg.item, env.sender)

    def process(self, silenced: Iterable[int] = ()) -> None:
        """Handle this tick's deliveries, then advance initiator timers.

        Agents in ``silenced`` neither read their inbox nor drive the
        sessions they host this tick; their messages wait in the inbox.
        """
        w = self.world
        silenced = frozenset(silenced)
        for aid in sorted(w.agents):
            if aid in silenced:
                continue
            for env in w.take_inbox(aid):
                self._handle(aid, env)
        for sid in sorted(self.sessions):
            s = self.sessions[sid]
            if not s.done:
                if s.initiator not in w.agents:
                    s.phase = "done"
                    continue
                if s.initiator in silenced:
                    continue
                self._host_tick(s)

    def active(self) -> list[Session]:
        return [s for _, s in sorted(self.sessions.items()) if not s.done]


def open_session(layer: NegotiationLayer, initiator: int, op_kind: str, items, utility,
                 **kwargs) -> Propose:
    return layer.open_session(initiator, op_kind, items, utility, **kwargs)


def run_negotiation(
    world: World,
    layer: NegotiationLayer,
    session: SessionId,
    max_ticks: Optional[int] = None,
) -> Assignment:
    """Step ``world`` until ``session`` completes and return its outcome.

    Other agents keep executing their activities while the protocol runs.
    """
    s = layer.sessions[session]
    if max_ticks is None:
        per_round = 4 * world.bus.latency + 2
        max_ticks = per_round * (len(s.items) + s.retry_budget + 2) * 2
    start = world.tick
    layer.process()
    while not s.done and world.tick - start < max_ticks:
        step(world)
        layer.process()
    s.phase = "done"
    return s.assignment()
