"""Rebuild grid frames from a saved trace and render them as ASCII.

Glyphs: ``#`` obstacle, ``.`` free cell, ``V`` open victim, ``X`` active
adversary, ``x`` neutralised adversary, and agents by the last digit of
their id.  Agents are drawn over adversaries, adversaries over victims.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from swarmsass.trace import Trace


@dataclass
class FrameState:
    width: int
    height: int
    obstacles: frozenset
    agents: dict = field(default_factory=dict)
    victims: dict = field(default_factory=dict)
    adversaries: dict = field(default_factory=dict)  # id -> (pos, active)

    def apply(self, kind: str, p: dict) -> None:
        if kind == "Spawn":
            pos = tuple(p["pos"])
            if p["entity"] == "agent":
                self.agents[p["id"]] = pos
            elif p["entity"] == "task":
                self.victims[p["id"]] = pos
            else:
                self.adversaries[p["id"]] = (pos, True)
        elif kind == "Move":
            self.agents[p["agent"]] = tuple(p["to"])
        elif kind in ("Rescue", "Expire"):
            self.victims.pop(p["task"], None)
        elif kind == "Disable":
            self.agents.pop(p["agent"], None)
        elif kind == "Encounter" and p["success"]:
            pos, _ = self.adversaries[p["adversary"]]
            self.adversaries[p["adversary"]] = (pos, False)

    def glyphs(self) -> list[list[str]]:
        rows = [["." for _ in range(self.width)] for _ in range(self.height)]
        for x, y in self.obstacles:
            rows[y][x] = "#"
        for _, (x, y) in sorted(self.victims.items()):
            rows[y][x] = "V"
        for _, ((x, y), active) in sorted(self.adversaries.items()):
            rows[y][x] = "X" if active else "x"
        for aid, (x, y) in sorted(self.agents.items()):
            rows[y][x] = str(aid % 10)
        return rows

    def render(self) -> list[str]:
        # y grows upward on screen, so the top line is the largest y
        return ["".join(r) for r in reversed(self.glyphs())]


def initial_state(trace: Trace) -> FrameState:
    grid = trace.header.get("grid")
    if grid is None:
        raise ValueError("trace header has no grid description")
    return FrameState(int(grid["width"]), int(grid["height"]),
                      frozenset(tuple(c) for c in grid.get("obstacles", [])))


def frames(trace: Trace) -> list[tuple[int, list[str], Counter]]:
    """One frame per tick from the first to the last event tick.

    Each frame shows the state after that tick's events, alongside a count
    of the tick's event kinds.
    """
    state = initial_state(trace)
    by_tick: dict[int, list] = {}
    for e in trace.events:
        by_tick.setdefault(e.tick, []).append(e)
    if not by_tick:
        return [(0, state.render(), Counter())]
    out = []
    for t in range(min(by_tick), max(by_tick) + 1):
        events = by_tick.get(t, [])
        for e in events:
            state.apply(e.kind, e.payload)
        out.append((t, state.render(), Counter(e.kind for e in events)))
    return out


def render(trace: Trace) -> str:
    lines = [f"scenario {trace.header.get('scenario', '?')}  seed {trace.header.get('seed')}  "
             f"hash {trace.digest()}"]
    for t, rows, counts in frames(trace):
        digest = ", ".join(f"{k} x{n}" for k, n in sorted(counts.items())) or "no events"
        lines.append(f"t={t}: {digest}")
        lines.extend("  " + r for r in rows)
    return "\n".join(lines) + "\n"


def replay(path) -> str:
    """Load and verify ``path`` and return its rendering."""
    return render(Trace.load(Path(path)))
