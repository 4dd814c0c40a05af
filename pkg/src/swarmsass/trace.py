"""Append-only event log with an FNV-1a integrity trailer.

On disk a trace is newline-delimited JSON::

    {"format":"sass-trace v1", ...header...}
    {"k":"Spawn","p":{...},"t":0}
    ...
    #fnv1a64 0123456789abcdef

The trailer hashes every byte that precedes it.  Keys are sorted and
separators compact so identical runs produce identical bytes.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from swarmsass import __version__
from swarmsass.errors import TraceIntegrityError
from swarmsass.kernels import fnv1a64

TRACE_FORMAT = "sass-trace v1"
HASH_PREFIX = "#fnv1a64 "

EVENT_KINDS = (
    "Spawn",
    "Move",
    "Send",
    "Deliver",
    "Drop",
    "Propose",
    "Bid",
    "Award",
    "Ack",
    "Assign",
    "Rescue",
    "Expire",
    "Encounter",
    "Solve",
    "TrustSnapshot",
    "EpisodeEnd",
    # extensions: energy gain and agent loss are state changes too
    "Recharge",
    "Disable",
)


def plain(value: Any) -> Any:
    """Convert ``value`` into JSON-native types (tuples become lists)."""
    if isinstance(value, dict):
        return {str(k): plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [plain(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        f = float(value)
        if not math.isfinite(f):
            raise ValueError(f"non-finite value {f!r} cannot be traced")
        return f
    if isinstance(value, np.ndarray):
        return plain(value.tolist())
    if value is None or isinstance(value, str):
        return value
    if hasattr(value, "to_payload"):
        return plain(value.to_payload())
    raise TypeError(f"cannot trace value of type {type(value).__name__}")


def _dumps(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


@dataclass(frozen=True)
class Event:
    tick: int
    kind: str
    payload: dict

    def to_line(self) -> str:
        return _dumps({"t": self.tick, "k": self.kind, "p": self.payload})


@dataclass
class Trace:
    header: dict = field(default_factory=dict)
    events: list[Event] = field(default_factory=list)

    def emit(self, tick: int, kind: str, **payload: Any) -> Event:
        if kind not in EVENT_KINDS:
            raise ValueError(f"unknown event kind {kind!r}")
        event = Event(int(tick), kind, plain(payload))
        self.events.append(event)
        return event

    def of_kind(self, *kinds: str) -> list[Event]:
        return [e for e in self.events if e.kind in kinds]

    def body(self) -> str:
        head = dict(self.header)
        head.setdefault("format", TRACE_FORMAT)
        lines = [_dumps(plain(head))]
        lines.extend(e.to_line() for e in self.events)
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        body = self.body()
        return f"{body}{HASH_PREFIX}{fnv1a64(body.encode()):016x}\n"

    def digest(self) -> str:
        return f"{fnv1a64(self.body().encode()):016x}"

    def dump(self, path) -> Path:
        path = Path(path)
        path.write_text(self.to_text(), encoding="utf-8")
        return path

    @classmethod
    def from_text(cls, text: str) -> "Trace":
        if not text.endswith("\n"):
            raise TraceIntegrityError("truncated trace: missing final newline")
        body, sep, trailer = text[:-1].rpartition("\n")
        if not sep or not trailer.startswith(HASH_PREFIX):
            raise TraceIntegrityError("truncated trace: missing hash line")
        body += "\n"
        expected = trailer[len(HASH_PREFIX):].strip()
        actual = f"{fnv1a64(body.encode()):016x}"
        if expected != actual:
            raise TraceIntegrityError(
                f"trace hash mismatch: file says {expected}, content hashes to {actual}"
            )
        lines = body.splitlines()
        try:
            header = json.loads(lines[0])
            events = []
            for line in lines[1:]:
                rec = json.loads(line)
                events.append(Event(rec["t"], rec["k"], rec["p"]))
        except (json.JSONDecodeError, KeyError, IndexError) as exc:
            raise TraceIntegrityError(f"malformed trace record: {exc}") from exc
        if header.get("format") != TRACE_FORMAT:
            raise TraceIntegrityError(f"unsupported trace format {header.get('format')!r}")
        return cls(header=header, events=events)

    @classmethod
    def load(cls, path) -> "Trace":
        raw = Path(path).read_bytes()
        try:
            text = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise TraceIntegrityError(f"trace is not UTF-8 text: {exc}") from exc
        return cls.from_text(text)


def new_trace(scenario_hash: str = "", seed: int = 0, **extra: Any) -> Trace:
    header = {
        "format": TRACE_FORMAT,
        "scenario_hash": scenario_hash,
        "seed": int(seed),
        "version": __version__,
    }
    header.update(plain(extra))
    return Trace(header=header)
