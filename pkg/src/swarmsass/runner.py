"""Single runs, seed sweeps and metrics derived from traces.

Metrics are always recomputed from the trace, never from live simulator
state, so a saved trace reproduces the reported numbers exactly.
"""

from __future__ import annotations

import csv
import io
import json
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional, Sequence

from swarmsass.trace import Trace

USAR_COLUMNS = ("seed", "victims", "victims_rescued", "completion_tick", "total_energy", "trace_hash")
EXPLORE_COLUMNS = ("seed", "success", "cost", "encounters", "trace_hash")


@dataclass(frozen=True)
class UsarMetrics:
    victims: int
    victims_rescued: int
    completion_tick: Optional[int]
    total_energy: float


@dataclass(frozen=True)
class ExploreMetrics:
    runs: int
    success_rate: float
    mean_cost: float


def usar_metrics(trace: Trace) -> UsarMetrics:
    victims = sum(1 for e in trace.of_kind("Spawn") if e.payload["entity"] == "task")
    rescues = trace.of_kind("Rescue")
    rescued = len(rescues)
    if victims == 0:
        start = trace.events[0].tick if trace.events else 0
        completion = start
    elif rescued == victims:
        completion = rescues[-1].tick
    else:
        completion = None
    energy = float(sum(e.payload["cost"] for e in trace.of_kind("Move", "Rescue")))
    return UsarMetrics(victims, rescued, completion, energy)


def explore_outcome(trace: Trace) -> tuple[bool, float, int]:
    """(success, cost, encounters) of the last episode recorded in ``trace``."""
    ends = trace.of_kind("EpisodeEnd")
    if not ends:
        raise ValueError("trace has no EpisodeEnd record")
    p = ends[-1].payload
    return bool(p["success"]), float(p["cost"]), int(p["encounters"])


def explore_metrics(outcomes: Sequence[tuple[bool, float]]) -> ExploreMetrics:
    n = len(outcomes)
    if n == 0:
        return ExploreMetrics(0, 0.0, 0.0)
    return ExploreMetrics(n, sum(bool(s) for s, _ in outcomes) / n,
                          sum(float(c) for _, c in outcomes) / n)


def metrics_from_trace(trace: Trace, mode: str):
    if mode == "usar":
        return usar_metrics(trace)
    success, cost, _ = explore_outcome(trace)
    return explore_metrics([(success, cost)])


@dataclass(frozen=True)
class RunResult:
    seed: int
    mode: str
    metrics: object
    trace: Trace

    def row(self) -> dict:
        h = self.trace.digest()
        if self.mode == "usar":
            m = self.metrics
            return {"seed": self.seed, "victims": m.victims, "victims_rescued": m.victims_rescued,
                    "completion_tick": "" if m.completion_tick is None else m.completion_tick,
                    "total_energy": m.total_energy, "trace_hash": h}
        success, cost, enc = explore_outcome(self.trace)
        return {"seed": self.seed, "success": int(success), "cost": cost, "encounters": enc,
                "trace_hash": h}


def run(scenario, seed: int) -> RunResult:
    """Simulate ``scenario`` once and compute its metrics from the trace."""
    seed = int(seed)
    if scenario.mode == "usar":
        from swarmsass.usar import run_usar

        trace = run_usar(scenario, seed).trace
    else:
        from swarmsass.explore import run_explore_episode

        trace = run_explore_episode(scenario, seed, keep_trace=True).trace
    return RunResult(seed, scenario.mode, metrics_from_trace(trace, scenario.mode), trace)


@dataclass(frozen=True)
class SweepResult:
    mode: str
    rows: list
    aggregate: dict

    def to_csv(self) -> str:
        cols = USAR_COLUMNS if self.mode == "usar" else EXPLORE_COLUMNS
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
        writer.writeheader()
        writer.writerows(self.rows)
        return buf.getvalue()


def aggregate_rows(mode: str, rows: Sequence[dict]) -> dict:
    rows = sorted(rows, key=lambda r: r["seed"])
    if mode == "usar":
        rescued = [r["victims_rescued"] for r in rows]
        return {"runs": len(rows),
                "median_victims_rescued": statistics.median(rescued),
                "mean_victims_rescued": sum(rescued) / len(rows),
                "mean_total_energy": sum(r["total_energy"] for r in rows) / len(rows)}
    m = explore_metrics([(bool(r["success"]), r["cost"]) for r in rows])
    return asdict(m)


def _run_row(args) -> dict:
    scenario, seed = args
    return run(scenario, seed).row()


def sweep(scenario, seeds: Sequence[int], workers: int = 1) -> SweepResult:
    """Run every seed independently; aggregation folds rows in seed order."""
    seeds = sorted({int(s) for s in seeds})
    if not seeds:
        raise ValueError("sweep needs at least one seed")
    jobs = [(scenario, s) for s in seeds]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_row, jobs))
    else:
        rows = [_run_row(j) for j in jobs]
    rows.sort(key=lambda r: r["seed"])
    return SweepResult(scenario.mode, rows, aggregate_rows(scenario.mode, rows))


def metrics_json(result: RunResult) -> str:
    return json.dumps({"seed": result.seed, "mode": result.mode, **asdict(result.metrics)},
                      sort_keys=True, indent=2) + "\n"


def write_text(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path
