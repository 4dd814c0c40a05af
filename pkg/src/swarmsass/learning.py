"""Beta-Bernoulli outcome posteriors that parameterise and prune the GUT."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Union

import numpy as np

from swarmsass.gut import GutNode, PayoffModel, solve_matrix_game

PRIOR = (1, 1)
PRIOR_VARIANCE = 1.0 / 12.0  # variance of Beta(1, 1)

Key = tuple  # (node_id, row, col)


def beta_mean(a: float, b: float) -> float:
    return a / (a + b)


def beta_variance(a: float, b: float) -> float:
    s = a + b
    return a * b / (s * s * (s + 1.0))


@dataclass
class OutcomePosterior:
    counts: dict = field(default_factory=dict)

    def get(self, key: Key) -> tuple[int, int]:
        return self.counts.get(tuple(key), PRIOR)

    def mean(self, key: Key) -> float:
        return beta_mean(*self.get(key))

    def variance(self, key: Key) -> float:
        return beta_variance(*self.get(key))

    def observe(self, key: Key, success: bool) -> None:
        a, b = self.get(key)
        self.counts[tuple(key)] = (a + 1, b) if success else (a, b + 1)

    def copy(self) -> "OutcomePosterior":
        return OutcomePosterior(dict(self.counts))

    def means(self) -> dict:
        return {k: self.mean(k) for k in sorted(self.counts)}


def _is_success(outcome: Union[bool, str]) -> bool:
    if isinstance(outcome, str):
        if outcome not in ("success", "failure"):
            raise ValueError(f"outcome must be 'success' or 'failure', got {outcome!r}")
        return outcome == "success"
    return bool(outcome)


def update_posterior(post: OutcomePosterior, key: Key, outcome) -> OutcomePosterior:
    """New posterior with one more success or failure at ``key``."""
    out = post.copy()
    out.observe(key, _is_success(outcome))
    return out


def cell_keys(gut: GutNode) -> list[Key]:
    return [(node.node_id, i, j)
            for node in gut.walk()
            for i in range(len(node.rows))
            for j in range(len(node.cols))]


def posterior_payoff(gut: GutNode, post: OutcomePosterior, win_value: float,
                     loss_value: float) -> GutNode:
    """Copy of ``gut`` whose entries are expected win/loss values."""
    m, n = len(gut.rows), len(gut.cols)
    base = np.empty((m, n))
    for i in range(m):
        for j in range(n):
            p = post.mean((gut.node_id, i, j))
            base[i, j] = p * win_value + (1.0 - p) * loss_value
    children = {k: posterior_payoff(c, post, win_value, loss_value)
                for k, c in sorted(gut.children.items())}
    return GutNode(gut.node_id, gut.level, gut.rows, gut.cols, PayoffModel(base), children)


def prune(gut: GutNode, post: Optional[OutcomePosterior], eps_reach: float,
          state=None, _reach: float = 1.0) -> GutNode:
    """Drop children whose equilibrium reach probability is below ``eps_reach``.

    Reach of child ``(i, j)`` is ``row[i] * col[j]`` times the parent's reach.
    ``post`` is unused when payoffs were already substituted and is accepted
    for symmetry with :func:`posterior_payoff`.
    """
    if not 0.0 <= eps_reach < 1.0:
        raise ValueError("eps_reach must lie in [0, 1)")
    kept = {}
    if gut.children:
        sol = solve_matrix_game(gut.matrix(state))
        for (i, j), child in sorted(gut.children.items()):
            reach = _reach * float(sol.row[i]) * float(sol.col[j])
            if reach < eps_reach:
                continue
            kept[(i, j)] = prune(child, post, eps_reach, state, reach)
    return GutNode(gut.node_id, gut.level, gut.rows, gut.cols, gut.payoff, kept)


def self_upgrade_score(post: OutcomePosterior, keys: Optional[Iterable[Key]] = None) -> float:
    """``1 - mean posterior variance / Var[Beta(1,1)]`` clamped to [0, 1]."""
    keys = list(post.counts) if keys is None else list(keys)
    if not keys:
        return 0.0
    mean_var = float(np.mean([post.variance(k) for k in keys]))
    return min(1.0, max(0.0, 1.0 - mean_var / PRIOR_VARIANCE))


# ---------------------------------------------------------------------------
# learning curve
# ---------------------------------------------------------------------------

CURVE_COLUMNS = ("episode", "success", "cost", "value", "mean_variance")


@dataclass(frozen=True)
class EpisodeRecord:
    episode: int
    success: bool
    cost: float
    value: float
    mean_variance: float
    means: dict = field(default_factory=dict, compare=True, hash=False)


@dataclass
class LearningCurve:
    records: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    def __getitem__(self, k) -> EpisodeRecord:
        return self.records[k]

    def append(self, rec: EpisodeRecord) -> None:
        if rec.episode != len(self.records):
            raise ValueError("episode indices must be contiguous from 0")
        self.records.append(rec)

    def success_rate(self, start: int = 0, stop: Optional[int] = None) -> float:
        recs = self.records[start:stop]
        return sum(r.success for r in recs) / len(recs) if recs else 0.0

    def rows(self) -> list[dict]:
        return [{"episode": r.episode, "success": int(r.success), "cost": r.cost,
                 "value": r.value, "mean_variance": r.mean_variance} for r in self.records]

    def write_csv(self, path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=CURVE_COLUMNS)
            writer.writeheader()
            writer.writerows(self.rows())
        return path


def adapt_loop(scenario, episodes: int, seed: int, *, trace_episodes: bool = False):
    """Simulate, update posteriors, re-substitute payoffs and prune, per episode.

    Returns ``(curve, posterior)``.  Episode ``e`` runs with an rng derived
    from ``(seed, e)``; the posterior carries across episodes.
    """
    from swarmsass.explore import ExplorePlanner, run_explore_episode

    if episodes < 0:
        raise ValueError("episodes must be >= 0")
    gut_spec = scenario.gut
    if gut_spec is None:
        from swarmsass.errors import ScenarioError

        raise ScenarioError("adaptive learning needs a [gut] section")
    full = gut_spec.tree()
    keys = cell_keys(full)
    post = OutcomePosterior()
    curve = LearningCurve()
    planner = ExplorePlanner(scenario)
    for e in range(episodes):
        substituted = posterior_payoff(full, post, gut_spec.win_value, gut_spec.loss_value)
        decision = prune(substituted, post, gut_spec.eps_reach)
        value = solve_matrix_game(decision.matrix()).value
        rng_seed = int(np.random.SeedSequence([int(seed), e]).generate_state(1)[0])
        result = run_explore_episode(
            scenario, rng_seed, decision_tree=decision, fallback_tree=substituted,
            selector=gut_spec.learn_selector, planner=planner, episode=e,
            keep_trace=trace_episodes,
        )
        for enc in result.encounters:
            for k in enc.cells:
                post.observe(k, enc.success)
        curve.append(EpisodeRecord(
            e, result.success, result.cost, value,
            float(np.mean([post.variance(k) for k in keys])), post.means(),
        ))
    return curve, post
