"""Scenario files: parsing, validation, serialisation and world construction.

The format is line oriented.  The first meaningful line is the version
header ``format: sass-scenario v1``; ``key: value`` lines set options,
``[section]`` lines switch section and the ``[agents]``, ``[tasks]`` and
``[adversaries]`` sections are whitespace-separated tables.  ``#`` starts a
comment.  See ``swarmsass/data/*.sass`` for complete examples.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from swarmsass.errors import ConfigError, GameError, ScenarioError
from swarmsass.gut import GutNode, PayoffModel, build_tree
from swarmsass.kernels import fnv1a64
from swarmsass.needs import DEFAULT_THRESHOLDS, NeedsConfig
from swarmsass.trace import new_trace
from swarmsass.world import (
    AdversaryState,
    AgentState,
    Grid,
    MessageBus,
    Task,
    World,
    WorldConfig,
)

FORMAT_HEADER = "sass-scenario v1"
MODES = ("usar", "explore")
SELECTORS = ("argmax", "sample")
ADVERSARY_POLICIES = ("uniform", "equilibrium")
ASSIGNMENT_MODES = ("sass", "random")
STATE_FEATURES = ("team_ratio", "energy_ratio", "goal_distance")

DATA_DIR = Path(__file__).parent / "data"


@dataclass(frozen=True)
class AgentSpec:
    id: int
    pos: tuple
    energy: float
    move_cost: float = 1.0
    execute_cost: float = 1.0
    role: str = "agent"
    capabilities: dict = field(default_factory=dict)


@dataclass(frozen=True)
class TaskSpec:
    id: int
    pos: tuple
    reward: float = 1.0
    deadline: Optional[int] = None
    required: dict = field(default_factory=dict)


@dataclass(frozen=True)
class NegotiationConfig:
    delay: int = 1
    loss_prob: float = 0.0
    retry_budget: int = 10
    assignment: str = "sass"


@dataclass(frozen=True)
class ExploreConfig:
    goal_x: int = -1  # -1: the eastmost column
    encounter_radius: int = 1
    required_arrivals: int = 0  # 0: the whole team


@dataclass
class GutSpec:
    levels: list = field(default_factory=list)  # [(rows, cols), ...]
    bases: dict = field(default_factory=dict)  # target -> matrix
    coefs: dict = field(default_factory=dict)  # (target, feature) -> matrix
    hidden_default: float = 0.5
    hidden_paths: dict = field(default_factory=dict)  # row-index path -> p
    hidden_cells: dict = field(default_factory=dict)  # (node, i, j) -> p
    win_value: float = 1.0
    loss_value: float = -1.0
    eps_reach: float = 0.0
    selector: str = "argmax"
    learn_selector: str = "sample"
    adversary_policy: str = "uniform"

    def _lookup(self, table: dict, node_id: str, level: int, extra=()):
        for target in (node_id, f"level{level}", "*"):
            key = (target, *extra) if extra else target
            if key in table:
                return table[key]
        return None

    def payoff_for(self, node_id: str, level: int) -> PayoffModel:
        rows, cols = self.levels[level]
        base = self._lookup(self.bases, node_id, level)
        if base is None:
            base = np.zeros((len(rows), len(cols)))
        coef = {}
        for feat in sorted({f for (_, f) in self.coefs}):
            mat = self._lookup(self.coefs, node_id, level, (feat,))
            if mat is not None:
                coef[feat] = mat
        return PayoffModel(base, coef)

    def tree(self) -> GutNode:
        return build_tree(self.levels, self.payoff_for)

    def hidden_prob(self, combo) -> float:
        """True success probability of an encounter resolved with ``combo``."""
        path = tuple(s.row for s in combo)
        if path in self.hidden_paths:
            return self.hidden_paths[path]
        for s in reversed(combo):
            p = self.hidden_cells.get((s.node_id, s.row, s.col))
            if p is not None:
                return p
        return self.hidden_default


@dataclass
class Scenario:
    name: str = "scenario"
    mode: str = "usar"
    horizon: int = 100
    grid: Grid = field(default_factory=lambda: Grid(8, 8))
    capabilities: tuple = ()
    agents: list = field(default_factory=list)
    tasks: list = field(default_factory=list)
    adversaries: list = field(default_factory=list)  # [(id, (x, y))]
    world_config: WorldConfig = field(default_factory=WorldConfig)
    needs: NeedsConfig = field(default_factory=NeedsConfig)
    negotiation: NegotiationConfig = field(default_factory=NegotiationConfig)
    explore: ExploreConfig = field(default_factory=ExploreConfig)
    gut: Optional[GutSpec] = None
    trust_interval: int = 10
    randomize_tasks: bool = False
    source: Optional[str] = None

    @property
    def text(self) -> str:
        return self.source if self.source is not None else dump_scenario(self)

    @property
    def hash(self) -> str:
        return f"{fnv1a64(self.text.encode()):016x}"

    def replace(self, **changes) -> "Scenario":
        """Copy with ``changes`` applied; the copy re-serialises its own text."""
        changes.setdefault("source", None)
        return dataclasses.replace(self, **changes)

    def build_world(self, seed: int) -> World:
        rng = np.random.default_rng(int(seed))
        grid = self.grid
        agents = {
            a.id: AgentState(a.id, a.pos, a.energy, dict(a.capabilities), move_cost=a.move_cost,
                             execute_cost=a.execute_cost, energy_full=self.needs.energy_full,
                             role=a.role)
            for a in self.agents
        }
        tasks = {t.id: Task(t.id, t.pos, dict(t.required), t.reward, t.deadline) for t in self.tasks}
        if self.randomize_tasks and tasks:
            taken = {a.pos for a in agents.values()}
            free = [(x, y) for x in range(grid.width) for y in range(grid.height)
                    if grid.is_free((x, y)) and (x, y) not in taken]
            picks = rng.choice(len(free), size=len(tasks), replace=False)
            for tid, k in zip(sorted(tasks), picks):
                tasks[tid].pos = free[int(k)]
        advs = {vid: AdversaryState(vid, pos) for vid, pos in self.adversaries}
        trace = new_trace(self.hash, seed, scenario=self.name, mode=self.mode,
                          grid={"width": grid.width, "height": grid.height,
                                "obstacles": sorted(grid.obstacles)})
        bus = MessageBus(self.negotiation.delay, self.negotiation.loss_prob)
        world = World(grid, agents, tasks, advs, bus, self.world_config, rng, trace)
        world.spawn_events()
        return world


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------


def parse_matrix(text: str, line: int, key: str) -> np.ndarray:
    try:
        rows = [[float(v) for v in r.split(",")] for r in text.strip().split(";")]
    except ValueError:
        raise ScenarioError(f"bad matrix literal {text!r}", line, key) from None
    if len({len(r) for r in rows}) != 1:
        raise ScenarioError(f"ragged matrix literal {text!r}", line, key)
    return np.array(rows)


def format_matrix(m) -> str:
    return ";".join(",".join(_num(v) for v in row) for row in np.asarray(m))


def _num(v) -> str:
    v = float(v)
    return str(int(v)) if v.is_integer() and abs(v) < 1e15 else repr(v)


def _cell(text: str, line: int, key: str) -> tuple:
    try:
        x, y = text.split(",")
        return int(x), int(y)
    except ValueError:
        raise ScenarioError(f"bad cell {text!r}, expected x,y", line, key) from None


def _kv_pairs(tokens, line, key) -> dict:
    out = {}
    for tok in tokens:
        name, sep, val = tok.partition("=")
        if not sep:
            raise ScenarioError(f"expected name=value, got {tok!r}", line, key)
        try:
            out[name] = float(val)
        except ValueError:
            raise ScenarioError(f"bad number in {tok!r}", line, key) from None
    return out


def _bool(text, line, key) -> bool:
    t = text.strip().lower()
    if t in ("true", "yes", "1", "on"):
        return True
    if t in ("false", "no", "0", "off"):
        return False
    raise ScenarioError(f"expected a boolean, got {text!r}", line, key)


def _convert(fn, text, line, key):
    try:
        return fn(text)
    except (TypeError, ValueError):
        raise ScenarioError(f"bad value {text!r}", line, key) from None


TABLES = ("agents", "tasks", "adversaries")
KV_SECTIONS = ("", "needs", "negotiation", "explore", "gut")


def parse_scenario(text: str) -> Scenario:
    lines = text.splitlines()
    sections: dict[str, list] = {s: [] for s in KV_SECTIONS + TABLES}
    section = ""
    seen_header = False
    for lineno, raw in enumerate(lines, start=1):
        content = raw.split("#", 1)[0].strip()
        if not content:
            continue
        if not seen_header:
            key, _, val = content.partition(":")
            if key.strip() != "format" or val.strip() != FORMAT_HEADER:
                raise ScenarioError(f"first line must be 'format: {FORMAT_HEADER}'", lineno, "format")
            seen_header = True
            continue
        if content.startswith("[") and content.endswith("]"):
            section = content[1:-1].strip().lower()
            if section not in sections:
                raise ScenarioError(f"unknown section [{section}]", lineno)
            continue
        if section in TABLES:
            sections[section].append((lineno, content.split()))
        else:
            key, sep, val = content.partition(":")
            if not sep:
                raise ScenarioError(f"expected 'key: value', got {content!r}", lineno)
            sections[section].append((lineno, key.strip(), val.strip()))
    if not seen_header:
        raise ScenarioError(f"missing 'format: {FORMAT_HEADER}' header", 1, "format")

    scn = Scenario(source=text)
    lines_of: dict = {}
    _parse_globals(scn, sections[""], lines_of)
    scn.needs = _parse_needs(sections["needs"])
    scn.negotiation = _parse_negotiation(sections["negotiation"])
    scn.explore = _parse_explore(sections["explore"])
    if sections["gut"]:
        scn.gut = _parse_gut(sections["gut"])
    scn.agents = _parse_agents(sections["agents"], lines_of)
    scn.tasks = _parse_tasks(sections["tasks"], lines_of)
    scn.adversaries = _parse_adversaries(sections["adversaries"], lines_of)
    validate_scenario(scn, lines_of)
    return scn


def _parse_globals(scn: Scenario, entries, lines_of) -> None:
    wc = {}
    for line, key, val in entries:
        lines_of[key] = line
        if key == "name":
            scn.name = val
        elif key == "mode":
            scn.mode = val.lower()
        elif key == "horizon":
            scn.horizon = _convert(int, val, line, key)
        elif key == "grid":
            parts = val.split()
            if len(parts) != 2:
                raise ScenarioError("grid needs 'width height'", line, key)
            w, h = (_convert(int, p, line, key) for p in parts)
            if w < 1 or h < 1:
                raise ScenarioError("grid dimensions must be positive", line, key)
            scn.grid = Grid(w, h, scn.grid.obstacles)
        elif key == "obstacles":
            cells = frozenset(_cell(tok, line, key) for tok in val.split())
            scn.grid = Grid(scn.grid.width, scn.grid.height, cells)
        elif key == "capabilities":
            scn.capabilities = tuple(val.split())
        elif key in ("sensing_radius",):
            wc[key] = _convert(int, val, line, key)
        elif key in ("recharge_rate", "omission_prob"):
            wc[key] = _convert(float, val, line, key)
        elif key == "trust_interval":
            scn.trust_interval = _convert(int, val, line, key)
        elif key == "randomize_tasks":
            scn.randomize_tasks = _bool(val, line, key)
        else:
            raise ScenarioError("unknown key", line, key)
    try:
        scn.world_config = WorldConfig(**wc)
    except ConfigError as exc:
        raise ScenarioError(str(exc), None, "world") from None


def _parse_needs(entries) -> NeedsConfig:
    kw = {}
    for line, key, val in entries:
        if key == "thresholds":
            vals = tuple(_convert(float, v, line, key) for v in val.split())
            if len(vals) != 5:
                raise ScenarioError("thresholds need five values", line, key)
            kw[key] = vals
        elif key in ("safety_radius", "energy_full", "alpha"):
            kw[key] = _convert(float, val, line, key)
        else:
            raise ScenarioError("unknown key in [needs]", line, key)
    try:
        return NeedsConfig(**kw)
    except ConfigError as exc:
        raise ScenarioError(str(exc), None, "needs") from None


def _parse_negotiation(entries) -> NegotiationConfig:
    kw = {}
    for line, key, val in entries:
        if key in ("delay", "retry_budget"):
            kw[key] = _convert(int, val, line, key)
        elif key == "loss_prob":
            kw[key] = _convert(float, val, line, key)
        elif key == "assignment":
            if val not in ASSIGNMENT_MODES:
                raise ScenarioError(f"assignment must be one of {ASSIGNMENT_MODES}", line, key)
            kw[key] = val
        else:
            raise ScenarioError("unknown key in [negotiation]", line, key)
        if key == "delay" and kw[key] < 0:
            raise ScenarioError("delay must be >= 0", line, key)
        if key == "loss_prob" and not 0.0 <= kw[key] < 1.0:
            raise ScenarioError("loss_prob must lie in [0, 1)", line, key)
    return NegotiationConfig(**kw)


def _parse_explore(entries) -> ExploreConfig:
    kw = {}
    for line, key, val in entries:
        if key in ("goal_x", "encounter_radius", "required_arrivals"):
            kw[key] = _convert(int, val, line, key)
        else:
            raise ScenarioError("unknown key in [explore]", line, key)
    return ExploreConfig(**kw)


def _parse_gut(entries) -> GutSpec:
    spec = GutSpec()
    level_lines = []
    deferred = []
    for line, key, val in entries:
        if key == "level":
            left, sep, right = val.partition("|")
            rows = tuple(s.strip() for s in left.split(",") if s.strip())
            cols = tuple(s.strip() for s in right.split(",") if s.strip())
            if not sep or not rows or not cols:
                raise ScenarioError("level needs 'row,row | col,col'", line, key)
            spec.levels.append((rows, cols))
            level_lines.append(line)
        elif key in ("base", "coef", "hidden", "hidden_path"):
            deferred.append((line, key, val))
        elif key in ("win_value", "loss_value", "eps_reach", "hidden_default"):
            setattr(spec, key, _convert(float, val, line, key))
        elif key in ("selector", "learn_selector"):
            if val not in SELECTORS:
                raise ScenarioError(f"{key} must be one of {SELECTORS}", line, key)
            setattr(spec, key, val)
        elif key == "adversary_policy":
            if val not in ADVERSARY_POLICIES:
                raise ScenarioError(f"adversary_policy must be one of {ADVERSARY_POLICIES}", line, key)
            spec.adversary_policy = val
        else:
            raise ScenarioError("unknown key in [gut]", line, key)
    if not spec.levels:
        raise ScenarioError("[gut] needs at least one 'level:' line", None, "level")
    if not 0.0 <= spec.eps_reach < 1.0:
        raise ScenarioError("eps_reach must lie in [0, 1)", None, "eps_reach")
    if not 0.0 <= spec.hidden_default <= 1.0:
        raise ScenarioError("hidden_default must lie in [0, 1]", None, "hidden_default")
    tree_ids = {node.node_id: node.level for node in spec.tree().walk()}

    def target_level(target, line, key):
        if target == "*":
            if len({(len(r), len(c)) for r, c in spec.levels}) != 1:
                raise ScenarioError("'*' target needs equally shaped levels", line, key)
            return 0
        if target.startswith("level") and target[5:].isdigit():
            lvl = int(target[5:])
            if lvl >= len(spec.levels):
                raise ScenarioError(f"no {target} in a {len(spec.levels)}-level tree", line, key)
            return lvl
        if target not in tree_ids:
            raise ScenarioError(f"unknown GUT node {target!r}", line, key)
        return tree_ids[target]

    def check_shape(mat, lvl, line, key):
        rows, cols = spec.levels[lvl]
        if mat.shape != (len(rows), len(cols)):
            raise ScenarioError(
                f"matrix is {mat.shape[0]}x{mat.shape[1]} but the strategy lists are "
                f"{len(rows)}x{len(cols)}", line, key)

    for line, key, val in deferred:
        parts = val.split()
        if key == "base":
            if len(parts) != 2:
                raise ScenarioError("base needs 'target matrix'", line, key)
            lvl = target_level(parts[0], line, key)
            mat = parse_matrix(parts[1], line, key)
            check_shape(mat, lvl, line, key)
            spec.bases[parts[0]] = mat
        elif key == "coef":
            if len(parts) != 3:
                raise ScenarioError("coef needs 'target feature matrix'", line, key)
            if parts[1] not in STATE_FEATURES:
                raise ScenarioError(f"unknown state feature {parts[1]!r}", line, key)
            lvl = target_level(parts[0], line, key)
            mat = parse_matrix(parts[2], line, key)
            check_shape(mat, lvl, line, key)
            spec.coefs[(parts[0], parts[1])] = mat
        elif key == "hidden":
            if len(parts) != 4:
                raise ScenarioError("hidden needs 'node row col p'", line, key)
            lvl = target_level(parts[0], line, key)
            i, j = _convert(int, parts[1], line, key), _convert(int, parts[2], line, key)
            rows, cols = spec.levels[lvl]
            if not (0 <= i < len(rows) and 0 <= j < len(cols)):
                raise ScenarioError("hidden cell index out of range", line, key)
            p = _convert(float, parts[3], line, key)
            if not 0.0 <= p <= 1.0:
                raise ScenarioError("probability outside [0, 1]", line, key)
            spec.hidden_cells[(parts[0], i, j)] = p
        else:  # hidden_path
            if len(parts) != 2:
                raise ScenarioError("hidden_path needs 'r0,r1,... p'", line, key)
            path = tuple(_convert(int, v, line, key) for v in parts[0].split(","))
            if len(path) != len(spec.levels):
                raise ScenarioError("hidden_path length must equal the tree depth", line, key)
            for lvl, r in enumerate(path):
                if not 0 <= r < len(spec.levels[lvl][0]):
                    raise ScenarioError("hidden_path row index out of range", line, key)
            p = _convert(float, parts[1], line, key)
            if not 0.0 <= p <= 1.0:
                raise ScenarioError("probability outside [0, 1]", line, key)
            spec.hidden_paths[path] = p
    return spec


def _parse_agents(rows, lines_of) -> list:
    out = []
    for line, tok in rows:
        if len(tok) < 7:
            raise ScenarioError("agent row needs 'id x y energy move_cost execute_cost role [cap=v ...]'",
                                line, "agents")
        aid = _convert(int, tok[0], line, "agents")
        spec = AgentSpec(
            aid, (_convert(int, tok[1], line, "agents"), _convert(int, tok[2], line, "agents")),
            _convert(float, tok[3], line, "agents"), _convert(float, tok[4], line, "agents"),
            _convert(float, tok[5], line, "agents"), tok[6], _kv_pairs(tok[7:], line, "agents"),
        )
        lines_of[("agent", aid)] = line
        out.append(spec)
    return out


def _parse_tasks(rows, lines_of) -> list:
    out = []
    for line, tok in rows:
        if len(tok) < 5:
            raise ScenarioError("task row needs 'id x y reward deadline [cap=v ...]'", line, "tasks")
        tid = _convert(int, tok[0], line, "tasks")
        deadline = None if tok[4] == "-" else _convert(int, tok[4], line, "tasks")
        spec = TaskSpec(
            tid, (_convert(int, tok[1], line, "tasks"), _convert(int, tok[2], line, "tasks")),
            _convert(float, tok[3], line, "tasks"), deadline, _kv_pairs(tok[5:], line, "tasks"),
        )
        lines_of[("task", tid)] = line
        out.append(spec)
    return out


def _parse_adversaries(rows, lines_of) -> list:
    out = []
    for line, tok in rows:
        if len(tok) != 3:
            raise ScenarioError("adversary row needs 'id x y'", line, "adversaries")
        vid = _convert(int, tok[0], line, "adversaries")
        lines_of[("adversary", vid)] = line
        out.append((vid, (_convert(int, tok[1], line, "adversaries"),
                          _convert(int, tok[2], line, "adversaries"))))
    return out


def validate_scenario(scn: Scenario, lines_of: Optional[dict] = None) -> None:
    lines_of = lines_of or {}
    g = scn.grid
    if scn.mode not in MODES:
        raise ScenarioError(f"mode must be one of {MODES}", lines_of.get("mode"), "mode")
    if scn.horizon < 1:
        raise ScenarioError("horizon must be >= 1", lines_of.get("horizon"), "horizon")
    if scn.trust_interval < 1:
        raise ScenarioError("trust_interval must be >= 1", lines_of.get("trust_interval"), "trust_interval")
    for cell in g.obstacles:
        if not g.in_bounds(cell):
            raise ScenarioError(f"obstacle {cell} outside the grid", lines_of.get("obstacles"), "obstacles")
    declared = set(scn.capabilities)

    def check_pos(kind, ident, pos):
        line = lines_of.get((kind, ident))
        if not g.in_bounds(pos):
            raise ScenarioError(f"{kind} {ident} at {pos} lies outside the {g.width}x{g.height} grid",
                                line, f"{kind} {ident}")
        if pos in g.obstacles:
            raise ScenarioError(f"{kind} {ident} at {pos} sits on an obstacle", line, f"{kind} {ident}")

    def check_ids(kind, ids):
        if len(set(ids)) != len(ids):
            raise ScenarioError(f"duplicate {kind} ids", None, kind)

    check_ids("agent", [a.id for a in scn.agents])
    check_ids("task", [t.id for t in scn.tasks])
    check_ids("adversary", [v for v, _ in scn.adversaries])
    cells = {}
    for a in scn.agents:
        check_pos("agent", a.id, a.pos)
        line = lines_of.get(("agent", a.id))
        if a.pos in cells:
            raise ScenarioError(f"agent {a.id} shares cell {a.pos} with agent {cells[a.pos]}",
                                line, f"agent {a.id}")
        cells[a.pos] = a.id
        if a.energy < 0 or a.move_cost < 0 or a.execute_cost < 0:
            raise ScenarioError(f"agent {a.id}: energy and costs must be >= 0", line, f"agent {a.id}")
        for cap, lvl in a.capabilities.items():
            if cap not in declared:
                raise ScenarioError(f"agent {a.id} uses undeclared capability {cap!r}", line, f"agent {a.id}")
            if not 0.0 <= lvl <= 1.0:
                raise ScenarioError(f"agent {a.id}: capability {cap!r} outside [0, 1]", line, f"agent {a.id}")
    for t in scn.tasks:
        check_pos("task", t.id, t.pos)
        line = lines_of.get(("task", t.id))
        if not t.reward > 0:
            raise ScenarioError(f"task {t.id}: reward must be positive", line, f"task {t.id}")
        for cap, lvl in t.required.items():
            if cap not in declared:
                raise ScenarioError(f"task {t.id} requires undeclared capability {cap!r}", line, f"task {t.id}")
            if not 0.0 <= lvl <= 1.0:
                raise ScenarioError(f"task {t.id}: requirement {cap!r} outside [0, 1]", line, f"task {t.id}")
    for vid, pos in scn.adversaries:
        check_pos("adversary", vid, pos)
    if scn.randomize_tasks:
        free = g.width * g.height - len(g.obstacles) - len(scn.agents)
        if free < len(scn.tasks):
            raise ScenarioError("not enough free cells to randomise tasks", None, "randomize_tasks")
    if scn.mode == "explore":
        if scn.gut is None:
            raise ScenarioError("explore mode needs a [gut] section", None, "gut")
        if not scn.agents:
            raise ScenarioError("explore mode needs at least one agent", None, "agents")
        gx = scn.explore.goal_x
        if gx >= g.width or gx < -1:
            raise ScenarioError(f"goal_x {gx} outside the grid", None, "goal_x")
    if scn.gut is not None:
        try:
            scn.gut.tree()
        except GameError as exc:
            raise ScenarioError(str(exc), None, "gut") from None


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ScenarioError(f"cannot read {path}: {exc.strerror}") from None
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError:
        raise ScenarioError(f"{path} is not UTF-8 text") from None
    scn = parse_scenario(text)
    if scn.name == "scenario":
        scn.name = path.stem
    return scn


def bundled(name: str) -> Scenario:
    """Load one of the scenarios shipped in ``swarmsass/data``."""
    return load_scenario(DATA_DIR / f"{name}.sass")


def bundled_names() -> list[str]:
    return sorted(p.stem for p in DATA_DIR.glob("*.sass"))


# ---------------------------------------------------------------------------
# serialisation
# ---------------------------------------------------------------------------


def dump_scenario(scn: Scenario) -> str:
    out = [f"format: {FORMAT_HEADER}",
           f"name: {scn.name}",
           f"mode: {scn.mode}",
           f"horizon: {scn.horizon}",
           f"grid: {scn.grid.width} {scn.grid.height}"]
    if scn.grid.obstacles:
        out.append("obstacles: " + " ".join(f"{x},{y}" for x, y in sorted(scn.grid.obstacles)))
    if scn.capabilities:
        out.append("capabilities: " + " ".join(scn.capabilities))
    wc = scn.world_config
    out += [f"sensing_radius: {wc.sensing_radius}",
            f"recharge_rate: {_num(wc.recharge_rate)}",
            f"omission_prob: {_num(wc.omission_prob)}",
            f"trust_interval: {scn.trust_interval}",
            f"randomize_tasks: {'true' if scn.randomize_tasks else 'false'}"]
    nd = scn.needs
    out += ["", "[needs]",
            f"safety_radius: {_num(nd.safety_radius)}",
            f"energy_full: {_num(nd.energy_full)}",
            "thresholds: " + " ".join(_num(t) for t in nd.thresholds),
            f"alpha: {_num(nd.alpha)}"]
    ng = scn.negotiation
    out += ["", "[negotiation]", f"delay: {ng.delay}", f"loss_prob: {_num(ng.loss_prob)}",
            f"retry_budget: {ng.retry_budget}", f"assignment: {ng.assignment}"]
    ex = scn.explore
    out += ["", "[explore]", f"goal_x: {ex.goal_x}", f"encounter_radius: {ex.encounter_radius}",
            f"required_arrivals: {ex.required_arrivals}"]
    out += ["", "[agents]", "# id x y energy move_cost execute_cost role capabilities"]
    for a in scn.agents:
        caps = " ".join(f"{k}={_num(v)}" for k, v in sorted(a.capabilities.items()))
        out.append(f"{a.id} {a.pos[0]} {a.pos[1]} {_num(a.energy)} {_num(a.move_cost)} "
                   f"{_num(a.execute_cost)} {a.role} {caps}".rstrip())
    out += ["", "[tasks]", "# id x y reward deadline requirements"]
    for t in scn.tasks:
        req = " ".join(f"{k}={_num(v)}" for k, v in sorted(t.required.items()))
        dl = "-" if t.deadline is None else str(t.deadline)
        out.append(f"{t.id} {t.pos[0]} {t.pos[1]} {_num(t.reward)} {dl} {req}".rstrip())
    out += ["", "[adversaries]", "# id x y"]
    for vid, (x, y) in scn.adversaries:
        out.append(f"{vid} {x} {y}")
    if scn.gut is not None:
        gs = scn.gut
        out += ["", "[gut]"]
        for rows, cols in gs.levels:
            out.append(f"level: {','.join(rows)} | {','.join(cols)}")
        out += [f"win_value: {_num(gs.win_value)}", f"loss_value: {_num(gs.loss_value)}",
                f"eps_reach: {_num(gs.eps_reach)}", f"selector: {gs.selector}",
                f"learn_selector: {gs.learn_selector}", f"adversary_policy: {gs.adversary_policy}",
                f"hidden_default: {_num(gs.hidden_default)}"]
        for target, mat in gs.bases.items():
            out.append(f"base: {target} {format_matrix(mat)}")
        for (target, feat), mat in gs.coefs.items():
            out.append(f"coef: {target} {feat} {format_matrix(mat)}")
        for path, p in gs.hidden_paths.items():
            out.append(f"hidden_path: {','.join(map(str, path))} {_num(p)}")
        for (node, i, j), p in gs.hidden_cells.items():
            out.append(f"hidden: {node} {i} {j} {_num(p)}")
    return "\n".join(out) + "\n"
