"""End-to-end acceptance criteria.

Each test prints one ``PASS``/``FAIL`` line (shown even under output
capture) and then asserts, so ``pytest tests/test_acceptance.py -v`` gives
both a readable summary and a proper exit status.
"""

import itertools
import math
import statistics
from dataclasses import replace

import numpy as np
import pytest

from swarmsass import bt
from swarmsass.atomic import FormationSpec, assign_slots, assignment_cost, formation_slots, multi_route, route
from swarmsass.bt import Action, Blackboard, Leaves, Selector, Sequence, TickResult
from swarmsass.errors import UnreachableError
from swarmsass.gut import GutNode, PayoffModel, build_tree, exploitability, solve_matrix_game
from swarmsass.learning import OutcomePosterior, adapt_loop, prune
from swarmsass.negotiation import SELECTION, NegotiationLayer, run_negotiation
from swarmsass.oracles import best_matching_value, bfs_length, min_total_distance
from swarmsass.rne import js_divergence, kl_divergence, trust_matrix
from swarmsass.runner import run, usar_metrics
from swarmsass.scenario import bundled
from swarmsass.trace import Trace
from swarmsass.usar import run_usar
from swarmsass.world import Grid

from conftest import make_world

LN2 = math.log(2)


@pytest.fixture
def report(capsys):
    def emit(number, title, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {title} ({detail})")
        assert ok, detail
    return emit


# ---------------------------------------------------------------------------


def test_01_determinism(report):
    mismatches = []
    for name in ("usar_default", "usar_lossy", "explore_default"):
        scn = bundled(name)
        for seed in range(5):
            a, b = run(scn, seed).trace.to_text(), run(scn, seed).trace.to_text()
            if a != b:
                mismatches.append((name, seed))
    report(1, "byte-identical traces, 3 scenarios x 5 seeds", not mismatches,
           f"{15 - len(mismatches)}/15 identical")


def _random_utilities(rng, na, nt):
    util = rng.integers(0, 20, size=(na, nt)).astype(float)
    mask = rng.random((na, nt)) < 0.2
    return [[None if mask[a, t] else float(util[a, t]) for t in range(nt)] for a in range(na)]


def test_02_negotiation_rounds_conflicts_and_bound(report):
    rng = np.random.default_rng(2)
    bad = []
    for k in range(200):
        na, nt = (int(v) for v in rng.integers(1, 6, size=2))
        table = _random_utilities(rng, na, nt)
        w = make_world(8, 8, agents=[(i, (i, 0)) for i in range(na)], delay=int(rng.integers(0, 3)))
        layer = NegotiationLayer(w)

        def utility(a, t, table=table):
            v = table[a][t]
            return -math.inf if v is None else v

        prop = layer.open_session(0, SELECTION, range(nt), utility)
        res = run_negotiation(w, layer, prop.session)
        winners = list(res.mapping.values())
        acked = [e.payload["item"] for e in w.trace.of_kind("Ack")]
        total = sum(table[a][t] for t, a in res.mapping.items())
        if (res.rounds > min(na, nt) + 1
                or len(set(winners)) != len(winners)
                or len(set(acked)) != len(acked)
                or any(table[a][t] is None for t, a in res.mapping.items())
                or 2 * total < best_matching_value(table)):
            bad.append(k)
    report(2, "rounds <= min(A,T)+1, conflict-free, >= half of optimum", not bad,
           f"{200 - len(bad)}/200 instances")


def test_03_loss_tolerance(report):
    doubles = 0
    for seed in range(100):
        rng = np.random.default_rng(1000 + seed)
        na, nt = (int(v) for v in rng.integers(2, 6, size=2))
        table = rng.integers(1, 20, size=(na, nt)).astype(float)
        w = make_world(8, 8, agents=[(i, (i, 0)) for i in range(na)],
                       delay=int(rng.integers(0, 3)), loss_prob=float(rng.uniform(0.0, 0.3)), seed=seed)
        layer = NegotiationLayer(w)
        prop = layer.open_session(0, SELECTION, range(nt), lambda a, t: table[a, t], retry_budget=10)
        res = run_negotiation(w, layer, prop.session)
        acked = [e.payload["item"] for e in w.trace.of_kind("Ack")]
        winners = list(res.mapping.values())
        if len(set(acked)) != len(acked) or len(set(winners)) != len(winners):
            doubles += 1
    report(3, "no double award under loss <= 0.3, retry budget 10", doubles == 0,
           f"{100 - doubles}/100 runs clean")


def test_04_game_solver(report):
    rng = np.random.default_rng(4)
    worst = 0.0
    saddle_bad = 0
    saddles = 0
    for _ in range(500):
        m, n = (int(v) for v in rng.integers(1, 5, size=2))
        a = rng.normal(size=(m, n)) if rng.random() < 0.5 else rng.integers(-9, 10, size=(m, n)).astype(float)
        sol = solve_matrix_game(a)
        worst = max(worst, exploitability(a, sol.row, sol.col))
        lo, hi = a.min(axis=1).max(), a.max(axis=0).min()
        if lo == hi and np.all(a == np.round(a)):
            saddles += 1
            saddle_bad += sol.value != lo
    mp = solve_matrix_game([[1, -1], [-1, 1]])
    pennies_ok = abs(mp.value) <= 1e-9 and np.allclose(mp.row, 0.5, atol=1e-6) and np.allclose(mp.col, 0.5, atol=1e-6)
    ok = worst <= 1e-6 and pennies_ok and saddle_bad == 0 and saddles > 0
    report(4, "exploitability, matching pennies, saddle values", ok,
           f"max exploitability {worst:.1e}, pennies {'ok' if pennies_ok else 'wrong'}, "
           f"{saddles - saddle_bad}/{saddles} saddles exact")


def _conflicts(paths):
    """Independent vertex/swap check; agents sit at their last cell afterwards."""
    if not paths:
        return 0
    end = max(p[-1][1] for p in paths.values())

    def at(p, t):
        cells = {tt: c for c, tt in p}
        if t in cells:
            return cells[t]
        return p[0][0] if t < p[0][1] else p[-1][0]

    count = 0
    for a, b in itertools.combinations(sorted(paths), 2):
        for t in range(0, end + 1):
            if at(paths[a], t) == at(paths[b], t):
                count += 1
            if t > 0 and at(paths[a], t) == at(paths[b], t - 1) and at(paths[b], t) == at(paths[a], t - 1) \
                    and at(paths[a], t) != at(paths[a], t - 1):
                count += 1
    return count


def test_05_routing(report):
    rng = np.random.default_rng(5)
    mismatches = 0
    for _ in range(100):
        blocked = rng.random((16, 16)) < 0.2
        free = [(int(x), int(y)) for x, y in zip(*np.nonzero(~blocked))]
        s, g = (free[i] for i in rng.choice(len(free), 2, replace=False))
        grid = Grid(16, 16, frozenset((int(x), int(y)) for x, y in zip(*np.nonzero(blocked))))
        try:
            got = len(route(grid, s, g)) - 1
        except UnreachableError:
            got = None
        mismatches += got != bfs_length(~blocked, s, g)
    conflicts = 0
    for _ in range(100):
        blocked = rng.random((8, 8)) < 0.15
        free = [(int(x), int(y)) for x, y in zip(*np.nonzero(~blocked))]
        picks = rng.choice(len(free), 8, replace=False)
        grid = Grid(8, 8, frozenset((int(x), int(y)) for x, y in zip(*np.nonzero(blocked))))
        reqs = [(i, free[picks[i]], free[picks[4 + i]]) for i in range(4)]
        plan = multi_route(grid, reqs)
        paths = dict(plan.paths)
        for aid in plan.unreachable:  # stranded agents stay where they started
            paths[aid] = [(dict((r[0], r[1]) for r in reqs)[aid], 0)]
        conflicts += _conflicts(paths)
    report(5, "A* equals BFS, prioritised plans conflict-free", mismatches == 0 and conflicts == 0,
           f"{100 - mismatches}/100 lengths match, {conflicts} conflicts")


def test_06_formation(report):
    rng = np.random.default_rng(6)
    bad = 0
    for _ in range(100):
        n = int(rng.integers(1, 9))
        cells = [tuple(map(int, c)) for c in rng.integers(0, 15, size=(2 * n, 2))]
        agents = {i: cells[i] for i in range(n)}
        slots = cells[n:]
        bad += assignment_cost(agents, slots, assign_slots(agents, slots)) != min_total_distance(cells[:n], slots)
    square = formation_slots(FormationSpec((5, 5), 4, 2), Grid(11, 11))
    ok = bad == 0 and set(square) == {(7, 5), (5, 7), (3, 5), (5, 3)}
    report(6, "optimal slot assignment, square on axis cells", ok, f"{100 - bad}/100 optimal, square {square}")


def test_07_rne(report):
    rng = np.random.default_rng(7)
    worst_kl, worst_js = 0.0, 0.0
    for _ in range(1000):
        k = int(rng.integers(2, 7))
        p = rng.dirichlet(np.ones(k) * rng.uniform(0.2, 2))
        q = rng.dirichlet(np.ones(k) * rng.uniform(0.2, 2))
        worst_kl = min(worst_kl, kl_divergence(p, q))
        js = js_divergence(p, q)
        worst_js = min(worst_js, js, LN2 - js)
    kl = kl_divergence([0.5, 0.5], [0.25, 0.75])
    tm = trust_matrix(rng.dirichlet(np.ones(5), size=6))
    ok = worst_kl >= -1e-12 and worst_js >= -1e-12 and abs(kl - 0.1438) <= 1e-4 \
        and np.array_equal(tm, tm.T) and np.all(np.diag(tm) == 1.0)
    report(7, "Gibbs and JS bounds, KL example, trust symmetry", ok,
           f"min slack {min(worst_kl, worst_js):.1e}, kl {kl:.4f}")


def test_08_learning(report):
    errors = []
    for p in (0.1, 0.5, 0.9):
        rng = np.random.default_rng(8)
        post = OutcomePosterior()
        key = ("root", 0, 0)
        for outcome in rng.random(1000) < p:
            post.observe(key, bool(outcome))
        errors.append(abs(post.mean(key) - p))
    levels = [(("a", "b"), ("x", "y")), (("c", "d"), ("u", "v"))]
    mixed = build_tree(levels, lambda i, l: PayoffModel(np.array([[1.0, -1.0], [-1.0, 1.0]])))
    pure = build_tree(levels, lambda i, l: PayoffModel(np.array([[3.0, 1.0], [2.0, 0.0]])))
    identity = prune(mixed, None, 0.0).structure() == mixed.structure()
    one_child = len(prune(pure, None, 0.01).children) == 1
    ok = max(errors) <= 0.05 and identity and one_child
    report(8, "posterior accuracy and pruning", ok,
           f"max error {max(errors):.3f}, identity {identity}, single child {one_child}")


def test_09_behaviour_tree(report):
    leaves = Leaves()
    for name, res in {"f": TickResult.FAILURE, "s": TickResult.SUCCESS}.items():
        leaves.actions[name] = lambda bb, res=res: res
    log1, log2 = [], []
    r1, _ = bt.tick(Selector((Action("f"), Action("s"), Action("f"))), Blackboard(), leaves, log1)
    r2, _ = bt.tick(Sequence((Action("s"), Action("f"), Action("s"))), Blackboard(), leaves, log2)
    semantics = (r1 is TickResult.SUCCESS and log1 == ["Selector", "f", "s"]
                 and r2 is TickResult.FAILURE and log2 == ["Sequence", "s", "f"])

    base = bundled("usar_default")
    scn = base.replace(adversaries=[(0, (1, 1))], needs=replace(base.needs, safety_radius=4.0))
    unsafe_ticks, leaks = 0, 0
    for seed in range(10):
        visits = {}
        world = run_usar(scn, seed, visits=visits)
        senders = {}
        for e in world.trace.of_kind("Send", "Propose"):
            who = e.payload.get("sender", e.payload.get("initiator"))
            senders.setdefault(e.tick, set()).add(who)
        for aid, log in visits.items():
            for tick, nodes in log:
                if bt.EVADE in nodes:
                    unsafe_ticks += 1
                    if aid in senders.get(tick, set()) or bt.NEGOTIATE in nodes:
                        leaks += 1
    ok = semantics and unsafe_ticks > 0 and leaks == 0
    report(9, "short-circuit visit logs, silence on unsafe ticks", ok,
           f"semantics {'ok' if semantics else 'wrong'}, {unsafe_ticks} unsafe ticks, {leaks} with messages")


def test_10_usar_end_to_end(report, tmp_path):
    scn = bundled("usar_default")
    baseline = scn.replace(negotiation=replace(scn.negotiation, assignment="random"))
    sass, rand, mismatched = [], [], 0
    for seed in range(100):
        for scenario, sink in ((scn, sass), (baseline, rand)):
            result = run(scenario, seed)
            sink.append(result.metrics.victims_rescued)
            reloaded = Trace.load(result.trace.dump(tmp_path / "run.trace"))
            mismatched += usar_metrics(reloaded) != result.metrics
    ms, mr = statistics.median(sass), statistics.median(rand)
    report(10, "USAR median rescued, negotiation vs random", ms >= mr and mismatched == 0,
           f"median {ms} vs {mr}, mean {np.mean(sass):.2f} vs {np.mean(rand):.2f}, "
           f"{mismatched} metric mismatches")


def test_11_explore_learning(report):
    scn = bundled("explore_default")
    first, last = [], []
    for seed in range(1, 101):
        curve, _ = adapt_loop(scn, 51, seed)
        first.append(curve[0].success)
        last.append(curve[50].success)
    r0, r50 = np.mean(first), np.mean(last)
    report(11, "success after 50 learning episodes beats episode 0 by >= 0.1", r50 - r0 >= 0.1,
           f"{r0:.2f} -> {r50:.2f}")
