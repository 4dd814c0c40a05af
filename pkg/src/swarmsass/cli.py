"""Command-line interface.

Exit codes: 0 success, 1 an oracle check failed, 2 usage error, 3 scenario
validation error, 4 trace integrity error.  ``SASS_TRACE_DIR`` names the
directory that receives traces when ``--trace`` is not given.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from swarmsass import __version__
from swarmsass.errors import ConfigError, ScenarioError, TraceIntegrityError

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_VALIDATION = 3
EXIT_INTEGRITY = 4

TRACE_DIR_ENV = "SASS_TRACE_DIR"


class UsageError(Exception):
    pass


def parse_seed_range(text: str) -> list[int]:
    """``"A..B"`` (inclusive) or a single integer."""
    lo, sep, hi = text.partition("..")
    try:
        if not sep:
            return [int(text)]
        a, b = int(lo), int(hi)
    except ValueError:
        raise UsageError(f"bad seed range {text!r}, expected A..B") from None
    if b < a:
        raise UsageError(f"empty seed range {text!r}")
    return list(range(a, b + 1))


def _load(path: str):
    from swarmsass.scenario import load_scenario

    if not Path(path).is_file():
        raise UsageError(f"no such scenario file: {path}")
    return load_scenario(path)


def default_trace_path(name: str, seed: int) -> Optional[Path]:
    base = os.environ.get(TRACE_DIR_ENV)
    if not base:
        return None
    return Path(base) / f"{name}-seed{seed}.trace"


def cmd_run(args) -> int:
    from swarmsass.runner import metrics_json, run, write_text

    scn = _load(args.scenario)
    result = run(scn, args.seed)
    trace_path = Path(args.trace) if args.trace else default_trace_path(scn.name, args.seed)
    if trace_path is not None:
        trace_path.parent.mkdir(parents=True, exist_ok=True)
        result.trace.dump(trace_path)
    text = metrics_json(result)
    if args.metrics:
        write_text(args.metrics, text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_sweep(args) -> int:
    from swarmsass.runner import sweep, write_text

    seeds = parse_seed_range(args.seeds)
    if args.workers < 1:
        raise UsageError("--workers must be >= 1")
    scn = _load(args.scenario)
    result = sweep(scn, seeds, workers=args.workers)
    table = result.to_csv()
    if args.csv:
        write_text(args.csv, table)
    else:
        sys.stdout.write(table)
    sys.stdout.write(json.dumps({"scenario": scn.name, **result.aggregate}, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_replay(args) -> int:
    from swarmsass.replay import replay

    path = Path(args.trace)
    if not path.is_file():
        raise UsageError(f"no such trace file: {path}")
    sys.stdout.write(replay(path))
    return EXIT_OK


def cmd_learn(args) -> int:
    from swarmsass.learning import adapt_loop

    if args.episodes < 1:
        raise UsageError("--episodes must be positive")
    scn = _load(args.scenario)
    if scn.gut is None:
        raise ScenarioError("learning needs a [gut] section", key="gut")
    curve, _ = adapt_loop(scn, args.episodes, args.seed)
    path = Path(args.curve)
    path.parent.mkdir(parents=True, exist_ok=True)
    curve.write_csv(path)
    n = len(curve)
    tail = max(1, n // 5)
    summary = {"episodes": n, "first_success_rate": curve.success_rate(0, tail),
               "last_success_rate": curve.success_rate(n - tail), "curve": str(path)}
    sys.stdout.write(json.dumps(summary, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_oracle(args) -> int:
    from swarmsass.oracles import run_suite

    try:
        results = run_suite(args.suite)
    except KeyError as exc:
        raise UsageError(exc.args[0]) from None
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        sys.stdout.write(f"{status} {r.suite}: {r.cases - r.failures}/{r.cases} cases agree\n")
    return EXIT_OK if all(r.passed for r in results) else EXIT_CHECK_FAILED


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="swarmsass", description="Self-adaptive swarm simulator")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="simulate one scenario with one seed")
    r.add_argument("--scenario", required=True)
    r.add_argument("--seed", type=int, required=True)
    r.add_argument("--trace", help=f"trace output path (default: ${TRACE_DIR_ENV}/<name>-seed<N>.trace)")
    r.add_argument("--metrics", help="write metrics JSON here as well as to stdout")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="run a range of seeds and aggregate")
    s.add_argument("--scenario", required=True)
    s.add_argument("--seeds", required=True, help="inclusive range A..B")
    s.add_argument("--csv", help="write the per-seed table here instead of stdout")
    s.add_argument("--workers", type=int, default=1)
    s.set_defaults(func=cmd_sweep)

    rp = sub.add_parser("replay", help="verify a trace and render it as ASCII frames")
    rp.add_argument("--trace", required=True)
    rp.set_defaults(func=cmd_replay)

    lr = sub.add_parser("learn", help="run the adaptive learning loop")
    lr.add_argument("--scenario", required=True)
    lr.add_argument("--episodes", type=int, required=True)
    lr.add_argument("--seed", type=int, required=True)
    lr.add_argument("--curve", required=True, help="learning-curve CSV output")
    lr.set_defaults(func=cmd_learn)

    o = sub.add_parser("oracle", help="run brute-force verifiers")
    o.add_argument("--suite", required=True, help="assignment, bfs, games, divergences or all")
    o.set_defaults(func=cmd_oracle)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ScenarioError, ConfigError) as exc:
        print(f"invalid scenario: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except TraceIntegrityError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_INTEGRITY


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
