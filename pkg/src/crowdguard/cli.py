"""Command-line entry point: ``crowdguard run | compare | plot-data``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .detection import Strategy
from .harness import (RunOptions, ScenarioError, Trace, bundled, compare_strategies,
                      emit_plot_data, load_scenario, run)


def _scenario_path(arg: str) -> Path:
    p = Path(arg)
    if p.exists():
        return p
    try:
        return bundled(arg)
    except FileNotFoundError:
        return p


def _positive_int(s: str) -> int:
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _positive_float(s: str) -> float:
    v = float(s)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be > 0")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="crowdguard", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="simulate a scenario with detection and control")
    r.add_argument("--scenario", required=True, help="scenario file or bundled name")
    r.add_argument("--seed", type=int)
    r.add_argument("--ticks", type=_positive_int)
    r.add_argument("--dt", type=_positive_float)
    r.add_argument("--strategy", choices=[s.value for s in Strategy])
    r.add_argument("--control", choices=["on", "off"])
    r.add_argument("--workers", type=_positive_int, default=1)
    r.add_argument("--out", required=True, type=Path)

    c = sub.add_parser("compare", help="verdict matrix of all four detectors")
    c.add_argument("--scenario", required=True)
    c.add_argument("--ticks", type=_positive_int)
    c.add_argument("--workers", type=_positive_int, default=1)
    c.add_argument("--out", required=True, type=Path)

    p = sub.add_parser("plot-data", help="per-tick CSV frames from a trace")
    p.add_argument("--trace", required=True, type=Path)
    p.add_argument("--stride", type=_positive_int, default=10)
    p.add_argument("--out", required=True, type=Path)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            overrides = {} if args.seed is None else {"seed": args.seed}
            sc = load_scenario(_scenario_path(args.scenario), overrides)
            opts = RunOptions(
                strategy=Strategy(args.strategy) if args.strategy else None,
                control=None if args.control is None else args.control == "on",
                workers=args.workers, ticks=args.ticks, dt=args.dt,
            )
            result = run(sc, opts)
            paths = result.write(args.out)
            print(json.dumps({k: str(v) for k, v in paths.items()}))
            for row in result.metrics.regions:
                print(f"region {row.region}: {row.status}, detected at tick {row.detection_tick}, "
                      f"{row.humans} humans, {row.conflicting_groups} groups, "
                      f"seconds to resolve {row.seconds_to_resolve}")
            return result.exit_status
        if args.command == "compare":
            sc = load_scenario(_scenario_path(args.scenario))
            res = compare_strategies(sc, args.ticks, args.workers)
            res.write(args.out)
            print(json.dumps(res.summary(), indent=2))
            return 0
        files = emit_plot_data(Trace.read(args.trace), args.out, args.stride)
        print(f"{len(files)} frames written to {args.out}")
        return 0
    except ScenarioError as e:
        for p in e.problems:
            print(p, file=sys.stderr)
        return 2
    except (OSError, json.JSONDecodeError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
