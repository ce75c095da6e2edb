"""Command line: ``ijtagsim run|check|parse``."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .netlist import NetworkParseError, parse_network, print_network
from .scenario import ScenarioError, load_scenario
from .sim import SimulationError, data_path, run
from .trace import emit_trace


def _resolve(arg: str, suffix: str) -> Path:
    """Accept a path, or the stem of a bundled file."""
    path = Path(arg)
    if path.exists():
        return path
    bundled = data_path(arg if arg.endswith(suffix) else arg + suffix)
    return bundled if bundled.exists() else path


def _run(args) -> int:
    scenario = load_scenario(_resolve(args.scenario, ".scn"))
    report = run(scenario, horizon=args.horizon, seed=args.seed)
    text = emit_trace(report, args.trace)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def _check(args) -> int:
    scenario = load_scenario(_resolve(args.scenario, ".scn"))
    report = run(scenario, horizon=args.horizon, seed=args.seed)
    for v in report.verdicts:
        print(f"{'PASS' if v.passed else 'FAIL'}  expect {v.expectation}  ({v.detail})")
    if report.latency is not None:
        lat = report.latency
        print(f"latency: detection {lat.detection_cycles} cycles, "
              f"localization {lat.localization_cycles} cycles")
    return 0 if report.passed else 1


def _parse(args) -> int:
    path = _resolve(args.network, ".net")
    try:
        desc = parse_network(path.read_text(encoding="utf-8"))
    except NetworkParseError as exc:
        for err in exc.errors:
            print(f"{path}:{err}", file=sys.stderr)
        return 2
    sys.stdout.write(print_network(desc))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ijtagsim", description="IJTAG health-monitoring network simulator")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="simulate a scenario and print its trace")
    r.add_argument("scenario")
    r.add_argument("--trace", choices=["text", "vcd", "json"], default="text")
    r.add_argument("--out")
    r.add_argument("--horizon", type=int)
    r.add_argument("--seed", type=int, default=0)
    r.set_defaults(func=_run)

    c = sub.add_parser("check", help="simulate and exit nonzero on failed expectations")
    c.add_argument("scenario")
    c.add_argument("--horizon", type=int)
    c.add_argument("--seed", type=int, default=0)
    c.set_defaults(func=_check)

    n = sub.add_parser("parse", help="validate and pretty-print a network file")
    n.add_argument("network")
    n.set_defaults(func=_parse)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioError, NetworkParseError, SimulationError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
