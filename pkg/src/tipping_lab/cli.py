"""
tippinglab command line.

    tippinglab classify scenario.yaml --rate 0.5
    tippinglab scenario invasion --rate 1.0 --out results
    tippinglab scenario --list

Exit codes: 0 success, 2 Unclassifiable, 1 error.
"""
import argparse
import logging
import os
import sys
from typing import Any, Dict, List, Optional

from .core import Config as cfg
from .core.LoggingConfig import setup_logging
from .core.Pipeline import EXIT_ERROR, TippingLabAPI, exit_code
from .enums.Enums import Command, ScenarioSource
from .processing.Mappers import collect_overrides
from .utility.Exporters import to_json

logger = logging.getLogger(__name__)

SCENARIO = "scenario"


def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--span", type=float, nargs=2, metavar=("A", "B"), help="analysis span [A, B]")
    parser.add_argument("--rtol", type=float, help="integrator relative tolerance")
    parser.add_argument("--atol", type=float, help="integrator absolute tolerance")
    parser.add_argument("--horizon", type=float, help="long-time horizon of allee/collapse runs")
    parser.add_argument("--tol-bisect", dest="tol_bisect", type=float, help="bisection tolerance")
    parser.add_argument("--workers", type=int, help="worker processes for scans")
    parser.add_argument("--out", help="results directory (one subdirectory per run)")
    parser.add_argument("--rate", type=float, help="append a rate transform Gamma(c t)")
    parser.add_argument("--phase", type=float, help="append a phase transform Gamma(t + c)")
    parser.add_argument("--size", type=float, help="append a scale transform d Gamma(t)")
    parser.add_argument("--cache", help="trajectory cache directory")
    parser.add_argument("--progress", action="store_true", default=None, help="show progress bars")
    parser.add_argument("--no-write", dest="write", action="store_false", help="do not create a run directory")
    parser.add_argument("--log-level", dest="log_level", help="DEBUG, INFO, WARNING, ...")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tippinglab",
                                     description="Tipping analysis of nonautonomous d-concave scalar equations")
    sub = parser.add_subparsers(dest="command", required=True)
    for command in Command:
        p = sub.add_parser(command.value, help=f"run '{command.value}' on a scenario file")
        p.add_argument("config", help="scenario YAML file")
        _add_common_flags(p)
    p = sub.add_parser(SCENARIO, help="run a bundled scenario end to end")
    p.add_argument("name", nargs="?", help=f"one of {sorted(cfg.SCENARIO_REGISTRY)}")
    p.add_argument("--list", action="store_true", help="list bundled scenarios")
    p.add_argument("--command", dest="analysis", choices=[c.value for c in Command],
                   help="override the scenario's default command")
    _add_common_flags(p)
    return parser


def _overrides(args: argparse.Namespace, environ: Optional[Dict[str, str]] = None) -> Dict[str, Any]:
    flags = {name: getattr(args, name, None) for name in
             ("rtol", "atol", "horizon", "tol_bisect", "workers", "out", "log_level",
              "span", "rate", "phase", "size", "cache", "progress")}
    if args.command == SCENARIO:
        flags["command"] = args.analysis
    else:
        flags["command"] = args.command
    return collect_overrides(flags, environ)


def _list_scenarios() -> int:
    for name in sorted(cfg.SCENARIO_REGISTRY):
        entry = cfg.SCENARIO_REGISTRY[name]
        print(f"{name:16s} {entry['command']:9s} {entry['description']}")
    return 0


def run(argv: Optional[List[str]] = None, environ: Optional[Dict[str, str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == SCENARIO and (args.list or not args.name):
        return _list_scenarios()
    try:
        overrides = _overrides(args, environ)
    except Exception as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR

    level = getattr(logging, str(overrides.pop("log_level", "INFO")).upper(), logging.INFO)
    out_dir = overrides.get("out", "results")
    setup_logging(level, log_dir=os.path.join(out_dir, "logs"))

    if args.command == SCENARIO:
        api, target = TippingLabAPI(ScenarioSource.BUNDLED), args.name
    else:
        api, target = TippingLabAPI(ScenarioSource.FILE, use_cache=False), args.config
    result = api.run_sync(target, overrides, emit=args.write)

    if not result.success:
        print(f"error: {result.error}", file=sys.stderr)
        return exit_code(result)
    outcome = result.value
    print(to_json(outcome.record))
    if outcome.run_dir:
        print(f"results: {outcome.run_dir}", file=sys.stderr)
    return exit_code(result)


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
