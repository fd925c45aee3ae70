"""Command line entry point: ``mcflab <subcommand> [--config PATH] [--out DIR] ...``"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .config import ConfigError, load_config
from .experiments import (
    DEFAULT_ALPHAS,
    EXIT_CHECK,
    EXIT_CONFIG,
    EXIT_NUMERICAL,
    run_experiment,
    run_soliton,
    table1_suite,
)
from .geometry import NumericalFailure
from .solitons import SolitonError

SUBCOMMAND_TASKS = {
    "evolve": ("classify", "pinching", "noncollapse", "gradient", "w_evolution", "harnack", "rescale"),
    "classify": ("classify",),
    "noncollapse": ("noncollapse",),
    "rescale": ("rescale",),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="flat key = value config file")
    common.add_argument("--out", type=Path, help="output directory (default: output_dir from config)")
    common.add_argument("--check", action="store_true", help="assert acceptance tolerances; exit 3 on failure")
    common.add_argument("--alpha", type=float, help="override initial_data.alpha")
    common.add_argument("--dim", type=int, help="override n")
    common.add_argument("--rmax", type=float, help="override r_max")
    common.add_argument("--h", type=float, help="override h")
    common.add_argument("--tend", type=float, help="override solver.t_end")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="mcflab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("evolve", parents=[common], help="evolve and run all monitors")
    sub.add_parser("soliton", parents=[common], help="solve a translator or expander profile")
    sub.add_parser("rescale", parents=[common], help="evolve, select blow-up points, rescale")
    sub.add_parser("classify", parents=[common], help="evolve and classify Type III / IIb")
    sub.add_parser("noncollapse", parents=[common], help="evolve and track the noncollapsing constant delta")
    t1 = sub.add_parser("table1", parents=[common], help="power-graph suite over alpha")
    t1.add_argument("--alphas", type=lambda s: tuple(float(x) for x in s.split(",")), default=DEFAULT_ALPHAS)
    t1.add_argument("--jobs", type=int, default=1)
    return parser


def _overrides(args) -> dict:
    return {
        "initial_data.alpha": args.alpha,
        "n": args.dim,
        "r_max": args.rmax,
        "h": args.h,
        "solver.t_end": args.tend,
    }


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        config = load_config(args.config, _overrides(args))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.command == "soliton":
            manifest = run_soliton(config, args.out)
        elif args.command == "table1":
            manifest = table1_suite(config, args.alphas, check=args.check, out=args.out, jobs=args.jobs)
        else:
            manifest = run_experiment(config, SUBCOMMAND_TASKS[args.command], check=args.check, out=args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalFailure, SolitonError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    summary = manifest.summary
    brief = {k: summary.get(k) for k in ("termination", "classification_hint", "loglog_slope", "checks", "rows") if k in summary}
    print(json.dumps({"status": manifest.status, "output_dir": manifest.output_dir, **brief}, indent=2, default=str))
    if manifest.exit_code == EXIT_CHECK:
        print("check failed", file=sys.stderr)
    return manifest.exit_code if manifest.exit_code is not None else EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
