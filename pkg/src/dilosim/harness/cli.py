"""Command-line entry points: run, preset, compare."""

from __future__ import annotations

import argparse
import sys

from ..errors import ConfigurationError
from .presets import get_preset, preset_names
from .runner import compare_runs, run_experiment


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dilosim",
        description="Deterministic simulator for low-communication distributed training.")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute a TOML experiment config")
    run_p.add_argument("config", help="path to the config file")
    _common(run_p)

    preset_p = sub.add_parser("preset", help="execute a named preset")
    preset_p.add_argument("name", nargs="?", help="preset name (omit with --list)")
    preset_p.add_argument("--list", action="store_true", help="list available presets")
    _common(preset_p)

    cmp_p = sub.add_parser("compare", help="paired comparison of two methods in a runs.csv")
    cmp_p.add_argument("csv", help="path to runs.csv")
    cmp_p.add_argument("baseline", help="baseline method label")
    cmp_p.add_argument("candidate", help="candidate method label")
    return parser


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out-dir", default=None, help="report directory (default: runs/<name>)")
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p.add_argument("--seed", type=int, default=None, help="run a single seed instead of the configured list")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            csv_path, manifest = run_experiment(args.config, out_dir=args.out_dir,
                                                jobs=args.jobs, seed_override=args.seed)
            print(f"wrote {csv_path} and {manifest}")
        elif args.command == "preset":
            if args.list or args.name is None:
                for name in preset_names():
                    print(name)
                return 0
            config = get_preset(args.name)
            csv_path, manifest = run_experiment(config, out_dir=args.out_dir,
                                                jobs=args.jobs, seed_override=args.seed)
            print(f"wrote {csv_path} and {manifest}")
        else:
            summary = compare_runs(args.csv, args.baseline, args.candidate)
            print(summary.row())
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
