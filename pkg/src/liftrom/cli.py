"""Command-line interface.

Subcommands run the experiment pipeline up to a stage, persisting that
stage's artifacts under the output directory:

    liftrom simulate-fom --config configs/exp_wave.cfg
    liftrom build-basis  --config ... [--out DIR]
    liftrom build-rom    --config ...
    liftrom run-rom      --config ...
    liftrom experiment   --config ... [--native-scale] [--seed N]
    liftrom metrics      --config ...

FOM snapshots are reused from disk when present; the later stages are
cheap and recomputed deterministically.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .config import load_config
from .harness import ExperimentRunner


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", required=True, help="experiment config file")
    p.add_argument("--out", default=None, help="override the output directory")
    p.add_argument("--seed", type=int, default=None, help="override the RNG seed")
    p.add_argument(
        "--native-scale", action="store_true",
        help="use the full-scale grid instead of the desk-scale default",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="liftrom",
        description="Structure-preserving lifting ROMs for nonlinear wave equations",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("simulate-fom", "simulate the FOM and persist snapshot matrices"),
        ("build-basis", "snapshots plus POD/cotangent-lift bases"),
        ("build-rom", "bases plus projected reduced operators"),
        ("run-rom", "reduced operators plus ROM trajectories and energies"),
        ("experiment", "full pipeline with metric/timing CSVs"),
        ("metrics", "alias of experiment (metrics are the final stage)"),
    ]:
        _add_common(sub.add_parser(name, help=help_text))
    return parser


def _runner(args) -> ExperimentRunner:
    config = load_config(args.config)
    if args.out is not None:
        config = replace(config, out_dir=Path(args.out))
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    return ExperimentRunner(config, native_scale=args.native_scale)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    runner = _runner(args)
    if args.command == "simulate-fom":
        runner.simulate_fom()
        print(f"snapshots written under {runner.out / 'snapshots'}")
        return 0
    if args.command == "build-basis":
        runner.build_bases()
        print(f"bases written under {runner.out / 'bases'}")
        return 0
    if args.command == "build-rom":
        runner.build_roms()
        print(f"reduced operators written under {runner.out / 'roms'}")
        return 0
    if args.command == "run-rom":
        result = runner.run_roms()
        print(f"{len(result.reports)} ROM runs written under {runner.out / 'runs'}")
        return 0
    result = runner.run()
    print(f"{len(result.reports)} metric rows written to {runner.out / 'metrics.csv'}")
    if result.diagnostics:
        for key in sorted(result.diagnostics):
            print(f"  {key} = {result.diagnostics[key]}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
