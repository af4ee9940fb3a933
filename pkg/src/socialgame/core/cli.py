# Copyright (C) 2024 socialgame-core developers
# SPDX-License-Identifier: MIT

import argparse
import logging
import sys
from typing import Any, Dict, Optional, Sequence

from socialgame.core.errors import SocialGameError
from socialgame.core.pipeline import COMMANDS, Pipeline

logger = logging.getLogger(__name__)

_HELP = {
    "simulate": "Simulate a cohort and write its per-minute table",
    "ingest": "Read a per-minute export into the canonical table",
    "baseline": "Compute pre-game baselines and the before/after savings table",
    "features": "Pool, split, select and standardize the features of every task",
    "train": "Train the configured learners",
    "evaluate": "Write the AUC table of every model on its held-out days",
    "explain": "Estimate dependence graphs and Granger tests of the class representatives",
    "generate": "Train the auto-encoder and test the fidelity of its samples",
    "report": "Run every stage and write the summary",
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML configuration file")
    common.add_argument("--profile", default="default", help="Section of the configuration file")
    common.add_argument("--out", help="Output directory, overrides output_dir")
    common.add_argument("--seed", type=int, help="Global seed, overrides the configured one")
    common.add_argument(
        "--mode",
        choices=["step_ahead", "sensor_free"],
        help="Run a single mode instead of the configured ones",
    )
    common.add_argument("-v", "--verbose", action="store_true", help="Log debug messages")

    parser = argparse.ArgumentParser(
        prog="socialgame", description="Occupant energy social-game analytics"
    )
    subparsers = parser.add_subparsers(dest="command", metavar="command", required=True)
    for command in COMMANDS:
        subparsers.add_parser(command, parents=[common], help=_HELP[command])
    return parser


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    overrides: Dict[str, Any] = {}
    if args.out is not None:
        overrides["output_dir"] = args.out
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.mode is not None:
        overrides["modes"] = [args.mode]
    return overrides


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run one subcommand.

    Returns:
        0 on success, 1 when the run fails, 2 on a usage error.
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code is None else int(e.code)

    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        pipeline = Pipeline.from_config(
            args.config,
            args.profile,
            ignore_missing=args.config is None,
            **_overrides(args),
        )
        pipeline.run(args.command)
    except SocialGameError as e:
        print(f"socialgame {args.command}: error: {e}", file=sys.stderr)
        return 1
    print(f"{args.command}: outputs written to {pipeline.output_dir}")
    return 0
