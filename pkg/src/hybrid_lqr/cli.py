# SPDX-FileCopyrightText: 2026 Bentley Systems, Incorporated
#
# SPDX-License-Identifier: Apache-2.0

"""
Command-line entry point.

    hybrid-lqr <task> [--config run.json] [--preset NAME] [--out DIR] [--seed N]
                      [--branch-override JUMP:plus|minus] [--zeno-param NAME=VALUE]
                      [--set KEY=VALUE] [-v | -q]

The exit status is 0 on success and the error family's code otherwise
(see hybrid_lqr.errors).
"""

import argparse
import logging
import sys
from typing import Optional, Sequence

from . import __version__
from .config import TASKS, RunConfig, parse_set_option
from .errors import HybridControlError
from .runner import run

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hybrid-lqr",
        description="Optimal control of temporally and spatially triggered hybrid systems.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("task", choices=TASKS, help="task to run")
    parser.add_argument("--config", help="run configuration (JSON)")
    parser.add_argument("--preset", help="canned scenario name")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--seed", type=int, help="seed for sampled checks")
    parser.add_argument("--step", type=float, help="integration step")
    parser.add_argument(
        "--branch-override",
        action="append",
        default=[],
        metavar="JUMP:BRANCH",
        help="force the root at a 0-based jump index, e.g. 1:minus (spatial solver only)",
    )
    parser.add_argument(
        "--zeno-param",
        action="append",
        default=[],
        metavar="NAME=VALUE",
        help="override a Zeno parameter (a, b, c or g, e), e.g. e=0.8 (zeno task)",
    )
    parser.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override a top-level config field; VALUE is parsed as JSON",
    )
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="errors only")
    return parser


def _configure_logging(verbose: bool, quiet: bool):
    level = logging.DEBUG if verbose else logging.ERROR if quiet else logging.INFO
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s", force=True)


def load_config(args: argparse.Namespace) -> RunConfig:
    """File fields first, then --set, then the dedicated flags."""
    config = RunConfig.from_file(args.config) if args.config else None
    overrides = dict(parse_set_option(option) for option in args.set)
    overrides.update(task=args.task, preset=args.preset, out=args.out, seed=args.seed, step=args.step)
    if config is None:
        data = {k: v for k, v in overrides.items() if v is not None}
        config = RunConfig.from_dict(data, "<command line>")
    else:
        config = config.with_overrides(overrides)
    for option in args.branch_override:
        config = config.with_branch_override(option)
    for option in args.zeno_param:
        config = config.with_zeno_param(option)
    return config


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    _configure_logging(args.verbose, args.quiet)
    try:
        config = load_config(args)
        result = run(config)
    except HybridControlError as e:
        logger.error("%s (exit code %d)", e, e.exit_code)
        return e.exit_code
    print(result.report_path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
