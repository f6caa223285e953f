"""Command-line entry point for the storm nowcasting workbench."""

import argparse
import logging
import sys
from typing import Optional, Sequence

from stormcast_edl import __version__
from stormcast_edl.commands import (
    add_compare_parser,
    add_evaluate_parser,
    add_figures_parser,
    add_generate_data_parser,
    add_train_parser,
)
from stormcast_edl.config import LOG_LEVELS, config
from stormcast_edl.errors import StormcastError

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stormcast-edl",
        description="Train and compare evidential, ensemble and MC-dropout storm nowcasters",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument(
        "--log-level",
        choices=LOG_LEVELS,
        type=str.upper,
        help="Logging level (default: STORMCAST_LOG_LEVEL or INFO)",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    add_generate_data_parser(subparsers)
    add_train_parser(subparsers)
    add_evaluate_parser(subparsers)
    add_compare_parser(subparsers)
    add_figures_parser(subparsers)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Run one subcommand.

    Returns:
        Process exit code: 0 on success, the error's code for workbench
        errors, 1 for anything unexpected
    """
    args = build_parser().parse_args(argv)
    try:
        config.validate()
    except StormcastError as e:
        print(f"Error: {e}", file=sys.stderr)
        return e.exit_code

    logging.basicConfig(
        level=args.log_level or config.LOG_LEVEL,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )
    try:
        result = args.handler(args)
    except StormcastError as e:
        logger.error(f"{args.command} failed: {e}")
        print(f"Error: {e}", file=sys.stderr)
        return e.exit_code
    except Exception as e:
        logger.error(f"Unexpected error in {args.command}: {e}", exc_info=True)
        print(f"Error: {e}", file=sys.stderr)
        return 1

    print(result)
    return 0


if __name__ == "__main__":
    sys.exit(main())
