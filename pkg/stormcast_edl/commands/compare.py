"""Command for comparing evaluation reports side by side."""

import argparse
import logging
from pathlib import Path

from stormcast_edl.commands.common import add_common_arguments, resolve_config
from stormcast_edl.errors import CompareError
from stormcast_edl.evaluation.report import SUMMARY_NAME
from stormcast_edl.harness import (
    VARIANTS,
    compare,
    load_reports,
    write_comparison,
    write_resolved_config,
)
from stormcast_edl.harness.evaluate import REPORT_DIR

logger = logging.getLogger(__name__)

COMPARISON_DIR = "comparison"


def add_compare_parser(subparsers) -> argparse.ArgumentParser:
    """Register the compare subcommand."""
    parser = subparsers.add_parser(
        "compare", help="Build CSI, MSE, correlation, reliability and cost comparison tables"
    )
    parser.add_argument(
        "reports",
        nargs="*",
        help="Report directories; every evaluated variant under the output directory when omitted",
    )
    add_common_arguments(parser, variant=False)
    parser.set_defaults(handler=handle_compare)
    return parser


def handle_compare(args: argparse.Namespace) -> str:
    config = resolve_config(args)
    root = Path(config.output_dir)
    directories = [Path(path) for path in args.reports] or [
        root / variant / REPORT_DIR
        for variant in VARIANTS
        if (root / variant / REPORT_DIR / SUMMARY_NAME).is_file()
    ]
    if not directories:
        raise CompareError(f"no evaluation reports found under {root}")

    comparison = compare(load_reports(directories))
    out = root / COMPARISON_DIR
    write_comparison(comparison, out)
    write_resolved_config(config, out)
    return f"Compared {', '.join(comparison.labels)}; tables in {out}\n" + comparison.csi.to_string(
        index=False
    )
