"""Command for rendering SVG figures from a comparison."""

import argparse
import logging
from pathlib import Path

import numpy as np

from stormcast_edl.commands.common import add_common_arguments, resolve_config
from stormcast_edl.commands.compare import COMPARISON_DIR
from stormcast_edl.harness import VARIANTS
from stormcast_edl.harness.compare import read_comparison
from stormcast_edl.harness.evaluate import MAPS_NAME, REPORT_DIR
from stormcast_edl.harness.figures import render_figures

logger = logging.getLogger(__name__)

FIGURES_DIR = "figures"


def add_figures_parser(subparsers) -> argparse.ArgumentParser:
    """Register the figures subcommand."""
    parser = subparsers.add_parser("figures", help="Render comparison and error-map figures as SVG")
    parser.add_argument("--comparison", help="Comparison directory (default: <output>/comparison)")
    add_common_arguments(parser, variant=False)
    parser.set_defaults(handler=handle_figures)
    return parser


def handle_figures(args: argparse.Namespace) -> str:
    config = resolve_config(args)
    root = Path(config.output_dir)
    comparison = read_comparison(args.comparison or root / COMPARISON_DIR)
    maps = {}
    for variant in VARIANTS:
        path = root / variant / REPORT_DIR / MAPS_NAME
        if path.is_file():
            with np.load(path, allow_pickle=False) as archive:
                maps[variant] = {key: archive[key] for key in archive.files}
    written = render_figures(comparison, root / FIGURES_DIR, maps)
    return "Rendered:\n" + "\n".join(f"  {path}" for path in written)
