"""Command for generating (or re-exporting) the experiment dataset."""

import argparse
import logging
from pathlib import Path

from stormcast_edl.commands.common import add_common_arguments
from stormcast_edl.harness import apply_overrides, load_config, prepare_dataset, write_dataset
from stormcast_edl.harness import write_resolved_config

logger = logging.getLogger(__name__)

DATA_DIR = "data"


def add_generate_data_parser(subparsers) -> argparse.ArgumentParser:
    """Register the generate-data subcommand."""
    parser = subparsers.add_parser(
        "generate-data",
        help="Generate the synthetic storm dataset and write it as a raw frame file plus manifest",
    )
    add_common_arguments(parser, variant=False)
    parser.set_defaults(handler=handle_generate_data)
    return parser


def handle_generate_data(args: argparse.Namespace) -> str:
    """
    Handle generate-data execution.

    ``--seed`` sets the synthetic generator seed; ``--out`` is the dataset directory.

    Returns:
        Summary line for the terminal
    """
    config = load_config(args.config)
    if args.seed is not None and config.data.synthetic is not None:
        data = config.data.model_copy(
            update={"synthetic": config.data.synthetic.model_copy(update={"seed": args.seed})}
        )
        config = config.model_copy(update={"data": data})
    config = apply_overrides(config)
    directory = Path(args.out) if args.out else Path(config.output_dir) / DATA_DIR

    splits, manifest = prepare_dataset(config.data)
    write_dataset(splits, manifest, directory)
    write_resolved_config(config, directory)
    logger.info(f"Dataset written to {directory}")
    return (
        f"Wrote {manifest.n_events} events ({manifest.n_frames} frames, "
        f"{manifest.height}x{manifest.width}) to {directory}; "
        f"test fingerprint {manifest.test_fingerprint[:16]}"
    )
