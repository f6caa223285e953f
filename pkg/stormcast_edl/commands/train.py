"""Command for training one model variant."""

import argparse
import logging

from stormcast_edl.commands.common import add_common_arguments, resolve_config
from stormcast_edl.harness import train

logger = logging.getLogger(__name__)


def add_train_parser(subparsers) -> argparse.ArgumentParser:
    """Register the train subcommand."""
    parser = subparsers.add_parser(
        "train", help="Train the configured variant (edl, p-edl, ensemble or mc-dropout)"
    )
    add_common_arguments(parser)
    parser.set_defaults(handler=handle_train)
    return parser


def handle_train(args: argparse.Namespace) -> str:
    config = resolve_config(args)
    outcome = train(config)
    lines = [f"Trained {outcome.variant} into {outcome.run_dir}"]
    for record in outcome.records:
        final = "n/a" if record.final_loss is None else f"{record.final_loss:.6f}"
        lines.append(f"  {record.stage}: {len(record.epochs)} epochs, final loss {final}")
    lines.extend(f"  checkpoint: {path}" for path in outcome.checkpoints)
    return "\n".join(lines)
