"""Flags and config resolution shared by every subcommand."""

import argparse

from stormcast_edl.harness import ExperimentConfig, VARIANTS, apply_overrides, load_config


def add_common_arguments(parser: argparse.ArgumentParser, variant: bool = True) -> None:
    parser.add_argument("--config", help="Experiment config file (JSON); defaults when omitted")
    parser.add_argument("--seed", type=int, help="Override the training seed")
    parser.add_argument("--out", help="Override the output directory")
    if variant:
        parser.add_argument("--variant", choices=VARIANTS, help="Override the model variant")


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    """Load ``--config`` and apply ``--seed``, ``--out`` and ``--variant``."""
    config = load_config(args.config)
    return apply_overrides(
        config,
        seed=args.seed,
        out=args.out,
        variant=getattr(args, "variant", None),
    )
