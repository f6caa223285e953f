#!/usr/bin/env python3
"""
Train, evaluate and compare every variant on one dataset, then render the figures.
Usage: python run_benchmark.py [--config configs/benchmark.json] [--seed N] [--out DIR]
       python run_benchmark.py --seeds 0 1 2 3 4 [--config ...] [--out DIR]
"""

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

# Add parent directory to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from stormcast_edl.config import config as env_config
from stormcast_edl.errors import StormcastError
from stormcast_edl.harness import (
    VARIANTS,
    apply_overrides,
    compare,
    evaluate,
    load_config,
    probe_shift,
    run_acceptance,
    train,
    variant_config,
    write_comparison,
)
from stormcast_edl.harness.acceptance import ACCEPTANCE_NAME
from stormcast_edl.harness.evaluate import MAPS_NAME, REPORT_DIR
from stormcast_edl.harness.figures import render_figures

logger = logging.getLogger("run_benchmark")


def run_single(base, args):
    reports, maps = [], {}
    for variant in args.variants:
        config = variant_config(base, variant, args.mc_dropout_rate)
        if not args.skip_train:
            train(config)
        reports.append(evaluate(config))

        if config.is_evidential and config.data.synthetic is not None:
            shift = probe_shift(config)
            print(f"{variant}: epistemic shift ratio {shift.ratio:.3f}")

    root = Path(base.output_dir)
    comparison = compare(reports)
    write_comparison(comparison, root / "comparison")
    for variant in args.variants:
        path = root / variant / REPORT_DIR / MAPS_NAME
        if path.is_file():
            with np.load(path) as archive:
                maps[variant] = {key: archive[key] for key in archive.files}
    render_figures(comparison, root / "figures", maps)

    print(comparison.csi.to_string(index=False))
    print(comparison.cost.to_string(index=False))
    print(f"\nTables in {root / 'comparison'}, figures in {root / 'figures'}")


def run_seeds(base, args) -> bool:
    summary = run_acceptance(base, args.seeds, args.variants, args.mc_dropout_rate)
    for check in summary.checks:
        status = "pass" if check.passed else "FAIL"
        print(f"[{status}] {check.name}: {check.value:.4g} (threshold {check.threshold:.4g})")
        print(f"       {check.detail}")
    print(f"\nSummary in {Path(base.output_dir) / ACCEPTANCE_NAME}")
    return summary.passed


def main():
    parser = argparse.ArgumentParser(description="Run the full variant benchmark")
    parser.add_argument("--config", help="Experiment config (JSON)")
    parser.add_argument("--seed", type=int, help="Training seed override")
    parser.add_argument(
        "--seeds",
        type=int,
        nargs="+",
        help="Run every variant once per seed and score the acceptance criteria",
    )
    parser.add_argument("--out", help="Output directory override")
    parser.add_argument(
        "--variants", nargs="+", choices=VARIANTS, default=list(VARIANTS), help="Variants to run"
    )
    parser.add_argument(
        "--mc-dropout-rate",
        type=float,
        default=0.1,
        help="Dropout rate for the mc-dropout variant when the config leaves it at 0",
    )
    parser.add_argument("--skip-train", action="store_true", help="Reuse existing checkpoints")
    args = parser.parse_args()

    if args.seeds and args.skip_train:
        parser.error("--skip-train cannot be combined with --seeds")

    logging.basicConfig(
        level=env_config.LOG_LEVEL,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )

    try:
        base = apply_overrides(load_config(args.config), seed=args.seed, out=args.out)
        if args.seeds:
            passed = run_seeds(base, args)
        else:
            run_single(base, args)
            passed = True
    except StormcastError as e:
        logger.error(f"Benchmark failed: {e}")
        print(f"Error: {e}", file=sys.stderr)
        sys.exit(e.exit_code)

    if not passed:
        sys.exit(1)


if __name__ == "__main__":
    main()
