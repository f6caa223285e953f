"""Command for evaluating a trained variant on the test split."""

import argparse
import logging

from stormcast_edl.commands.common import add_common_arguments, resolve_config
from stormcast_edl.harness import evaluate, probe_shift

logger = logging.getLogger(__name__)


def add_evaluate_parser(subparsers) -> argparse.ArgumentParser:
    """Register the evaluate subcommand."""
    parser = subparsers.add_parser(
        "evaluate", help="Run CSI, MSE, reliability, correlation and cost metrics on the test split"
    )
    add_common_arguments(parser)
    parser.add_argument(
        "--shift-probe",
        action="store_true",
        help="Also measure epistemic uncertainty on a faster-advecting regime (evidential only)",
    )
    parser.set_defaults(handler=handle_evaluate)
    return parser


def handle_evaluate(args: argparse.Namespace) -> str:
    config = resolve_config(args)
    report = evaluate(config)
    lines = [f"Evaluated {report.variant} on {report.n_samples} test samples"]
    lines.append("  CSI: " + ", ".join(f"{e.threshold}={e.csi:.3f}" for e in report.csi.entries))
    lines.append("  MSE by lead: " + ", ".join(f"{v:.4g}" for v in report.mse.values))
    lines.append(f"  calibration error: {report.reliability.calibration_error:.4f}")
    if report.cost is not None:
        lines.append(
            f"  cost: {report.cost.total_flops / 1e9:.4f} GFLOPs, "
            f"{report.cost.wall_mean * 1e3:.2f} ms, {report.cost.parameter_count} parameters"
        )

    if args.shift_probe:
        probe = probe_shift(config)
        lines.append(f"  epistemic shift ratio at {probe.speed_scale}x speed: {probe.ratio:.3f}")
    return "\n".join(lines)
