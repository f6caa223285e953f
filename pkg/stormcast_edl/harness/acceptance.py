"""Multi-seed acceptance runs: directional claims about cost, lead time, shift and pretraining."""

import logging
import math
from collections import defaultdict
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from stormcast_edl.evaluation import EvalReport, LeadCurve
from stormcast_edl.harness.evaluate import evaluate, probe_shift
from stormcast_edl.harness.io import apply_overrides
from stormcast_edl.harness.models import (
    VARIANTS,
    AcceptanceCheck,
    AcceptanceSummary,
    ExperimentConfig,
    ShiftProbe,
    TrainingRecord,
)
from stormcast_edl.harness.training import train
from stormcast_edl.utils import atomic_write_json

logger = logging.getLogger(__name__)

ACCEPTANCE_NAME = "acceptance.json"

WALL_CLOCK_SHARE = 0.95
LEAD_DROP_TOLERANCE = 0.05
SHIFT_RATIO = 1.5
PRETRAIN_WIN_SHARE = 0.8
LOSS_EPOCHS = 3


def variant_config(base: ExperimentConfig, variant: str, dropout_rate: float) -> ExperimentConfig:
    """Copy of ``base`` for ``variant``; mc-dropout gets ``dropout_rate`` when the base has none."""
    config = apply_overrides(base, variant=variant)
    if variant == "mc-dropout" and config.model.dropout_rate == 0.0:
        model = config.model.model_copy(update={"dropout_rate": dropout_rate})
        config = config.model_copy(update={"model": model})
    return config


def wall_clock_ordering(
    reports: Mapping[str, Sequence[EvalReport]], share: float = WALL_CLOCK_SHARE
) -> list[AcceptanceCheck]:
    """
    Share of profiled repeats in which one EDL prediction beats each sampling baseline.

    Repeat ``i`` of EDL is paired with repeat ``i`` of the baseline from the
    same seed; pairs are pooled over seeds.
    """
    checks = []
    edl = reports.get("edl", [])
    for baseline in ("mc-dropout", "ensemble"):
        others = reports.get(baseline, [])
        if not edl or not others:
            continue
        wins, pairs = 0, 0
        for fast, slow in zip(edl, others):
            if fast.cost is None or slow.cost is None:
                continue
            for a, b in zip(fast.cost.timings, slow.cost.timings):
                wins += a < b
                pairs += 1
        value = wins / pairs if pairs else 0.0
        checks.append(
            AcceptanceCheck(
                name=f"wall-clock edl < {baseline}",
                passed=pairs > 0 and value >= share,
                value=value,
                threshold=share,
                detail=f"{wins} of {pairs} paired repeats",
            )
        )
    return checks


def lead_trend(
    variant: str, curves: Sequence[LeadCurve], tolerance: float = LEAD_DROP_TOLERANCE
) -> AcceptanceCheck:
    """
    Seed-averaged MSE must not fall with lead time by more than ``tolerance``
    of the curve's range at any single step.
    """
    values = np.mean([curve.values for curve in curves], axis=0)
    span = float(values.max() - values.min()) if values.size else 0.0
    drops = np.maximum(-np.diff(values), 0.0)
    worst = float(drops.max() / span) if drops.size and span > 0.0 else 0.0
    return AcceptanceCheck(
        name=f"lead trend {variant}",
        passed=worst <= tolerance,
        value=worst,
        threshold=tolerance,
        detail="seed-mean MSE by lead: " + ", ".join(f"{v:.4g}" for v in values),
    )


def loss_decrease(records: Sequence[TrainingRecord], epochs: int = LOSS_EPOCHS) -> AcceptanceCheck:
    """The per-epoch median training loss over seeds strictly decreases over the first epochs."""
    curves = [[e.train_loss for e in r.epochs[:epochs]] for r in records]
    complete = [curve for curve in curves if len(curve) == epochs]
    if not complete:
        return AcceptanceCheck(
            name="edl loss decrease",
            passed=False,
            value=0.0,
            threshold=epochs - 1,
            detail=f"no seed trained for {epochs} epochs",
        )
    median = np.median(np.array(complete), axis=0)
    decreases = int(np.sum(np.diff(median) < 0.0))
    return AcceptanceCheck(
        name="edl loss decrease",
        passed=decreases == epochs - 1,
        value=decreases,
        threshold=epochs - 1,
        detail="median train loss: " + ", ".join(f"{v:.5f}" for v in median),
    )


def shift_ratio(
    variant: str, probes: Sequence[ShiftProbe], minimum: float = SHIFT_RATIO
) -> AcceptanceCheck:
    ratios = [probe.ratio for probe in probes]
    median = float(np.median(ratios))
    return AcceptanceCheck(
        name=f"shift ratio {variant}",
        passed=median >= minimum,
        value=median,
        threshold=minimum,
        detail="ratios: " + ", ".join(f"{r:.3f}" for r in ratios),
    )


def pretraining_advantage(
    edl: Sequence[EvalReport], p_edl: Sequence[EvalReport], share: float = PRETRAIN_WIN_SHARE
) -> AcceptanceCheck:
    """P-EDL must reach a lower lead-averaged MSE than EDL in most seed-paired runs."""
    pairs = list(zip(edl, p_edl))
    wins = int(sum(np.mean(p.mse.values) < np.mean(e.mse.values) for e, p in pairs))
    needed = math.ceil(share * len(pairs))
    return AcceptanceCheck(
        name="p-edl beats edl",
        passed=len(pairs) > 0 and wins >= needed,
        value=wins,
        threshold=needed,
        detail=f"{wins} of {len(pairs)} paired runs",
    )


def run_acceptance(
    base: ExperimentConfig,
    seeds: Sequence[int],
    variants: Sequence[str] = VARIANTS,
    dropout_rate: float = 0.1,
) -> AcceptanceSummary:
    """
    Train and evaluate every variant once per seed, then score the directional criteria.

    Each seed runs under ``<output_dir>/seed<N>``; the data split is shared so
    runs pair up by seed. The summary is written to ``<output_dir>/acceptance.json``.
    """
    reports: dict[str, list[EvalReport]] = defaultdict(list)
    probes: dict[str, list[ShiftProbe]] = defaultdict(list)
    edl_records: list[TrainingRecord] = []
    root = Path(base.output_dir)

    for seed in seeds:
        seeded = apply_overrides(base, seed=seed, out=str(root / f"seed{seed}"))
        for variant in variants:
            config = variant_config(seeded, variant, dropout_rate)
            logger.info(f"Acceptance run: {variant}, seed {seed}")
            outcome = train(config)
            if variant == "edl":
                edl_records.append(outcome.records[0])
            reports[variant].append(evaluate(config))
            if config.is_evidential and config.data.synthetic is not None:
                probes[variant].append(probe_shift(config))

    checks = wall_clock_ordering(reports)
    checks.extend(lead_trend(variant, [r.mse for r in reports[variant]]) for variant in variants)
    if edl_records:
        checks.append(loss_decrease(edl_records))
    checks.extend(shift_ratio(variant, values) for variant, values in probes.items())
    if reports.get("edl") and reports.get("p-edl"):
        checks.append(pretraining_advantage(reports["edl"], reports["p-edl"]))

    summary = AcceptanceSummary(seeds=list(seeds), checks=checks)
    atomic_write_json(root / ACCEPTANCE_NAME, summary.model_dump())
    for check in checks:
        level = logging.INFO if check.passed else logging.WARNING
        logger.log(
            level,
            f"{check.name}: {'pass' if check.passed else 'FAIL'} "
            f"({check.value:.4g} vs {check.threshold:.4g}; {check.detail})",
        )
    return summary
