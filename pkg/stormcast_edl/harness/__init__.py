"""Experiment orchestration: configuration, training, transfer, evaluation and comparison."""

from stormcast_edl.harness.acceptance import run_acceptance, variant_config
from stormcast_edl.harness.compare import Comparison, compare, load_reports, write_comparison
from stormcast_edl.harness.datasets import prepare_dataset, write_dataset
from stormcast_edl.harness.evaluate import (
    epistemic_shift_ratio,
    evaluate,
    lead_maps,
    probe_shift,
    score_predictions,
)
from stormcast_edl.harness.io import apply_overrides, load_config, run_dir, write_resolved_config
from stormcast_edl.harness.models import (
    VARIANTS,
    AcceptanceCheck,
    AcceptanceSummary,
    DataSection,
    EvaluationSection,
    ExperimentConfig,
    ShiftProbe,
    TrainingRecord,
    TrainingSection,
    TrainOutcome,
)
from stormcast_edl.harness.training import fit, train
from stormcast_edl.harness.transfer import pretrain_transfer

__all__ = [
    "VARIANTS",
    "AcceptanceCheck",
    "AcceptanceSummary",
    "Comparison",
    "DataSection",
    "EvaluationSection",
    "ExperimentConfig",
    "ShiftProbe",
    "TrainOutcome",
    "TrainingRecord",
    "TrainingSection",
    "apply_overrides",
    "compare",
    "epistemic_shift_ratio",
    "evaluate",
    "fit",
    "lead_maps",
    "load_config",
    "load_reports",
    "prepare_dataset",
    "pretrain_transfer",
    "probe_shift",
    "run_acceptance",
    "run_dir",
    "score_predictions",
    "train",
    "variant_config",
    "write_comparison",
    "write_dataset",
    "write_resolved_config",
]
