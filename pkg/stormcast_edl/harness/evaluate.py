"""Evaluation runs: the full metric battery on the test split, error maps and the shift probe."""

import io
import logging
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from stormcast_edl.data import SyntheticStormConfig, generate, stack_samples, window
from stormcast_edl.errors import EvaluationError
from stormcast_edl.evaluation import (
    CostProfile,
    EvalReport,
    csi,
    mse_by_lead,
    profile,
    reliability,
    uncertainty_error_correlation,
    write_report,
)
from stormcast_edl.evidential import decompose
from stormcast_edl.harness.datasets import prepare_dataset
from stormcast_edl.harness.io import run_dir, write_resolved_config
from stormcast_edl.harness.models import EvaluationSection, ExperimentConfig, ShiftProbe
from stormcast_edl.harness.predictors import Predictive, load_predictor
from stormcast_edl.harness.training import MODEL_FILE
from stormcast_edl.model import NowcastModel, load_checkpoint
from stormcast_edl.utils import atomic_write_bytes, atomic_write_json

logger = logging.getLogger(__name__)

REPORT_DIR = "report"
MAPS_NAME = "maps.npz"
SHIFT_PROBE_NAME = "shift_probe.json"


def score_predictions(
    variant: str,
    point: np.ndarray,
    uncertainty: np.ndarray,
    predictive: Predictive,
    truth: np.ndarray,
    evaluation: EvaluationSection,
    test_fingerprint: str,
    uncertainty_kind: str = "variance",
    cost: Optional[CostProfile] = None,
    step_minutes: float = 5.0,
) -> EvalReport:
    """
    Run every metric on one set of predictions.

    The point forecast is clamped to [0, 1] for CSI, MSE and the squared
    errors entering the correlation; reliability uses the unclamped
    predictive distribution.
    """
    truth = np.asarray(truth, dtype=np.float64)
    clamped = np.clip(point, 0.0, 1.0)
    return EvalReport(
        variant=variant,
        test_fingerprint=test_fingerprint,
        n_samples=int(truth.shape[0]),
        uncertainty_kind=uncertainty_kind,
        csi=csi(clamped, truth),
        mse=mse_by_lead(clamped, truth, step_minutes),
        correlation=uncertainty_error_correlation(
            uncertainty,
            (clamped - truth) ** 2,
            normalize=evaluation.normalize_correlation,
            step_minutes=step_minutes,
        ),
        reliability=reliability(
            predictive, truth, max_points=evaluation.reliability_max_points, seed=evaluation.seed
        ),
        cost=cost,
        seed=evaluation.seed,
    )


def lead_maps(
    truth: np.ndarray,
    point: np.ndarray,
    uncertainty: np.ndarray,
    leads: Sequence[int],
    sample: int = 0,
) -> dict[str, np.ndarray]:
    """
    Error and uncertainty maps at selected lead steps (1-based).

    ``target``, ``output`` and ``uncertainty`` show one test sample; ``rmse``
    is the per-pixel root-mean-square error over all test samples.
    """
    index = [lead - 1 for lead in leads]
    clamped = np.clip(point, 0.0, 1.0)
    return {
        "leads": np.asarray(leads),
        "target": truth[sample, index],
        "output": clamped[sample, index],
        "rmse": np.sqrt(np.mean((clamped - truth) ** 2, axis=0))[index],
        "uncertainty": uncertainty[sample, index],
    }


def write_maps(maps: dict[str, np.ndarray], path: Union[str, Path]) -> Path:
    buffer = io.BytesIO()
    np.savez(buffer, **maps)
    return atomic_write_bytes(path, buffer.getvalue())


def evaluate(config: ExperimentConfig) -> EvalReport:
    """
    Evaluate the trained variant under ``config.output_dir`` on the test split.

    Writes the report tables, summary, error maps and resolved config to
    ``<output_dir>/<variant>/report``.
    """
    splits, manifest = prepare_dataset(config.data)
    arch = config.model
    samples = window(splits.test, arch.in_steps, arch.out_steps, config.data.eval_stride)
    if len(samples) < 2:
        raise EvaluationError(f"test split yields {len(samples)} samples; at least 2 are needed")
    x, y = stack_samples(samples)
    directory = run_dir(config)
    predictor = load_predictor(config, directory)

    prediction = predictor.predict(x, config.training.batch_size)
    evaluation = config.evaluation
    cost = profile(
        lambda: predictor.run(x[:1]),
        n_repeats=evaluation.profile_repeats,
        warmup=evaluation.profile_warmup,
        passes=predictor.passes,
        parameter_count=predictor.parameter_count(),
    )
    report = score_predictions(
        config.variant,
        prediction.point,
        prediction.uncertainty,
        prediction.predictive,
        y,
        evaluation,
        manifest.test_fingerprint,
        uncertainty_kind=predictor.uncertainty_kind,
        cost=cost,
        step_minutes=manifest.step_minutes,
    )
    out = directory / REPORT_DIR
    write_report(report, out)
    maps = lead_maps(y, prediction.point, prediction.uncertainty, evaluation.map_leads)
    write_maps(maps, out / MAPS_NAME)
    write_resolved_config(config, out)
    return report


def mean_epistemic(model: NowcastModel, x: np.ndarray, batch_size: int = 8) -> float:
    total, count = 0.0, 0
    for start in range(0, len(x), batch_size):
        epistemic = decompose(model.evidential_params(x[start : start + batch_size])).epistemic
        total += float(np.sum(epistemic.data))
        count += epistemic.size
    return total / count


def epistemic_shift_ratio(
    model: NowcastModel,
    synthetic: SyntheticStormConfig,
    speed_scale: float = 3.0,
    n_events: int = 10,
    seed_offset: int = 10_000,
) -> ShiftProbe:
    """
    Compare mean epistemic uncertainty on fresh in-distribution events and on
    events whose advection speed range is scaled by ``speed_scale``.
    """
    if model.config.head != "evidential":
        raise EvaluationError("the shift probe needs an evidential model")
    base = synthetic.model_copy(update={"seed": synthetic.seed + seed_offset, "n_events": n_events})
    values, count = [], 0
    for regime in (base, base.with_speed_scale(speed_scale)):
        samples = window(
            generate(regime), model.config.in_steps, model.config.out_steps, stride=regime.n_frames
        )
        if not samples:
            raise EvaluationError("synthetic events are too short for the model's window")
        x, _ = stack_samples(samples)
        values.append(mean_epistemic(model, x))
        count += len(samples)
    probe = ShiftProbe(
        speed_scale=speed_scale, in_distribution=values[0], shifted=values[1], n_samples=count
    )
    logger.info(
        f"Epistemic uncertainty: {probe.in_distribution:.4g} in distribution, "
        f"{probe.shifted:.4g} at {speed_scale}x speed (ratio {probe.ratio:.3f})"
    )
    return probe


def probe_shift(config: ExperimentConfig) -> ShiftProbe:
    """Run the shift probe on the trained evidential variant and write it next to its report."""
    if not config.is_evidential or config.data.synthetic is None:
        raise EvaluationError("the shift probe needs an evidential variant on synthetic data")
    directory = run_dir(config)
    model = load_checkpoint(directory / MODEL_FILE).to_model()
    probe = epistemic_shift_ratio(model, config.data.synthetic, config.evaluation.ood_speed_scale)
    atomic_write_json(directory / REPORT_DIR / SHIFT_PROBE_NAME, probe.model_dump())
    return probe
