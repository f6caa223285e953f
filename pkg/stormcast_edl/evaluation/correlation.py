"""Correlation between predicted uncertainty and realised squared error."""

import logging

import numpy as np

from stormcast_edl.errors import EvaluationError
from stormcast_edl.evaluation.models import LeadCurve

logger = logging.getLogger(__name__)


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    a = a - a.mean()
    b = b - b.mean()
    denominator = np.sqrt(np.sum(a * a) * np.sum(b * b))
    if denominator == 0.0 or not np.isfinite(denominator):
        return float("nan")
    return float(np.clip(np.sum(a * b) / denominator, -1.0, 1.0))


def uncertainty_error_correlation(
    uncertainty,
    squared_error,
    normalize: bool = True,
    step_minutes: float = 5.0,
) -> LeadCurve:
    """
    Pearson correlation per lead step between per-sample mean uncertainty and mean squared error.

    Args:
        uncertainty: Uncertainty maps ``[samples, lead, H, W]``
        squared_error: Squared errors of the point forecast, same shape
        normalize: Divide every lead's correlation by the lead-1 value
        step_minutes: Minutes per lead step

    Returns:
        LeadCurve; leads where either series is constant are NaN and flagged
    """
    uncertainty = np.asarray(uncertainty, dtype=np.float64)
    squared_error = np.asarray(squared_error, dtype=np.float64)
    if uncertainty.shape != squared_error.shape:
        raise EvaluationError(
            f"uncertainty shape {uncertainty.shape} "
            f"does not match error shape {squared_error.shape}"
        )
    if uncertainty.ndim != 4 or uncertainty.shape[0] < 2:
        raise EvaluationError(f"expected [samples>=2, lead, H, W] arrays, got {uncertainty.shape}")

    mean_uncertainty = uncertainty.mean(axis=(2, 3))
    mean_error = squared_error.mean(axis=(2, 3))
    values = [
        _pearson(mean_uncertainty[:, j], mean_error[:, j]) for j in range(uncertainty.shape[1])
    ]

    if normalize:
        anchor = values[0]
        if np.isnan(anchor) or anchor == 0.0:
            logger.warning("lead-1 correlation is undefined or zero; normalized curve is undefined")
            values = [float("nan")] * len(values)
        else:
            values = [value / anchor for value in values]
    undefined = sum(np.isnan(values))
    if undefined:
        logger.warning(f"correlation undefined at {undefined} lead steps (constant inputs)")
    return LeadCurve(
        kind="correlation", values=values, step_minutes=step_minutes, normalized=normalize
    )
