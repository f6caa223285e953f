"""Error as a function of forecast lead time."""

import numpy as np

from stormcast_edl.errors import EvaluationError
from stormcast_edl.evaluation.models import LeadCurve


def mse_by_lead(pred, truth, step_minutes: float = 5.0) -> LeadCurve:
    """
    Mean squared error per lead step.

    Args:
        pred: Forecasts shaped ``[..., lead, H, W]``
        truth: Observations of the same shape

    Returns:
        LeadCurve averaging over pixels and every leading (sample) axis
    """
    pred = np.asarray(pred, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if pred.shape != truth.shape:
        raise EvaluationError(
            f"prediction shape {pred.shape} does not match truth shape {truth.shape}"
        )
    if pred.ndim < 3:
        raise EvaluationError(f"expected [..., lead, H, W] arrays, got shape {pred.shape}")
    squared = (pred - truth) ** 2
    lead_first = np.moveaxis(squared, -3, 0).reshape(squared.shape[-3], -1)
    return LeadCurve(kind="mse", values=lead_first.mean(axis=1).tolist(), step_minutes=step_minutes)
