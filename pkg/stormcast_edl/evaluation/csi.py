"""Critical success index at fixed intensity thresholds."""

from typing import Sequence

import numpy as np

from stormcast_edl.errors import EvaluationError
from stormcast_edl.evaluation.models import CSIEntry, CSIReport

THRESHOLDS = (16, 74, 133, 160, 181, 219)
INTENSITY_SCALE = 255.0


def _check_pair(pred: np.ndarray, truth: np.ndarray) -> None:
    if pred.shape != truth.shape:
        raise EvaluationError(
            f"prediction shape {pred.shape} does not match truth shape {truth.shape}"
        )
    for name, values in (("prediction", pred), ("truth", truth)):
        if values.size and (np.isnan(values).any() or values.min() < 0.0 or values.max() > 1.0):
            raise EvaluationError(f"{name} values must lie in [0, 1]")


def contingency(pred: np.ndarray, truth: np.ndarray, threshold: float) -> tuple[int, int, int]:
    """Hits, misses and false alarms after rescaling to 0-255 and binarizing at ``>= threshold``."""
    forecast = pred * INTENSITY_SCALE >= threshold
    observed = truth * INTENSITY_SCALE >= threshold
    hits = int(np.count_nonzero(forecast & observed))
    misses = int(np.count_nonzero(~forecast & observed))
    false_alarms = int(np.count_nonzero(forecast & ~observed))
    return hits, misses, false_alarms


def csi(pred, truth, thresholds: Sequence[int] = THRESHOLDS) -> CSIReport:
    """
    Critical success index pooled over every pixel, lead step and sample.

    Args:
        pred: Forecast intensities in [0, 1]
        truth: Observed intensities in [0, 1], same shape
        thresholds: Event thresholds on the 0-255 scale

    Returns:
        CSIReport with one entry per threshold
    """
    pred = np.asarray(pred, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    _check_pair(pred, truth)
    entries = []
    for threshold in thresholds:
        hits, misses, false_alarms = contingency(pred, truth, threshold)
        total = hits + misses + false_alarms
        entries.append(
            CSIEntry(
                threshold=int(threshold),
                hits=hits,
                misses=misses,
                false_alarms=false_alarms,
                csi=hits / total if total else float("nan"),
                defined=total > 0,
            )
        )
    return CSIReport(entries=entries)
