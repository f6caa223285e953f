"""Reliability of central predictive intervals."""

import logging
from typing import Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy import special, stats

from stormcast_edl.errors import EvaluationError
from stormcast_edl.evaluation.models import ReliabilityCurve
from stormcast_edl.evidential import NIGParamMap, student_t_params

logger = logging.getLogger(__name__)

NOMINAL_LEVELS = tuple(round(0.05 * i, 2) for i in range(1, 20))
DEFAULT_MAX_POINTS = 100_000


def student_t_quantile(p, dof) -> np.ndarray:
    """
    Quantile of the standard Student-t distribution.

    Inverts the regularized incomplete beta function, choosing the form
    whose argument stays away from 1 so that accuracy holds in both the body
    and the tails.

    Args:
        p: Probabilities in [0, 1]
        dof: Positive degrees of freedom (broadcast against ``p``)

    Returns:
        Array of quantiles (±inf at p = 1 and p = 0)
    """
    p, dof = np.broadcast_arrays(np.asarray(p, dtype=np.float64), np.asarray(dof, dtype=np.float64))
    if np.any((p < 0.0) | (p > 1.0)) or np.any(dof <= 0.0):
        raise EvaluationError("student_t_quantile needs p in [0, 1] and dof > 0")
    coverage = np.abs(2.0 * p - 1.0)
    half_dof = 0.5 * dof
    with np.errstate(divide="ignore", invalid="ignore"):
        near = special.betaincinv(0.5, half_dof, coverage)
        t2_near = dof * near / (1.0 - near)
        far = special.betaincinv(half_dof, 0.5, 1.0 - coverage)
        t2_far = dof * (1.0 - far) / far
    t2 = np.where(near < 0.5, t2_near, t2_far)
    t2 = np.where(coverage == 1.0, np.inf, t2)
    return np.sign(p - 0.5) * np.sqrt(t2)


class GaussianPredictive(BaseModel):
    """Per-pixel normal predictive distribution."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    mean: np.ndarray
    variance: np.ndarray

    def interval(self, level: float) -> tuple[np.ndarray, np.ndarray]:
        std = np.sqrt(np.asarray(self.variance, dtype=np.float64))
        half = stats.norm.ppf(0.5 + 0.5 * level) * std
        return self.mean - half, self.mean + half

    def subset(self, index: np.ndarray, shape: tuple[int, ...]) -> "GaussianPredictive":
        return GaussianPredictive(
            mean=np.broadcast_to(self.mean, shape).reshape(-1)[index],
            variance=np.broadcast_to(self.variance, shape).reshape(-1)[index],
        )


class StudentTPredictive(BaseModel):
    """Per-pixel location-scale Student-t predictive distribution."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    loc: np.ndarray
    scale2: np.ndarray
    dof: np.ndarray

    @classmethod
    def from_params(cls, p: NIGParamMap) -> "StudentTPredictive":
        loc, scale2, dof = student_t_params(p)
        return cls(loc=loc, scale2=scale2, dof=dof)

    def interval(self, level: float) -> tuple[np.ndarray, np.ndarray]:
        half = student_t_quantile(0.5 + 0.5 * level, self.dof) * np.sqrt(self.scale2)
        return self.loc - half, self.loc + half

    def subset(self, index: np.ndarray, shape: tuple[int, ...]) -> "StudentTPredictive":
        return StudentTPredictive(
            loc=np.broadcast_to(self.loc, shape).reshape(-1)[index],
            scale2=np.broadcast_to(self.scale2, shape).reshape(-1)[index],
            dof=np.broadcast_to(self.dof, shape).reshape(-1)[index],
        )


Predictive = Union[GaussianPredictive, StudentTPredictive]


def reliability(
    predictive: Predictive,
    truth,
    levels: Sequence[float] = NOMINAL_LEVELS,
    max_points: Optional[int] = DEFAULT_MAX_POINTS,
    seed: int = 0,
) -> ReliabilityCurve:
    """
    Empirical coverage of central intervals at each nominal level.

    Args:
        predictive: Per-pixel predictive distribution broadcastable to ``truth``
        truth: Observed values
        levels: Nominal central probabilities in (0, 1)
        max_points: Evaluate a seeded random subset of at most this many points
        seed: Seed of the subset

    Returns:
        ReliabilityCurve; points whose interval has zero width count as covered
        only when the observation equals the prediction exactly
    """
    truth = np.asarray(truth, dtype=np.float64)
    if not levels or any(not 0.0 < level < 1.0 for level in levels):
        raise EvaluationError("nominal levels must lie strictly between 0 and 1")
    n = truth.size
    if n == 0:
        raise EvaluationError("reliability needs at least one observation")
    if max_points is not None and n > max_points:
        index = np.sort(np.random.default_rng(seed).choice(n, size=max_points, replace=False))
    else:
        index = np.arange(n)
    try:
        subset = predictive.subset(index, truth.shape)
    except ValueError as e:
        raise EvaluationError(f"predictive distribution does not broadcast to {truth.shape}") from e
    observed_values = truth.reshape(-1)[index]

    observed, widths = [], []
    collapsed = 0
    for level in levels:
        low, high = subset.interval(level)
        observed.append(float(np.mean((observed_values >= low) & (observed_values <= high))))
        width = high - low
        widths.append(float(np.mean(width)))
        collapsed = max(collapsed, int(np.count_nonzero(width == 0.0)))
    if collapsed:
        logger.warning(
            f"{collapsed} points have zero predictive spread; covered only on exact hits"
        )
    return ReliabilityCurve(
        nominal=[float(level) for level in levels],
        observed=observed,
        mean_width=widths,
        n_points=int(index.size),
        collapsed_points=collapsed,
    )
