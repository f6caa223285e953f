"""Monte-Carlo dropout: repeated stochastic forwards of one deterministic model."""

import logging
import warnings
from typing import Any

import numpy as np

from stormcast_edl.baselines.models import SampleUQ
from stormcast_edl.errors import ConfigError
from stormcast_edl.model import NowcastModel

logger = logging.getLogger(__name__)

DEFAULT_PASSES = 10


def mc_dropout_predict(
    model: NowcastModel,
    x: Any,
    n_passes: int = DEFAULT_PASSES,
    seed: int = 0,
    keep_members: bool = True,
) -> SampleUQ:
    """
    Mean and population variance over ``n_passes`` forwards with dropout active.

    Args:
        model: Deterministic-head model trained with dropout
        x: Input frames
        n_passes: Stochastic forwards (at least 2)
        seed: Seed of the dropout masks; equal seeds give identical results
        keep_members: Retain each pass's forecast

    Returns:
        SampleUQ per pixel and lead step
    """
    if n_passes < 2:
        raise ConfigError(f"MC dropout needs at least 2 passes, got {n_passes}")
    if model.config.head != "deterministic":
        raise ConfigError("MC dropout runs on the deterministic head")
    if model.config.dropout_rate == 0.0:
        message = (
            f"dropout_rate is 0: all {n_passes} MC-dropout passes are identical "
            "and variance is 0"
        )
        logger.warning(message)
        warnings.warn(message, RuntimeWarning, stacklevel=2)

    rng = np.random.default_rng(seed)
    outputs = [model.forward(x, dropout_active=True, rng=rng).numpy() for _ in range(n_passes)]
    return SampleUQ.from_members(outputs, keep_members)
