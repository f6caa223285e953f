"""Inference cost measurement: counted FLOPs and wall-clock timings."""

import logging
import time
from typing import Any, Callable, Optional

import numpy as np

from stormcast_edl.config import config
from stormcast_edl.errors import EvaluationError
from stormcast_edl.evaluation.models import CostProfile
from stormcast_edl.numerics import count_flops

logger = logging.getLogger(__name__)


def profile(
    runner: Callable[[], Any],
    n_repeats: Optional[int] = None,
    warmup: Optional[int] = None,
    passes: int = 1,
    parameter_count: int = 0,
    timer: Callable[[], float] = time.perf_counter,
) -> CostProfile:
    """
    Profile one single-sample prediction.

    Args:
        runner: Zero-argument callable performing the full prediction (all passes)
        n_repeats: Timed runs; ``STORMCAST_PROFILE_REPEATS`` when omitted
        warmup: Untimed runs before timing; ``STORMCAST_PROFILE_WARMUP`` when omitted
        passes: Forward passes the runner performs (members or MC samples)
        parameter_count: Parameters involved in the prediction

    Returns:
        CostProfile with counted FLOPs and timing statistics
    """
    n_repeats = config.PROFILE_REPEATS if n_repeats is None else n_repeats
    warmup = config.PROFILE_WARMUP if warmup is None else warmup
    if n_repeats < 1 or warmup < 0 or passes < 1:
        raise EvaluationError("profiling needs n_repeats >= 1, warmup >= 0 and passes >= 1")

    with count_flops() as counter:
        runner()
    total = counter.total
    if total % passes:
        raise EvaluationError(f"counted {total} FLOPs, which is not a multiple of {passes} passes")

    for _ in range(warmup):
        runner()
    timings = []
    for _ in range(n_repeats):
        start = timer()
        runner()
        timings.append(timer() - start)

    result = CostProfile(
        flops_per_pass=total // passes,
        passes=passes,
        total_flops=total,
        wall_mean=float(np.mean(timings)),
        wall_std=float(np.std(timings, ddof=1)) if len(timings) > 1 else 0.0,
        timings=timings,
        parameter_count=parameter_count,
    )
    logger.info(
        f"Profiled {passes} pass(es): {total} FLOPs, "
        f"{result.wall_mean * 1e3:.2f} ± {result.wall_std * 1e3:.2f} ms over {n_repeats} runs"
    )
    return result
