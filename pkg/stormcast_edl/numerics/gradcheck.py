"""Central-difference gradient checking for taped computations."""

import logging
from typing import Callable, Optional, Sequence

import numpy as np

from stormcast_edl.numerics.tensor import GradTape, Tensor, backward

logger = logging.getLogger(__name__)


def numerical_gradient(
    fn: Callable[[], Tensor],
    param: Tensor,
    indices: Optional[Sequence[int]] = None,
    h: float = 1e-5,
) -> np.ndarray:
    """
    Central differences of a scalar function with respect to selected entries of a leaf.

    Args:
        fn: Zero-argument callable recomputing the scalar loss from current parameter values
        param: Leaf tensor to perturb
        indices: Flat indices to perturb (all entries when omitted)
        h: Step size

    Returns:
        Array of finite-difference derivatives, one per selected index
    """
    original = param.data
    flat_indices = range(original.size) if indices is None else indices
    result = np.empty(len(flat_indices), dtype=np.float64)
    try:
        for position, flat in enumerate(flat_indices):
            bumped = np.array(original).reshape(-1)
            bumped[flat] = original.reshape(-1)[flat] + h
            param.assign(bumped.reshape(original.shape))
            upper = fn().item()
            bumped[flat] = original.reshape(-1)[flat] - h
            param.assign(bumped.reshape(original.shape))
            lower = fn().item()
            result[position] = (upper - lower) / (2.0 * h)
    finally:
        param.assign(original)
    return result


def gradient_check(
    fn: Callable[[], Tensor],
    params: Sequence[Tensor],
    h: float = 1e-5,
    max_entries_per_param: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
    floor: float = 1e-5,
) -> float:
    """
    Compare taped gradients with central differences.

    Args:
        fn: Zero-argument callable building the scalar loss from ``params``
        params: Leaf tensors with ``requires_grad=True``
        h: Finite-difference step
        max_entries_per_param: Check a random subset of this many entries per parameter
        rng: Generator for the subset choice
        floor: Lower bound on the denominator of the relative error

    Returns:
        Maximum relative error ``|analytic - numeric| / max(|analytic|, |numeric|, floor)``
    """
    with GradTape() as tape:
        loss = fn()
    grads = backward(loss, tape)
    rng = rng if rng is not None else np.random.default_rng(0)

    worst = 0.0
    for param in params:
        analytic = grads.get(param, np.zeros_like(param.data)).reshape(-1)
        if max_entries_per_param is not None and param.size > max_entries_per_param:
            indices = np.sort(rng.choice(param.size, size=max_entries_per_param, replace=False))
        else:
            indices = np.arange(param.size)
        numeric = numerical_gradient(fn, param, indices.tolist(), h)
        selected = analytic[indices]
        scale = np.maximum(np.maximum(np.abs(selected), np.abs(numeric)), floor)
        error = float(np.max(np.abs(selected - numeric) / scale))
        if error > worst:
            worst = error
        logger.debug(f"gradient check {param.name or param.shape}: max relative error {error:.3e}")
    return worst
