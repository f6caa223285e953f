"""Composite differentiable functions built from the tensor primitives."""

from typing import Optional

import numpy as np

from stormcast_edl.errors import ShapeError
from stormcast_edl.numerics.tensor import Tensor, as_tensor, mean, sqrt


def mean_squared_error(prediction: Tensor, target) -> Tensor:
    target = as_tensor(target)
    if prediction.shape != target.shape:
        raise ShapeError(f"prediction {prediction.shape} and target {target.shape} differ")
    residual = prediction - target
    return mean(residual * residual)


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float) -> Tensor:
    """Normalise each feature vector (last axis) to zero mean and unit variance, then rescale."""
    centered = x - mean(x, axis=-1, keepdims=True)
    variance = mean(centered * centered, axis=-1, keepdims=True)
    return centered / sqrt(variance + eps) * gain + bias


def dropout(x: Tensor, rate: float, rng: Optional[np.random.Generator]) -> Tensor:
    """Inverted dropout; identity when ``rng`` is None or ``rate`` is zero."""
    if rng is None or rate <= 0.0:
        return x
    keep = rng.random(x.shape) >= rate
    return x * Tensor(keep / (1.0 - rate))
