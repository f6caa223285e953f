"""First-order optimisation of leaf tensors."""

import math
from typing import Mapping, Sequence

import numpy as np

from stormcast_edl.numerics.tensor import Tensor


def clip_grad_norm(grads: Mapping[Tensor, np.ndarray], max_norm: float) -> tuple[dict, float]:
    """
    Rescale gradients so their global L2 norm does not exceed ``max_norm``.

    Args:
        grads: Gradient map as returned by ``backward``
        max_norm: Largest allowed global norm; non-positive disables clipping

    Returns:
        Tuple of (possibly rescaled gradient map, norm before clipping)
    """
    total = math.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
    if max_norm <= 0.0 or total <= max_norm:
        return dict(grads), total
    scale = max_norm / (total + 1e-12)
    return {param: g * scale for param, g in grads.items()}, total


class Adam:
    """Adaptive-moment optimizer updating parameters in place."""

    def __init__(
        self,
        parameters: Sequence[Tensor],
        lr: float = 1e-3,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        self.params = list(parameters)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]
        self.t = 0

    def step(self, grads: Mapping[Tensor, np.ndarray]) -> None:
        self.t += 1
        for i, p in enumerate(self.params):
            grad = grads.get(p)
            if grad is None:
                continue
            self.m[i] = self.beta1 * self.m[i] + (1 - self.beta1) * grad
            self.v[i] = self.beta2 * self.v[i] + (1 - self.beta2) * (grad**2)
            m_hat = self.m[i] / (1 - self.beta1**self.t)
            v_hat = self.v[i] / (1 - self.beta2**self.t)
            p.assign(p.data - self.lr * m_hat / (np.sqrt(v_hat) + self.eps))
