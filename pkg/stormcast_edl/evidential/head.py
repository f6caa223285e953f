"""Output constraints and uncertainty decomposition of the evidential head."""

import logging

import numpy as np

from stormcast_edl.errors import DomainError, ShapeError
from stormcast_edl.evidential.models import NIGParamMap, UncertaintyField
from stormcast_edl.numerics import Tensor, clamp_min, getitem, softplus

logger = logging.getLogger(__name__)

# Floor applied to every softplus output so that υ, β > 0 and α > 1 hold in floating point.
SOFTPLUS_FLOOR = 1e-15

NIG_CHANNELS = ("gamma", "upsilon", "alpha", "beta")


def constrain(raw: Tensor) -> NIGParamMap:
    """
    Map raw head outputs onto valid Normal-Inverse-Gamma parameters.

    Args:
        raw: Tensor shaped ``[4, lead, H, W]`` or ``[batch, 4, lead, H, W]``

    Returns:
        NIGParamMap with gamma = raw[0], upsilon = softplus(raw[1]),
        alpha = 1 + softplus(raw[2]) and beta = softplus(raw[3])
    """
    if raw.ndim < 4:
        raise ShapeError(f"evidential head output needs at least 4 axes, got shape {raw.shape}")
    axis = raw.ndim - 4
    if raw.shape[axis] != len(NIG_CHANNELS):
        raise ShapeError(
            f"evidential head output needs {len(NIG_CHANNELS)} channels on axis {axis}, "
            f"got {raw.shape[axis]}"
        )
    lead = (slice(None),) * axis

    def channel(index: int) -> Tensor:
        return getitem(raw, lead + (index,))

    return NIGParamMap(
        gamma=channel(0),
        upsilon=clamp_min(softplus(channel(1)), SOFTPLUS_FLOOR),
        alpha=1.0 + clamp_min(softplus(channel(2)), SOFTPLUS_FLOOR),
        beta=clamp_min(softplus(channel(3)), SOFTPLUS_FLOOR),
    )


def decompose(p: NIGParamMap) -> UncertaintyField:
    """
    Split a parameter map into prediction, aleatoric and epistemic uncertainty.

    Args:
        p: Constrained parameter map

    Returns:
        UncertaintyField with E[μ] = γ, E[σ²] = β/(α−1), Var[μ] = β/(υ(α−1))
    """
    if np.any(p.alpha.data <= 1.0):
        raise DomainError("decompose needs alpha > 1 everywhere")
    p.check_constraints()
    excess = p.alpha - 1.0
    return UncertaintyField(
        prediction=p.gamma,
        aleatoric=p.beta / excess,
        epistemic=p.beta / (p.upsilon * excess),
    )


def student_t_params(p: NIGParamMap) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Predictive Student-t implied by the parameter map.

    Returns:
        Tuple of (location γ, scale² β(1+υ)/(υα), degrees of freedom 2α) as arrays
    """
    p.check_constraints()
    gamma, upsilon, alpha, beta = (t.numpy() for t in (p.gamma, p.upsilon, p.alpha, p.beta))
    scale2 = beta * (1.0 + upsilon) / (upsilon * alpha)
    return gamma, scale2, 2.0 * alpha
