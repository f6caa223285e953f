"""Evidential regression objective: Student-t NLL, evidence regularizer and their sum."""

import math
from typing import Any, Literal

from stormcast_edl.errors import ShapeError
from stormcast_edl.evidential.models import EvidentialLoss, LambdaSchedule, NIGParamMap
from stormcast_edl.numerics import Tensor, absolute, as_tensor, lgamma, log, log1p, mean

Reduction = Literal["mean", "none"]


def _target(y: Any, p: NIGParamMap) -> Tensor:
    frames = getattr(y, "frames", y)
    target = as_tensor(frames)
    if target.shape != p.shape:
        raise ShapeError(f"target shape {target.shape} does not match parameter shape {p.shape}")
    return target


def _reduce(values: Tensor, reduction: Reduction) -> Tensor:
    if reduction == "mean":
        return mean(values)
    if reduction == "none":
        return values
    raise ValueError(f"Unknown reduction: {reduction}")


def nll_loss(p: NIGParamMap, y: Any, reduction: Reduction = "mean") -> Tensor:
    """
    Negative log-likelihood of the targets under the NIG predictive Student-t.

    The predictive distribution has location γ, scale² β(1+υ)/(υα) and 2α
    degrees of freedom.

    Args:
        p: Constrained parameter map
        y: Targets (array, Tensor or FrameSequence) shaped like ``p``
        reduction: ``"mean"`` over every element, or ``"none"`` for the per-element map

    Returns:
        Scalar (or per-element) tensor
    """
    target = _target(y, p)
    p.check_constraints()
    dof = 2.0 * p.alpha
    scale2 = p.beta * (1.0 + p.upsilon) / (p.upsilon * p.alpha)
    residual = target - p.gamma
    log_density = (
        lgamma((dof + 1.0) * 0.5)
        - lgamma(dof * 0.5)
        - 0.5 * log(dof * scale2 * math.pi)
        - (dof + 1.0) * 0.5 * log1p(residual * residual / (dof * scale2))
    )
    return _reduce(-log_density, reduction)


def evidence_regularizer(p: NIGParamMap, y: Any, reduction: Reduction = "mean") -> Tensor:
    """Penalty ``|y − γ|·(2υ + α)`` on evidence claimed for wrong predictions."""
    target = _target(y, p)
    penalty = absolute(target - p.gamma) * (2.0 * p.upsilon + p.alpha)
    return _reduce(penalty, reduction)


def total_loss(p: NIGParamMap, y: Any, schedule: LambdaSchedule, step: int) -> EvidentialLoss:
    """
    Evidential objective ``nll + λ(step)·reg``.

    Args:
        p: Constrained parameter map
        y: Targets shaped like ``p``
        schedule: Regularizer weight schedule
        step: Optimisation step (0-based)

    Returns:
        EvidentialLoss holding every component
    """
    nll = nll_loss(p, y)
    reg = evidence_regularizer(p, y)
    lam = schedule.value(step)
    return EvidentialLoss(nll=nll, reg=reg, lam=lam, total=nll + lam * reg)
