"""Data models for the Normal-Inverse-Gamma evidential head."""

from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from stormcast_edl.errors import DomainError, ShapeError
from stormcast_edl.numerics import Tensor


class NIGParamMap(BaseModel):
    """Per-pixel, per-lead-time evidential parameters (γ, υ, α, β)."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    gamma: Tensor = Field(..., description="Predicted mean, unconstrained real")
    upsilon: Tensor = Field(..., description="Virtual observation count of the mean, > 0")
    alpha: Tensor = Field(..., description="Inverse-gamma shape, > 1")
    beta: Tensor = Field(..., description="Inverse-gamma scale, > 0")

    @classmethod
    def from_arrays(cls, gamma, upsilon, alpha, beta) -> "NIGParamMap":
        """Build a parameter map from plain values, broadcasting them to one shape."""
        arrays = np.broadcast_arrays(
            *(np.asarray(v, dtype=np.float64) for v in (gamma, upsilon, alpha, beta))
        )
        return cls(
            gamma=Tensor(arrays[0]),
            upsilon=Tensor(arrays[1]),
            alpha=Tensor(arrays[2]),
            beta=Tensor(arrays[3]),
        )

    @property
    def shape(self) -> tuple[int, ...]:
        return self.gamma.shape

    def check_constraints(self) -> None:
        """Raise if the shapes disagree or υ > 0, α > 1, β > 0 fails anywhere."""
        for name in ("upsilon", "alpha", "beta"):
            if getattr(self, name).shape != self.gamma.shape:
                raise ShapeError(
                    f"{name} has shape {getattr(self, name).shape}, gamma has {self.gamma.shape}"
                )
        if np.any(self.upsilon.data <= 0.0):
            raise DomainError("upsilon must be strictly positive")
        if np.any(self.alpha.data <= 1.0):
            raise DomainError("alpha must exceed 1")
        if np.any(self.beta.data <= 0.0):
            raise DomainError("beta must be strictly positive")


class UncertaintyField(BaseModel):
    """Prediction together with aleatoric and epistemic variance maps."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    prediction: Tensor
    aleatoric: Tensor = Field(..., description="E[σ²], normalized intensity squared")
    epistemic: Tensor = Field(..., description="Var[μ], normalized intensity squared")

    @property
    def total(self) -> Tensor:
        return self.aleatoric + self.epistemic

    def select(self, kind: str) -> np.ndarray:
        """Return the named uncertainty map as an array: epistemic, aleatoric or total."""
        if kind == "epistemic":
            return self.epistemic.numpy()
        if kind == "aleatoric":
            return self.aleatoric.numpy()
        if kind == "total":
            return self.total.numpy()
        raise ValueError(f"Unknown uncertainty kind: {kind}")


class EvidentialLoss(BaseModel):
    """Loss components of one evidential training step."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True, populate_by_name=True)

    nll: Tensor
    reg: Tensor
    lam: float = Field(..., ge=0.0, alias="lambda")
    total: Tensor


class LambdaSchedule(BaseModel):
    """Regularizer weight as a function of the optimisation step."""

    lambda_max: float = Field(0.01, ge=0.0, description="Final regularizer weight")
    ramp_steps: int = Field(
        1, gt=0, description="Steps over which the linear ramp reaches lambda_max"
    )
    mode: Literal["constant", "linear-ramp"] = "linear-ramp"

    def value(self, step: int) -> float:
        if step < 0:
            raise ValueError(f"step must be non-negative, got {step}")
        if self.mode == "constant":
            return self.lambda_max
        return self.lambda_max * min(1.0, step / self.ramp_steps)
