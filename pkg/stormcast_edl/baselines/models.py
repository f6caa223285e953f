"""Data models for the sampling-based uncertainty baselines."""

from typing import Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from stormcast_edl.errors import ConfigError, ShapeError
from stormcast_edl.evaluation.reliability import GaussianPredictive
from stormcast_edl.model.models import ModelConfig


class EnsembleSpec(BaseModel):
    """Size and member seeds of a deep ensemble."""

    n_members: int = Field(10, ge=2, description="Independently trained members")
    member_seeds: list[int] = Field(
        default_factory=list, description="One seed per member; derived when empty"
    )

    @model_validator(mode="after")
    def check_seeds(self) -> "EnsembleSpec":
        if self.member_seeds and len(self.member_seeds) != self.n_members:
            raise ValueError(
                f"member_seeds lists {len(self.member_seeds)} seeds for {self.n_members} members"
            )
        if len(set(self.member_seeds)) != len(self.member_seeds):
            raise ValueError("member_seeds must be distinct")
        return self

    def seeds(self, base_seed: int = 0) -> list[int]:
        return list(self.member_seeds) or [base_seed + i for i in range(self.n_members)]


class EnsembleManifest(BaseModel):
    """Contents of ``manifest.json`` in an ensemble checkpoint directory."""

    n_members: int
    seeds: list[int]
    files: list[str]
    config: ModelConfig


class SampleUQ(BaseModel):
    """Mean and population variance over forward passes or ensemble members."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    mean: np.ndarray
    variance: np.ndarray = Field(..., description="Population (1/N) variance, never negative")
    members: Optional[np.ndarray] = Field(None, description="Per-pass outputs stacked on axis 0")

    @classmethod
    def from_members(cls, outputs: Sequence[np.ndarray], keep_members: bool = True) -> "SampleUQ":
        """
        Aggregate per-pass outputs.

        Variance is computed in two passes around the mean and is exactly zero
        wherever every pass agrees.
        """
        if len(outputs) < 2:
            raise ConfigError(f"need at least 2 passes or members, got {len(outputs)}")
        shapes = {np.shape(output) for output in outputs}
        if len(shapes) != 1:
            raise ShapeError(f"member outputs have different shapes: {sorted(shapes)}")
        stacked = np.stack([np.asarray(output, dtype=np.float64) for output in outputs])
        mean = stacked.mean(axis=0)
        variance = np.mean((stacked - mean) ** 2, axis=0)
        variance[np.ptp(stacked, axis=0) == 0.0] = 0.0
        return cls(mean=mean, variance=variance, members=stacked if keep_members else None)

    @property
    def n_members(self) -> Optional[int]:
        return None if self.members is None else self.members.shape[0]

    def predictive(self) -> GaussianPredictive:
        """Per-pixel Gaussian predictive distribution with this mean and variance."""
        return GaussianPredictive(mean=self.mean, variance=self.variance)
