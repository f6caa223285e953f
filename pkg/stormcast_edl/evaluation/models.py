"""Data models for verification metrics and evaluation reports."""

import math
from typing import Literal, Optional

from pydantic import BaseModel, Field, model_validator

from stormcast_edl.errors import EvaluationError


class CSIEntry(BaseModel):
    """Contingency counts and critical success index at one threshold (0-255 scale)."""

    threshold: int
    hits: int = Field(..., ge=0)
    misses: int = Field(..., ge=0)
    false_alarms: int = Field(..., ge=0)
    csi: float = Field(..., description="NaN when hits + misses + false alarms is zero")
    defined: bool


class CSIReport(BaseModel):
    entries: list[CSIEntry]

    @property
    def thresholds(self) -> list[int]:
        return [entry.threshold for entry in self.entries]

    def score(self, threshold: int) -> float:
        for entry in self.entries:
            if entry.threshold == threshold:
                return entry.csi
        raise EvaluationError(f"no CSI computed at threshold {threshold}")


class LeadCurve(BaseModel):
    """One value per forecast lead step (lead 1 first)."""

    kind: Literal["mse", "correlation"]
    values: list[float]
    defined: list[bool] = Field(
        default_factory=list, description="False where a value is undefined"
    )
    step_minutes: float = Field(5.0, gt=0.0)
    normalized: bool = False

    @model_validator(mode="after")
    def fill_flags(self) -> "LeadCurve":
        if not self.defined:
            self.defined = [not math.isnan(value) for value in self.values]
        if len(self.defined) != len(self.values):
            raise ValueError("defined flags must match the number of values")
        return self

    @property
    def lead_minutes(self) -> list[float]:
        return [self.step_minutes * (index + 1) for index in range(len(self.values))]


class ReliabilityCurve(BaseModel):
    """Observed coverage of central predictive intervals against their nominal level."""

    nominal: list[float]
    observed: list[float]
    mean_width: list[float]
    n_points: int = Field(..., ge=0)
    collapsed_points: int = Field(0, ge=0, description="Points whose interval is a single value")

    @property
    def calibration_error(self) -> float:
        """Mean absolute gap between observed and nominal coverage."""
        return sum(abs(o - n) for o, n in zip(self.observed, self.nominal)) / len(self.nominal)


class CostProfile(BaseModel):
    """Inference cost of one single-sample prediction."""

    flops_per_pass: int = Field(..., ge=0)
    passes: int = Field(1, ge=1)
    total_flops: int = Field(..., ge=0)
    wall_mean: float = Field(..., ge=0.0, description="Seconds per prediction")
    wall_std: float = Field(..., ge=0.0)
    timings: list[float] = Field(default_factory=list)
    parameter_count: int = Field(0, ge=0)

    @model_validator(mode="after")
    def check_total(self) -> "CostProfile":
        if self.total_flops != self.flops_per_pass * self.passes:
            raise ValueError(
                f"total_flops {self.total_flops} != {self.flops_per_pass} x {self.passes} passes"
            )
        return self


class EvalReport(BaseModel):
    """Every metric of one model variant on one test split."""

    variant: str
    test_fingerprint: str
    n_samples: int = Field(..., ge=0)
    uncertainty_kind: str = "variance"
    csi: CSIReport
    mse: LeadCurve
    correlation: LeadCurve
    reliability: ReliabilityCurve
    cost: Optional[CostProfile] = None
    seed: int = 0

    def comparable(self) -> dict:
        """Report contents without wall-clock timings."""
        dump = self.model_dump()
        if dump.get("cost"):
            for key in ("wall_mean", "wall_std", "timings"):
                dump["cost"].pop(key, None)
        return dump
