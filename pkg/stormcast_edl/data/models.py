"""Data models for frame sequences, training samples and the synthetic storm generator."""

import math
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from stormcast_edl.errors import DataError

FloatRange = tuple[float, float]


class FrameSequence(BaseModel):
    """Normalized intensity frames ``[T, H, W]`` with values in [0, 1]."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    frames: np.ndarray
    step_minutes: float = Field(5.0, gt=0.0, description="Minutes between consecutive frames")
    event_id: Optional[int] = Field(
        None, description="Identifier of the storm event the frames belong to"
    )

    @field_validator("frames", mode="before")
    @classmethod
    def validate_frames(cls, value):
        frames = np.array(value, dtype=np.float64)
        if frames.ndim != 3 or min(frames.shape) <= 0:
            raise DataError(f"frames must be a non-empty [T, H, W] array, got shape {frames.shape}")
        if not np.isfinite(frames).all():
            raise DataError("frames contain non-finite values")
        if frames.min() < 0.0 or frames.max() > 1.0:
            raise DataError(
                f"frames must be normalized to [0, 1], got range [{frames.min()}, {frames.max()}]"
            )
        frames.setflags(write=False)
        return frames

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def height(self) -> int:
        return self.frames.shape[1]

    @property
    def width(self) -> int:
        return self.frames.shape[2]

    def slice(self, start: int, stop: int) -> "FrameSequence":
        return FrameSequence(
            frames=self.frames[start:stop], step_minutes=self.step_minutes, event_id=self.event_id
        )


class NowcastSample(BaseModel):
    """One training or evaluation example: observed history and the frames to forecast."""

    model_config = ConfigDict(frozen=True)

    history: FrameSequence
    target: FrameSequence
    start_frame: int = Field(
        0, ge=0, description="Index of the first history frame inside its event"
    )

    @model_validator(mode="after")
    def check_alignment(self) -> "NowcastSample":
        if self.history.frames.shape[1:] != self.target.frames.shape[1:]:
            raise DataError(
                f"history frames {self.history.frames.shape[1:]} and target frames "
                f"{self.target.frames.shape[1:]} differ in size"
            )
        if self.history.step_minutes != self.target.step_minutes:
            raise DataError("history and target use different frame intervals")
        if self.history.event_id != self.target.event_id:
            raise DataError("history and target come from different events")
        return self

    @property
    def event_id(self) -> Optional[int]:
        return self.history.event_id


class SyntheticStormConfig(BaseModel):
    """Settings of the advecting Gaussian-cell storm generator."""

    n_events: int = Field(60, gt=0)
    n_frames: int = Field(25, gt=0, description="Frames per event")
    height: int = Field(32, gt=0)
    width: int = Field(32, gt=0)
    cells_per_event: tuple[int, int] = Field(
        (1, 3), description="Inclusive range of cells per event"
    )
    speed_range: FloatRange = Field((0.5, 1.5), description="Advection speed in pixels per step")
    heading_range: FloatRange = Field(
        (0.0, 2.0 * math.pi), description="Heading in radians, 0 = +column"
    )
    growth_range: FloatRange = Field((0.97, 1.03), description="Per-step intensity multiplier")
    sigma_range: FloatRange = Field(
        (2.0, 4.0), description="Cell radius (Gaussian sigma) in pixels"
    )
    amplitude_range: FloatRange = Field(
        (0.4, 0.9), description="Peak intensity at the middle frame"
    )
    noise_amplitude: float = Field(0.02, ge=0.0, lt=1.0)
    step_minutes: float = Field(5.0, gt=0.0)
    seed: int = 0

    @field_validator(
        "cells_per_event",
        "speed_range",
        "heading_range",
        "growth_range",
        "sigma_range",
        "amplitude_range",
    )
    @classmethod
    def validate_range(cls, value, info):
        low, high = value
        if low > high:
            raise ValueError(f"{info.field_name} lower bound {low} exceeds upper bound {high}")
        return value

    @model_validator(mode="after")
    def check_bounds(self) -> "SyntheticStormConfig":
        if self.cells_per_event[0] < 0:
            raise ValueError("cells_per_event must be non-negative")
        if self.speed_range[0] < 0.0:
            raise ValueError("speed_range must be non-negative")
        if self.growth_range[0] <= 0.0:
            raise ValueError("growth_range must be strictly positive")
        if self.sigma_range[0] <= 0.0:
            raise ValueError("sigma_range must be strictly positive")
        if self.amplitude_range[0] < 0.0:
            raise ValueError("amplitude_range must be non-negative")
        return self

    def max_mass_change(self, mass: float) -> float:
        """
        Largest total-intensity change allowed between a frame of ``mass`` and the next.

        Every cell changes its mass by its growth factor per step, so the clean
        field moves by at most ``rate × clean mass``. Noise shifts each pixel by
        at most ``noise_amplitude``, once in each of the two frames.
        """
        low, high = self.growth_range
        rate = max(high - 1.0, 1.0 - low)
        noise_mass = self.noise_amplitude * self.height * self.width
        return rate * (mass + noise_mass) + 2.0 * noise_mass

    def with_speed_scale(self, factor: float) -> "SyntheticStormConfig":
        """Copy with the advection speed range multiplied by ``factor``."""
        if factor <= 0.0:
            raise ValueError(f"speed scale must be positive, got {factor}")
        low, high = self.speed_range
        return self.model_copy(update={"speed_range": (low * factor, high * factor)})


class StormCell(BaseModel):
    """One Gaussian intensity cell of a synthetic event."""

    model_config = ConfigDict(frozen=True)

    row: float = Field(..., description="Centre row at frame 0")
    col: float = Field(..., description="Centre column at frame 0")
    velocity_row: float
    velocity_col: float
    sigma: float = Field(..., gt=0.0)
    amplitude: float = Field(..., ge=0.0, description="Peak intensity at the middle frame")
    growth: float = Field(..., gt=0.0)


class DatasetSplits(BaseModel):
    """Event-disjoint train, validation and test partitions."""

    model_config = ConfigDict(frozen=True)

    train: list[FrameSequence]
    validation: list[FrameSequence]
    test: list[FrameSequence]

    @staticmethod
    def _ids(events: list[FrameSequence]) -> set[int]:
        return {event.event_id for event in events if event.event_id is not None}

    @model_validator(mode="after")
    def check_disjoint(self) -> "DatasetSplits":
        train, validation, test = (self._ids(s) for s in (self.train, self.validation, self.test))
        if train & validation or train & test or validation & test:
            raise DataError("dataset splits share events")
        return self

    def split(self, name: str) -> list[FrameSequence]:
        if name not in ("train", "validation", "test"):
            raise ValueError(f"Unknown split: {name}")
        return getattr(self, name)


class DatasetManifest(BaseModel):
    """Description of a generated or ingested dataset, written next to its frames."""

    source: Literal["synthetic", "ingested"]
    n_events: int
    n_frames: int
    height: int
    width: int
    step_minutes: float
    seed: Optional[int] = None
    synthetic: Optional[SyntheticStormConfig] = None
    raw_path: Optional[str] = None
    train_events: list[int]
    validation_events: list[int]
    test_events: list[int]
    test_fingerprint: str = Field(..., description="SHA-256 of the test split frames")
