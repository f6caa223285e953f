"""Frame data: synthetic storm generation, raw file ingestion and windowing."""

from stormcast_edl.data.models import (
    DatasetManifest,
    DatasetSplits,
    FrameSequence,
    NowcastSample,
    StormCell,
    SyntheticStormConfig,
)
from stormcast_edl.data.raw_io import RawLayout, export, ingest
from stormcast_edl.data.synthetic import generate, render_event, sample_cells
from stormcast_edl.data.windows import (
    HISTORY_FRAMES,
    HORIZON_FRAMES,
    fingerprint,
    split_events,
    stack_samples,
    window,
)

__all__ = [
    "HISTORY_FRAMES",
    "HORIZON_FRAMES",
    "DatasetManifest",
    "DatasetSplits",
    "FrameSequence",
    "NowcastSample",
    "RawLayout",
    "StormCell",
    "SyntheticStormConfig",
    "export",
    "fingerprint",
    "generate",
    "ingest",
    "render_event",
    "sample_cells",
    "split_events",
    "stack_samples",
    "window",
]
