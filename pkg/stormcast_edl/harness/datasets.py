"""Dataset assembly for experiments: generate or ingest, split by event, manifest."""

import json
import logging
from pathlib import Path
from typing import Union

from pydantic import ValidationError

from stormcast_edl.data import (
    DatasetManifest,
    DatasetSplits,
    FrameSequence,
    export,
    fingerprint,
    generate,
    ingest,
    split_events,
)
from stormcast_edl.errors import DataError
from stormcast_edl.harness.models import DataSection
from stormcast_edl.utils import atomic_write_json

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"
RAW_NAME = "frames.evst"


def load_events(data: DataSection) -> list[FrameSequence]:
    if data.raw_path is not None:
        return ingest(data.raw_path)
    return generate(data.synthetic)


def prepare_dataset(data: DataSection) -> tuple[DatasetSplits, DatasetManifest]:
    """
    Produce the event-disjoint splits of an experiment and their manifest.

    Args:
        data: Data section of the experiment configuration

    Returns:
        Tuple of (splits, manifest)
    """
    events = load_events(data)
    splits = split_events(events, data.split_fractions, data.split_seed)
    first = events[0]
    manifest = DatasetManifest(
        source="ingested" if data.raw_path is not None else "synthetic",
        n_events=len(events),
        n_frames=first.n_frames,
        height=first.height,
        width=first.width,
        step_minutes=first.step_minutes,
        seed=data.synthetic.seed if data.synthetic is not None else None,
        synthetic=data.synthetic,
        raw_path=data.raw_path,
        train_events=[event.event_id for event in splits.train],
        validation_events=[event.event_id for event in splits.validation],
        test_events=[event.event_id for event in splits.test],
        test_fingerprint=fingerprint(splits.test),
    )
    logger.info(
        f"Dataset: {len(splits.train)} train, {len(splits.validation)} validation, "
        f"{len(splits.test)} test events"
    )
    return splits, manifest


def write_dataset(
    splits: DatasetSplits, manifest: DatasetManifest, directory: Union[str, Path]
) -> Path:
    """Export all events as a raw frame file and write the manifest beside it."""
    directory = Path(directory)
    events = sorted(splits.train + splits.validation + splits.test, key=lambda e: e.event_id)
    export(events, directory / RAW_NAME)
    atomic_write_json(directory / MANIFEST_NAME, manifest.model_dump())
    return directory


def read_manifest(directory: Union[str, Path]) -> DatasetManifest:
    path = Path(directory) / MANIFEST_NAME
    if not path.is_file():
        raise DataError(f"Dataset manifest not found: {path}")
    try:
        return DatasetManifest.model_validate(json.loads(path.read_text()))
    except (ValidationError, json.JSONDecodeError) as e:
        raise DataError(f"Invalid dataset manifest {path}: {e}") from e
