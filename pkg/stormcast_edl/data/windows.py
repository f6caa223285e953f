"""Windowing of events into nowcast samples, event-level splitting and split fingerprints."""

import hashlib
import logging
from typing import Sequence

import numpy as np

from stormcast_edl.data.models import DatasetSplits, FrameSequence, NowcastSample
from stormcast_edl.errors import DataError

logger = logging.getLogger(__name__)

HISTORY_FRAMES = 13
HORIZON_FRAMES = 12


def window(
    events: Sequence[FrameSequence],
    history: int = HISTORY_FRAMES,
    horizon: int = HORIZON_FRAMES,
    stride: int = 1,
) -> list[NowcastSample]:
    """
    Cut each event into history/target windows that never cross an event boundary.

    Args:
        events: Frame sequences, one per event
        history: Observed frames per sample
        horizon: Forecast frames per sample
        stride: Offset between consecutive window starts

    Returns:
        Samples in event order, then start-frame order
    """
    if history <= 0 or horizon <= 0 or stride <= 0:
        raise DataError(
            f"history, horizon and stride must be positive, got {history}, {horizon}, {stride}"
        )
    span = history + horizon
    samples = []
    skipped = 0
    for event in events:
        if event.n_frames < span:
            skipped += 1
            continue
        for start in range(0, event.n_frames - span + 1, stride):
            samples.append(
                NowcastSample(
                    history=event.slice(start, start + history),
                    target=event.slice(start + history, start + span),
                    start_frame=start,
                )
            )
    if skipped:
        logger.warning(f"Skipped {skipped} events shorter than {span} frames")
    logger.debug(f"Cut {len(samples)} samples from {len(events) - skipped} events")
    return samples


def split_events(
    events: Sequence[FrameSequence],
    fractions: tuple[float, float, float] = (0.7, 0.15, 0.15),
    seed: int = 0,
) -> DatasetSplits:
    """
    Shuffle events with ``seed`` and partition them into train, validation and test.

    Validation and test receive at least one event each; train gets the rest.
    """
    if len(fractions) != 3 or any(f < 0 for f in fractions) or not np.isclose(sum(fractions), 1.0):
        raise DataError(
            f"split fractions must be three non-negative values summing to 1, got {fractions}"
        )
    n = len(events)
    n_validation = max(1, int(round(fractions[1] * n)))
    n_test = max(1, int(round(fractions[2] * n)))
    n_train = n - n_validation - n_test
    if n_train < 1:
        raise DataError(f"need at least 3 events to split, got {n}")

    events = [
        event if event.event_id is not None else event.model_copy(update={"event_id": index})
        for index, event in enumerate(events)
    ]
    order = np.random.default_rng(seed).permutation(n)
    shuffled = [events[i] for i in order]
    return DatasetSplits(
        train=shuffled[:n_train],
        validation=shuffled[n_train : n_train + n_validation],
        test=shuffled[n_train + n_validation :],
    )


def stack_samples(samples: Sequence[NowcastSample]) -> tuple[np.ndarray, np.ndarray]:
    """Stack samples into history ``[B, T_in, H, W]`` and target ``[B, T_out, H, W]`` arrays."""
    if not samples:
        raise DataError("cannot stack an empty list of samples")
    history = np.stack([sample.history.frames for sample in samples])
    target = np.stack([sample.target.frames for sample in samples])
    return history, target


def fingerprint(events: Sequence[FrameSequence]) -> str:
    """SHA-256 over event ids, shapes and frame bytes, in order."""
    digest = hashlib.sha256()
    for event in events:
        frames = np.ascontiguousarray(event.frames, dtype="<f8")
        digest.update(f"{event.event_id}:{frames.shape}:{event.step_minutes};".encode("ascii"))
        digest.update(frames.tobytes())
    return digest.hexdigest()
