"""Reader and writer for raw frame files.

Layout: an ASCII header line ``EVST1 <n_events> <T> <H> <W> <max_value>``
terminated by a newline, followed by little-endian unsigned 16-bit
intensities in event-major, frame-major, row-major order.
"""

import logging
from pathlib import Path
from typing import Sequence, Union

import numpy as np
from pydantic import BaseModel, Field

from stormcast_edl.data.models import FrameSequence
from stormcast_edl.errors import DataError, IngestionError
from stormcast_edl.utils import atomic_write_bytes

logger = logging.getLogger(__name__)

MAX_HEADER_BYTES = 256


class RawLayout(BaseModel):
    """How a raw frame file is laid out and interpreted."""

    magic: str = "EVST1"
    dtype: str = Field("<u2", description="numpy dtype of the stored intensities")
    step_minutes: float = Field(5.0, gt=0.0)


def _parse_header(blob: bytes, layout: RawLayout) -> tuple[int, list[int]]:
    newline = blob.find(b"\n", 0, MAX_HEADER_BYTES)
    if newline < 0:
        raise IngestionError(f"no header line within the first {MAX_HEADER_BYTES} bytes", 0)
    try:
        header = blob[:newline].decode("ascii")
    except UnicodeDecodeError as e:
        raise IngestionError("header is not ASCII text", e.start) from e

    fields = header.split(" ")
    if fields[0] != layout.magic:
        raise IngestionError(f"expected magic {layout.magic!r}, found {fields[0]!r}", 0)
    if len(fields) != 6:
        raise IngestionError(f"header needs 6 fields, found {len(fields)}", 0)

    values = []
    offset = len(fields[0]) + 1
    for name, text in zip(("n_events", "T", "H", "W", "max_value"), fields[1:]):
        try:
            value = int(text)
        except ValueError:
            raise IngestionError(
                f"header field {name} is not an integer: {text!r}", offset
            ) from None
        if value <= 0:
            raise IngestionError(f"header field {name} must be positive, got {value}", offset)
        values.append(value)
        offset += len(text) + 1

    if values[4] > np.iinfo(np.dtype(layout.dtype)).max:
        raise IngestionError(
            f"max_value {values[4]} does not fit {layout.dtype}", offset - len(fields[5]) - 1
        )
    return newline + 1, values


def ingest(path: Union[str, Path], layout: RawLayout = RawLayout()) -> list[FrameSequence]:
    """
    Read a raw frame file and normalize intensities to [0, 1].

    Args:
        path: File to read
        layout: Header magic, stored dtype and frame interval

    Returns:
        One frame sequence per stored event
    """
    try:
        blob = Path(path).read_bytes()
    except OSError as e:
        raise DataError(f"Cannot read raw frame file {path}: {e}") from e

    data_start, (n_events, n_frames, height, width, max_value) = _parse_header(blob, layout)
    dtype = np.dtype(layout.dtype)
    count = n_events * n_frames * height * width
    expected = count * dtype.itemsize
    actual = len(blob) - data_start
    if actual != expected:
        raise IngestionError(
            f"payload holds {actual} bytes but the header implies {expected}",
            data_start + min(actual, expected),
        )

    raw = np.frombuffer(blob, dtype=dtype, count=count, offset=data_start)
    above = np.flatnonzero(raw > max_value)
    if above.size:
        first = int(above[0])
        raise IngestionError(
            f"value {int(raw[first])} exceeds declared max {max_value}",
            data_start + first * dtype.itemsize,
        )

    frames = raw.astype(np.float64).reshape(n_events, n_frames, height, width) / max_value
    logger.info(f"Ingested {n_events} events of {n_frames} frames ({height}x{width}) from {path}")
    return [
        FrameSequence(frames=frames[i], step_minutes=layout.step_minutes, event_id=i)
        for i in range(n_events)
    ]


def export(
    events: Sequence[FrameSequence],
    path: Union[str, Path],
    max_value: int = 255,
    layout: RawLayout = RawLayout(),
) -> Path:
    """
    Write events to a raw frame file, quantizing intensities to ``round(x * max_value)``.

    All events must share frame count and size.
    """
    if not events:
        raise DataError("cannot export an empty list of events")
    shape = events[0].frames.shape
    if any(event.frames.shape != shape for event in events):
        raise DataError("all exported events must share frame count and size")
    if not 0 < max_value <= np.iinfo(np.dtype(layout.dtype)).max:
        raise DataError(f"max_value {max_value} does not fit {layout.dtype}")

    stacked = np.stack([event.frames for event in events])
    quantized = np.rint(stacked * max_value).astype(layout.dtype)
    header = f"{layout.magic} {len(events)} {shape[0]} {shape[1]} {shape[2]} {max_value}\n"
    target = atomic_write_bytes(path, header.encode("ascii") + quantized.tobytes(order="C"))
    logger.info(f"Exported {len(events)} events to {target}")
    return target
