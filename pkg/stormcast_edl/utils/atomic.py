"""Atomic file writes: write a temporary sibling, then rename over the target."""

import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Any, Union

logger = logging.getLogger(__name__)

PathLike = Union[str, os.PathLike]


def atomic_write_bytes(path: PathLike, payload: bytes) -> Path:
    """
    Write ``payload`` to ``path`` so readers never observe a partial file.

    Args:
        path: Destination file; parent directories are created
        payload: Bytes to write

    Returns:
        The destination as a Path
    """
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{target.name}.", suffix=".tmp", dir=target.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp_name, target)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    logger.debug(f"Wrote {len(payload)} bytes to {target}")
    return target


def atomic_write_text(path: PathLike, text: str) -> Path:
    return atomic_write_bytes(path, text.encode("utf-8"))


def atomic_write_json(path: PathLike, document: Any) -> Path:
    """Serialize ``document`` as indented JSON; NaN and infinities are written as bare tokens."""
    return atomic_write_text(path, json.dumps(document, indent=2, sort_keys=True) + "\n")
