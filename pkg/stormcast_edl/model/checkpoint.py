"""Checkpoint persistence: named float64 arrays plus the model configuration in one ``.npz``."""

import io
import json
import logging
from pathlib import Path
from typing import Any, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from stormcast_edl.errors import CheckpointError
from stormcast_edl.model.models import ModelConfig
from stormcast_edl.model.nowcaster import NowcastModel
from stormcast_edl.utils import atomic_write_bytes

logger = logging.getLogger(__name__)

PARAM_PREFIX = "param:"
META_KEY = "__meta__"
FORMAT_VERSION = 1


class Checkpoint(BaseModel):
    """Trained (or initial) weights together with everything needed to rebuild the model."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    config: ModelConfig
    parameters: dict[str, np.ndarray]
    step: int = Field(0, ge=0, description="Optimisation steps taken")
    seed: int = Field(0, description="Initialization seed")
    rng_state: Optional[dict[str, Any]] = Field(None, description="Training generator state")
    variant: Optional[str] = None

    @classmethod
    def from_model(
        cls,
        model: NowcastModel,
        step: int = 0,
        rng_state: Optional[dict[str, Any]] = None,
        variant: Optional[str] = None,
    ) -> "Checkpoint":
        return cls(
            config=model.config,
            parameters=model.state_dict(),
            step=step,
            seed=model.seed,
            rng_state=rng_state,
            variant=variant,
        )

    def to_model(self) -> NowcastModel:
        model = NowcastModel(self.config, seed=self.seed)
        model.load_state_dict(self.parameters, strict=True)
        return model

    def parameter_count(self) -> int:
        return int(sum(array.size for array in self.parameters.values()))


def _meta(checkpoint: Checkpoint) -> dict[str, Any]:
    return {
        "format_version": FORMAT_VERSION,
        "config": checkpoint.config.model_dump(),
        "step": checkpoint.step,
        "seed": checkpoint.seed,
        "rng_state": checkpoint.rng_state,
        "variant": checkpoint.variant,
        "shapes": {name: list(array.shape) for name, array in checkpoint.parameters.items()},
    }


def save_checkpoint(checkpoint: Checkpoint, path: Union[str, Path]) -> Path:
    """
    Write a checkpoint atomically.

    Arrays are stored as little-endian float64 under ``param:<name>``; the
    configuration and training state are JSON under ``__meta__``.
    """
    arrays = {
        f"{PARAM_PREFIX}{name}": np.ascontiguousarray(array, dtype="<f8")
        for name, array in checkpoint.parameters.items()
    }
    meta = json.dumps(_meta(checkpoint), sort_keys=True).encode("utf-8")
    arrays[META_KEY] = np.frombuffer(meta, dtype=np.uint8)
    buffer = io.BytesIO()
    np.savez(buffer, **arrays)
    target = atomic_write_bytes(path, buffer.getvalue())
    logger.info(f"Saved checkpoint with {checkpoint.parameter_count()} parameters to {target}")
    return target


def load_checkpoint(path: Union[str, Path]) -> Checkpoint:
    """Read a checkpoint written by :func:`save_checkpoint`."""
    path = Path(path)
    if not path.is_file():
        raise CheckpointError(f"Checkpoint not found: {path}")
    try:
        with np.load(path, allow_pickle=False) as archive:
            if META_KEY not in archive.files:
                raise CheckpointError(f"{path} has no metadata record")
            meta = json.loads(archive[META_KEY].tobytes().decode("utf-8"))
            parameters = {
                key[len(PARAM_PREFIX) :]: np.array(archive[key], dtype=np.float64)
                for key in archive.files
                if key.startswith(PARAM_PREFIX)
            }
    except CheckpointError:
        raise
    except (OSError, ValueError, KeyError) as e:
        raise CheckpointError(f"Cannot read checkpoint {path}: {e}") from e

    if meta.get("format_version") != FORMAT_VERSION:
        raise CheckpointError(f"{path} has unsupported format version {meta.get('format_version')}")
    for name, shape in meta.get("shapes", {}).items():
        if name not in parameters or list(parameters[name].shape) != shape:
            raise CheckpointError(
                f"{path}: array {name} is missing or does not match its recorded shape"
            )
    try:
        return Checkpoint(
            config=ModelConfig.model_validate(meta["config"]),
            parameters=parameters,
            step=meta["step"],
            seed=meta["seed"],
            rng_state=meta.get("rng_state"),
            variant=meta.get("variant"),
        )
    except (ValidationError, KeyError) as e:
        raise CheckpointError(f"{path} has invalid metadata: {e}") from e
