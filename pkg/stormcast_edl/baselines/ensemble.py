"""Deep ensembles of independently initialized deterministic models."""

import json
import logging
from pathlib import Path
from typing import Any, Optional, Sequence, Union

from pydantic import ValidationError

from stormcast_edl.baselines.models import EnsembleManifest, EnsembleSpec, SampleUQ
from stormcast_edl.errors import CheckpointError, ConfigError
from stormcast_edl.model import Checkpoint, NowcastModel, load_checkpoint, save_checkpoint
from stormcast_edl.utils import atomic_write_json

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"


def _check_members(models: Sequence[NowcastModel]) -> None:
    if len(models) < 2:
        raise ConfigError(f"an ensemble needs at least 2 members, got {len(models)}")
    reference = models[0].config
    for model in models:
        if model.config.head != "deterministic":
            raise ConfigError("ensemble members must use the deterministic head")
        if model.config.backbone_signature() != reference.backbone_signature():
            raise ConfigError("ensemble members must share one model configuration")


def ensemble_predict(models: Sequence[NowcastModel], x: Any, keep_members: bool = True) -> SampleUQ:
    """
    Mean and population variance of the members' forecasts.

    Args:
        models: Trained deterministic-head models sharing one configuration
        x: Input frames accepted by ``NowcastModel.forward``
        keep_members: Retain each member's forecast

    Returns:
        SampleUQ per pixel and lead step
    """
    _check_members(models)
    return SampleUQ.from_members([model.forward(x).numpy() for model in models], keep_members)


class DeepEnsemble:
    """A list of member models with directory persistence."""

    def __init__(self, members: Sequence[NowcastModel]):
        _check_members(members)
        self.members = list(members)

    @classmethod
    def initialize(cls, config, spec: EnsembleSpec, base_seed: int = 0) -> "DeepEnsemble":
        return cls([NowcastModel(config, seed=seed) for seed in spec.seeds(base_seed)])

    @property
    def spec(self) -> EnsembleSpec:
        return EnsembleSpec(
            n_members=len(self.members), member_seeds=[m.seed for m in self.members]
        )

    @property
    def config(self):
        return self.members[0].config

    def predict(self, x: Any, keep_members: bool = True) -> SampleUQ:
        return ensemble_predict(self.members, x, keep_members)

    def parameter_count(self) -> int:
        return sum(member.parameter_count() for member in self.members)

    def save(
        self,
        directory: Union[str, Path],
        step: int = 0,
        rng_states: Optional[Sequence[Optional[dict[str, Any]]]] = None,
    ) -> Path:
        """Write one checkpoint per member plus ``manifest.json`` listing seeds and files."""
        directory = Path(directory)
        if rng_states is not None and len(rng_states) != len(self.members):
            raise CheckpointError(
                f"{len(rng_states)} generator states for {len(self.members)} ensemble members"
            )
        files = []
        for index, member in enumerate(self.members):
            name = f"member_{index:02d}.npz"
            state = rng_states[index] if rng_states is not None else None
            checkpoint = Checkpoint.from_model(
                member, step=step, rng_state=state, variant="ensemble"
            )
            save_checkpoint(checkpoint, directory / name)
            files.append(name)
        manifest = EnsembleManifest(
            n_members=len(self.members),
            seeds=[member.seed for member in self.members],
            files=files,
            config=self.config,
        )
        atomic_write_json(directory / MANIFEST_NAME, manifest.model_dump())
        logger.info(f"Saved {len(files)}-member ensemble to {directory}")
        return directory

    @classmethod
    def load(cls, directory: Union[str, Path]) -> "DeepEnsemble":
        directory = Path(directory)
        manifest_path = directory / MANIFEST_NAME
        if not manifest_path.is_file():
            raise CheckpointError(f"Ensemble manifest not found: {manifest_path}")
        try:
            manifest = EnsembleManifest.model_validate(json.loads(manifest_path.read_text()))
        except (ValidationError, json.JSONDecodeError) as e:
            raise CheckpointError(f"Invalid ensemble manifest {manifest_path}: {e}") from e
        members = [load_checkpoint(directory / name).to_model() for name in manifest.files]
        if [member.seed for member in members] != manifest.seeds:
            raise CheckpointError(f"member seeds in {directory} do not match the manifest")
        return cls(members)
