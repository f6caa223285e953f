"""Loading, overriding and persisting experiment configurations."""

import json
import logging
from pathlib import Path
from typing import Optional, Union

from pydantic import ValidationError

from stormcast_edl.errors import ConfigError
from stormcast_edl.harness.models import ExperimentConfig
from stormcast_edl.utils import atomic_write_json

logger = logging.getLogger(__name__)

RESOLVED_CONFIG_NAME = "resolved_config.json"


def load_config(path: Optional[Union[str, Path]] = None) -> ExperimentConfig:
    """
    Read an experiment configuration from JSON, or return the defaults.

    Args:
        path: JSON file; defaults are used when omitted

    Returns:
        Validated configuration
    """
    if path is None:
        return ExperimentConfig()
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"Config file not found: {path}")
    try:
        document = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise ConfigError(f"Config file {path} is not valid JSON: {e}") from e
    return validate_config(document, source=str(path))


def validate_config(document: dict, source: str = "config") -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(document)
    except ValidationError as e:
        problems = "; ".join(
            f"{'.'.join(str(part) for part in error['loc'])}: {error['msg']}"
            for error in e.errors()
        )
        raise ConfigError(f"Invalid {source}: {problems}") from e


def apply_overrides(
    config: ExperimentConfig,
    seed: Optional[int] = None,
    out: Optional[str] = None,
    variant: Optional[str] = None,
) -> ExperimentConfig:
    """Return a copy with command-line overrides applied and re-validated."""
    document = config.model_dump()
    if seed is not None:
        document["training"]["seed"] = seed
    if out is not None:
        document["output_dir"] = out
    if variant is not None:
        document["variant"] = variant
    return validate_config(document, source="overridden config")


def run_dir(config: ExperimentConfig) -> Path:
    """Directory holding this variant's checkpoints and reports."""
    return Path(config.output_dir) / config.variant


def write_resolved_config(config: ExperimentConfig, directory: Union[str, Path]) -> Path:
    path = atomic_write_json(Path(directory) / RESOLVED_CONFIG_NAME, config.model_dump())
    logger.debug(f"Wrote resolved config to {path}")
    return path
