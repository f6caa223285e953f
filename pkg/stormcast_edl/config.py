"""Configuration management for the nowcasting workbench."""

import logging
import os
from typing import Optional

from dotenv import load_dotenv

from stormcast_edl.errors import ConfigError

# Load environment variables from .env file
load_dotenv()

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


def _int_env(name: str, default: int) -> int:
    raw: Optional[str] = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        return int(raw)
    except ValueError:
        logging.getLogger(__name__).warning(
            f"Ignoring non-integer {name}={raw!r}, using default {default}"
        )
        return default


class Config:
    """Configuration class for environment variables."""

    # Output layout
    OUTPUT_DIR: str = os.getenv("STORMCAST_OUTPUT_DIR", "runs")
    LOG_LEVEL: str = os.getenv("STORMCAST_LOG_LEVEL", "INFO").upper()

    # Reproducibility
    DEFAULT_SEED: int = _int_env("STORMCAST_SEED", 0)

    # Inference cost profiling
    PROFILE_REPEATS: int = _int_env("STORMCAST_PROFILE_REPEATS", 30)
    PROFILE_WARMUP: int = _int_env("STORMCAST_PROFILE_WARMUP", 5)

    @classmethod
    def validate(cls) -> None:
        """Validate that the environment-level configuration is usable."""
        if cls.LOG_LEVEL not in LOG_LEVELS:
            raise ConfigError(
                f"STORMCAST_LOG_LEVEL must be one of {', '.join(LOG_LEVELS)}, got {cls.LOG_LEVEL}"
            )
        if not cls.OUTPUT_DIR:
            raise ConfigError("STORMCAST_OUTPUT_DIR must not be empty")
        if cls.PROFILE_REPEATS < 1:
            raise ConfigError(
                f"STORMCAST_PROFILE_REPEATS must be at least 1, got {cls.PROFILE_REPEATS}"
            )
        if cls.PROFILE_WARMUP < 0:
            raise ConfigError("STORMCAST_PROFILE_WARMUP must be non-negative")


# Global config instance
config = Config()
