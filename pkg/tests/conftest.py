"""Shared fixtures: a micro model configuration and a tiny synthetic dataset."""

import numpy as np
import pytest

from stormcast_edl.data import SyntheticStormConfig, generate
from stormcast_edl.harness import ExperimentConfig
from stormcast_edl.model import ModelConfig


@pytest.fixture
def micro_config() -> ModelConfig:
    return ModelConfig(
        d_model=8,
        n_blocks=1,
        d_k=4,
        ffn_width=16,
        in_steps=4,
        out_steps=3,
        frame_h=8,
        frame_w=8,
    )


@pytest.fixture
def tiny_synthetic() -> SyntheticStormConfig:
    return SyntheticStormConfig(n_events=12, n_frames=7, height=8, width=8, seed=3)


@pytest.fixture
def tiny_events(tiny_synthetic):
    return generate(tiny_synthetic)


@pytest.fixture
def tiny_experiment(tmp_path, micro_config, tiny_synthetic) -> ExperimentConfig:
    return ExperimentConfig.model_validate(
        {
            "name": "tiny",
            "variant": "edl",
            "data": {
                "synthetic": tiny_synthetic.model_dump(),
                "split_fractions": [0.5, 0.25, 0.25],
                "eval_stride": 3,
            },
            "model": micro_config.model_dump(),
            "training": {"epochs": 1, "batch_size": 4, "seed": 0, "patience": 0},
            "evaluation": {
                "n_passes": 3,
                "map_leads": [1, 3],
                "profile_repeats": 2,
                "profile_warmup": 0,
            },
            "ensemble": {"n_members": 2},
            "output_dir": str(tmp_path / "runs"),
        }
    )


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
