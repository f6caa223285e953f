"""Spatiotemporal cuboid-attention nowcasting network and its checkpoints."""

from stormcast_edl.model.checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from stormcast_edl.model.layers import (
    CuboidAttention,
    CuboidBlock,
    Decoder,
    Embedding,
    FeedForward,
    Layer,
    LayerNorm,
    Linear,
    positional_encoding,
)
from stormcast_edl.model.models import BlockState, ModelConfig
from stormcast_edl.model.nowcaster import NowcastModel

__all__ = [
    "BlockState",
    "Checkpoint",
    "CuboidAttention",
    "CuboidBlock",
    "Decoder",
    "Embedding",
    "FeedForward",
    "Layer",
    "LayerNorm",
    "Linear",
    "ModelConfig",
    "NowcastModel",
    "load_checkpoint",
    "positional_encoding",
    "save_checkpoint",
]
