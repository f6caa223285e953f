"""Weight transfer from an MSE-pretrained model into an evidential model."""

import logging
from typing import Union

import numpy as np

from stormcast_edl.errors import TransferError
from stormcast_edl.evidential.head import NIG_CHANNELS
from stormcast_edl.model import Checkpoint, ModelConfig, NowcastModel

logger = logging.getLogger(__name__)

HEAD_PREFIX = "decoder."
HEAD_INIT_SCALE = 0.01


def pretrain_transfer(
    pretrained: Union[Checkpoint, NowcastModel],
    edl_config: ModelConfig,
    seed: int = 0,
) -> NowcastModel:
    """
    Build an evidential model whose backbone is copied from a deterministic one.

    The γ channel of the evidential read-out (columns ``j * 4``) takes the
    pretrained read-out weights and biases for lead ``j``; the υ, α and β
    columns get small random weights and zero biases.

    Args:
        pretrained: Deterministic-head checkpoint or model
        edl_config: Configuration of the evidential model
        seed: Seed of the fresh head weights

    Returns:
        Evidential-head model ready for fine-tuning
    """
    source = pretrained.to_model() if isinstance(pretrained, Checkpoint) else pretrained
    if source.config.head != "deterministic":
        raise TransferError("pretrained model must use the deterministic head")
    if edl_config.head != "evidential":
        raise TransferError("target configuration must use the evidential head")

    target = NowcastModel(edl_config, seed=seed)
    source_state = source.state_dict()
    target_params = dict(target.named_parameters())

    mismatched = sorted(
        name
        for name in set(source_state) | set(target_params)
        if not name.startswith(HEAD_PREFIX)
        and (
            name not in source_state
            or name not in target_params
            or source_state[name].shape != target_params[name].shape
        )
    )
    head_width = edl_config.d_model, edl_config.out_steps
    if source_state.get("decoder.projection.weight", np.empty(0)).shape != head_width:
        mismatched.append("decoder.projection.weight")
    if mismatched:
        raise TransferError("backbone arrays do not match", mismatched)

    for name, values in source_state.items():
        if not name.startswith(HEAD_PREFIX):
            target_params[name].assign(values)

    rng = np.random.default_rng([seed, 2])
    channels = len(NIG_CHANNELS)
    width = edl_config.out_steps * channels
    weight = rng.normal(0.0, HEAD_INIT_SCALE, size=(edl_config.d_model, width))
    bias = np.zeros(width)
    weight[:, 0::channels] = source_state["decoder.projection.weight"]
    bias[0::channels] = source_state["decoder.projection.bias"]
    target_params["decoder.projection.weight"].assign(weight)
    target_params["decoder.projection.bias"].assign(bias)

    logger.info(f"Transferred {len(source_state) - 2} backbone arrays into the evidential model")
    return target
