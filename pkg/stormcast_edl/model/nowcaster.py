"""The spatiotemporal nowcasting network."""

import logging
from typing import Any, Mapping, Optional, Union

import numpy as np

from stormcast_edl.errors import CheckpointError, ShapeError
from stormcast_edl.evidential import NIGParamMap, constrain
from stormcast_edl.model.layers import (
    CuboidBlock,
    Decoder,
    Embedding,
    Layer,
    positional_encoding,
)
from stormcast_edl.model.models import BlockState, ModelConfig
from stormcast_edl.numerics import Tensor, as_tensor, reshape

logger = logging.getLogger(__name__)


def _frames(x: Any) -> np.ndarray:
    raw = getattr(x, "frames", x.data if isinstance(x, Tensor) else x)
    return np.asarray(raw, dtype=np.float64)


class NowcastModel(Layer):
    """
    Embedding, temporal positional encoding, cuboid attention blocks and a linear decoder.

    Inputs are ``[in_steps, H, W]`` sequences or ``[B, in_steps, H, W]`` batches.
    The deterministic head returns frames ``[B, out_steps, H, W]``; the
    evidential head returns raw outputs ``[B, 4, out_steps, H, W]`` for
    :func:`stormcast_edl.evidential.constrain`. Unbatched inputs give unbatched
    outputs.
    """

    def __init__(self, config: ModelConfig, seed: int = 0):
        self.config = config
        self.seed = seed
        rng = np.random.default_rng(seed)
        self.embedding = Embedding(config.d_model, rng)
        self.blocks = [
            CuboidBlock(
                config.d_model,
                config.d_k,
                config.ffn_width,
                rng,
                dropout_rate=config.dropout_rate,
                axis_window=config.axis_window,
                layer_norm_eps=config.layer_norm_eps,
            )
            for _ in range(config.n_blocks)
        ]
        self.decoder = Decoder(config.d_model, config.out_steps, config.out_channels, rng)
        self._positions = positional_encoding(
            config.in_steps, config.frame_h, config.frame_w, config.d_model
        )
        self._dropout_rng = np.random.default_rng([seed, 1])
        for name, param in self.named_parameters():
            param.name = name

    # Pipeline stages

    def _batch(self, x: Any) -> tuple[Tensor, bool]:
        frames = x if isinstance(x, Tensor) else Tensor(_frames(x))
        squeeze = frames.ndim == 3
        if squeeze:
            frames = reshape(frames, (1,) + frames.shape)
        expected = (self.config.in_steps, self.config.frame_h, self.config.frame_w)
        if frames.ndim != 4 or frames.shape[1:] != expected:
            raise ShapeError(
                f"model expects input frames shaped "
                f"[batch, {expected[0]}, {expected[1]}, {expected[2]}], "
                f"got {frames.shape}"
            )
        return frames, squeeze

    def embed(self, x: Any) -> Tensor:
        """Lift intensities to features, ``[B, T, H, W, d_model]`` (unbatched for one sequence)."""
        frames, squeeze = self._batch(x)
        embedded = self.embedding(frames)
        return reshape(embedded, embedded.shape[1:]) if squeeze else embedded

    def encode_input(self, frames: Tensor) -> Tensor:
        return self.embedding(frames) + self._positions

    def axis_attention(self, h: Tensor, axis: Union[str, int], block: int = 0) -> Tensor:
        return self.blocks[block].attention.axis_attention(h, axis)

    def cuboid_block(
        self, h: Tensor, block: int = 0, rng: Optional[np.random.Generator] = None
    ) -> Tensor:
        return self.blocks[block](h, rng)

    def trace_block(
        self, h: Tensor, block: int = 0, rng: Optional[np.random.Generator] = None
    ) -> BlockState:
        return self.blocks[block].run(h, rng)

    def decode(self, h: Tensor) -> Tensor:
        raw = self.decoder(h)
        if self.config.head == "deterministic":
            return reshape(raw, (raw.shape[0],) + raw.shape[2:])
        return raw

    def forward(
        self,
        x: Any,
        dropout_active: bool = False,
        rng: Optional[np.random.Generator] = None,
    ) -> Tensor:
        """
        Run the full pipeline.

        Args:
            x: Input frames (FrameSequence, array or Tensor)
            dropout_active: Sample fresh dropout masks (training and MC-dropout inference)
            rng: Source of dropout masks; the model's own generator when omitted

        Returns:
            Deterministic frames or raw evidential outputs
        """
        frames, squeeze = self._batch(x)
        mask_rng = (rng if rng is not None else self._dropout_rng) if dropout_active else None
        h = self.encode_input(frames)
        for block in self.blocks:
            h = block(h, mask_rng)
        out = self.decode(h)
        return reshape(out, out.shape[1:]) if squeeze else out

    __call__ = forward

    def evidential_params(
        self, x: Any, dropout_active: bool = False, rng: Optional[np.random.Generator] = None
    ) -> NIGParamMap:
        if self.config.head != "evidential":
            raise ShapeError("evidential_params needs a model with the evidential head")
        return constrain(self.forward(x, dropout_active, rng))

    def point_forecast(self, x: Any) -> np.ndarray:
        """Deterministic frames or γ, clamped to [0, 1]."""
        if self.config.head == "evidential":
            values = self.evidential_params(x).gamma.numpy()
        else:
            values = self.forward(x).numpy()
        return np.clip(values, 0.0, 1.0)

    # Parameters

    def parameter_count(self) -> int:
        return sum(param.size for param in self.parameters())

    def state_dict(self) -> dict[str, np.ndarray]:
        return {name: param.numpy() for name, param in self.named_parameters()}

    def load_state_dict(self, state: Mapping[str, Any], strict: bool = True) -> None:
        """
        Copy named arrays into the parameters.

        With ``strict`` every parameter must be present and no unknown name may
        appear; shapes must always match.
        """
        params = dict(self.named_parameters())
        missing = sorted(set(params) - set(state))
        unexpected = sorted(set(state) - set(params))
        if strict and (missing or unexpected):
            raise CheckpointError(
                f"state does not match the model (missing: {missing or 'none'}, "
                f"unexpected: {unexpected or 'none'})"
            )
        for name, values in state.items():
            if name not in params:
                continue
            array = np.asarray(as_tensor(values).data)
            if array.shape != params[name].shape:
                raise CheckpointError(
                    f"parameter {name} has shape {params[name].shape}, state holds {array.shape}"
                )
            params[name].assign(array)
