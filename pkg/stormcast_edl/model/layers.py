"""Building blocks of the cuboid-attention encoder-decoder.

Activations are laid out ``[batch, T, H, W, features]`` throughout.
"""

import math
from typing import Iterator, Optional, Union

import numpy as np

from stormcast_edl.errors import ShapeError
from stormcast_edl.model.models import BlockState
from stormcast_edl.numerics import (
    Tensor,
    dropout,
    gelu,
    getitem,
    layer_norm,
    matmul,
    reshape,
    softmax,
    transpose,
)

AXES = {"T": 1, "H": 2, "W": 3}


class Layer:
    """Base class: parameters are discovered from attributes in definition order."""

    def named_parameters(self, prefix: str = "") -> Iterator[tuple[str, Tensor]]:
        for attr, value in vars(self).items():
            name = f"{prefix}{attr}"
            if isinstance(value, Tensor) and value.requires_grad:
                yield name, value
            elif isinstance(value, Layer):
                yield from value.named_parameters(f"{name}.")
            elif isinstance(value, list):
                for index, item in enumerate(value):
                    if isinstance(item, Layer):
                        yield from item.named_parameters(f"{name}.{index}.")

    def parameters(self) -> list[Tensor]:
        return [param for _, param in self.named_parameters()]


def _weight(rng: np.random.Generator, fan_in: int, fan_out: int) -> Tensor:
    weight = rng.normal(0.0, 1.0 / math.sqrt(fan_in), size=(fan_in, fan_out))
    return Tensor(weight, requires_grad=True)


class Linear(Layer):
    """Affine map over the last axis."""

    def __init__(self, in_features: int, out_features: int, rng: np.random.Generator):
        self.weight = _weight(rng, in_features, out_features)
        self.bias = Tensor(np.zeros(out_features), requires_grad=True)

    def __call__(self, x: Tensor) -> Tensor:
        return matmul(x, self.weight) + self.bias


class LayerNorm(Layer):
    def __init__(self, features: int, eps: float):
        self.gain = Tensor(np.ones(features), requires_grad=True)
        self.bias = Tensor(np.zeros(features), requires_grad=True)
        self.eps = eps

    def __call__(self, x: Tensor) -> Tensor:
        return layer_norm(x, self.gain, self.bias, self.eps)


class FeedForward(Layer):
    """Two linear maps with an exact GELU between them."""

    def __init__(self, d_model: int, hidden: int, rng: np.random.Generator):
        self.expand = Linear(d_model, hidden, rng)
        self.contract = Linear(hidden, d_model, rng)

    def __call__(self, x: Tensor) -> Tensor:
        return self.contract(gelu(self.expand(x)))


class Embedding(Layer):
    """Per-cell affine lift of the scalar intensity to ``d_model`` features."""

    def __init__(self, d_model: int, rng: np.random.Generator):
        self.weight = _weight(rng, 1, d_model)
        self.bias = Tensor(np.zeros(d_model), requires_grad=True)

    def __call__(self, frames: Tensor) -> Tensor:
        return matmul(reshape(frames, frames.shape + (1,)), self.weight) + self.bias


def positional_encoding(steps: int, height: int, width: int, d_model: int) -> Tensor:
    """
    Sinusoidal encoding of the temporal position, broadcast over the spatial grid.

    Channel ``2i`` holds ``sin(pos / 10000^(2i/d_model))`` and channel ``2i+1``
    the matching cosine.

    Returns:
        Constant tensor of shape ``[steps, height, width, d_model]``
    """
    if d_model % 2:
        raise ShapeError(f"positional encoding needs an even d_model, got {d_model}")
    positions = np.arange(steps, dtype=np.float64)[:, None]
    rates = 10000.0 ** (np.arange(0, d_model, 2, dtype=np.float64) / d_model)
    angles = positions / rates
    table = np.empty((steps, d_model), dtype=np.float64)
    table[:, 0::2] = np.sin(angles)
    table[:, 1::2] = np.cos(angles)
    return Tensor(np.broadcast_to(table[:, None, None, :], (steps, height, width, d_model)))


def _axis_index(axis: Union[str, int]) -> int:
    if isinstance(axis, str):
        if axis not in AXES:
            raise ShapeError(f"unknown attention axis {axis!r}, expected one of {sorted(AXES)}")
        return AXES[axis]
    if axis not in AXES.values():
        raise ShapeError(f"attention axis must be 1, 2 or 3, got {axis}")
    return axis


class CuboidAttention(Layer):
    """Attention factorized along the temporal, height and width axes, averaged."""

    def __init__(
        self,
        d_model: int,
        d_k: int,
        rng: np.random.Generator,
        axis_window: Optional[int] = None,
    ):
        self.query = Linear(d_model, d_k, rng)
        self.key = Linear(d_model, d_k, rng)
        self.value = Linear(d_model, d_k, rng)
        self.output = Linear(d_k, d_model, rng)
        self.d_k = d_k
        self.axis_window = axis_window

    def project(self, h: Tensor) -> tuple[Tensor, Tensor, Tensor]:
        return self.query(h), self.key(h), self.value(h)

    def attend(self, q: Tensor, k: Tensor, v: Tensor, axis: Union[str, int]) -> Tensor:
        """
        Scaled dot-product attention along one axis of ``[B, T, H, W, d_k]`` operands.

        The attended axis is moved next to the feature axis so every other axis
        acts as a batch axis. With ``axis_window`` set, the height and width axes
        are cut into independent windows of that length.
        """
        axis = _axis_index(axis)
        others = [i for i in AXES.values() if i != axis]
        order = (0, *others, axis, 4)
        inverse = tuple(int(i) for i in np.argsort(order))
        q, k, v = (transpose(t, order) for t in (q, k, v))

        extent = q.shape[3]
        window = self.axis_window if axis != AXES["T"] else None
        if window is not None and window < extent:
            if extent % window:
                raise ShapeError(f"axis extent {extent} is not divisible by axis_window {window}")
            blocked = q.shape[:3] + (extent // window, window, self.d_k)
            q, k, v = (reshape(t, blocked) for t in (q, k, v))

        swap = tuple(range(k.ndim - 2)) + (k.ndim - 1, k.ndim - 2)
        scores = matmul(q, transpose(k, swap)) * (1.0 / math.sqrt(self.d_k))
        attended = matmul(softmax(scores, axis=-1), v)
        if attended.ndim == 6:
            attended = reshape(attended, attended.shape[:3] + (extent, self.d_k))
        return transpose(attended, inverse)

    def axis_attention(self, h: Tensor, axis: Union[str, int]) -> Tensor:
        """Attention along one axis, before the output projection; ``[B, T, H, W, d_k]``."""
        return self.attend(*self.project(h), axis)

    def __call__(self, h: Tensor) -> Tensor:
        q, k, v = self.project(h)
        total = None
        for axis in AXES.values():
            attended = self.attend(q, k, v, axis)
            total = attended if total is None else total + attended
        return self.output(total * (1.0 / len(AXES)))


class CuboidBlock(Layer):
    """Tri-axis attention and a feed-forward sublayer, each with a residual and layer norm."""

    def __init__(
        self,
        d_model: int,
        d_k: int,
        ffn_width: int,
        rng: np.random.Generator,
        dropout_rate: float = 0.0,
        axis_window: Optional[int] = None,
        layer_norm_eps: float = 1e-10,
    ):
        self.attention = CuboidAttention(d_model, d_k, rng, axis_window)
        self.attention_norm = LayerNorm(d_model, layer_norm_eps)
        self.ffn = FeedForward(d_model, ffn_width, rng)
        self.ffn_norm = LayerNorm(d_model, layer_norm_eps)
        self.dropout_rate = dropout_rate

    def run(self, h: Tensor, rng: Optional[np.random.Generator] = None) -> BlockState:
        """Apply the block, returning every intermediate activation."""
        attended = dropout(self.attention(h), self.dropout_rate, rng)
        residual = self.attention_norm(h + attended)
        transformed = dropout(self.ffn(residual), self.dropout_rate, rng)
        output = self.ffn_norm(residual + transformed)
        return BlockState(block_input=h, attention=attended, residual=residual, output=output)

    def __call__(self, h: Tensor, rng: Optional[np.random.Generator] = None) -> Tensor:
        return self.run(h, rng).output


class Decoder(Layer):
    """
    Linear read-out of the final temporal slice into ``out_steps × channels`` values per cell.

    Output column ``j * channels + c`` holds lead step ``j`` of channel ``c``.
    """

    def __init__(self, d_model: int, out_steps: int, channels: int, rng: np.random.Generator):
        self.projection = Linear(d_model, out_steps * channels, rng)
        self.out_steps = out_steps
        self.channels = channels

    def __call__(self, h: Tensor) -> Tensor:
        """Map ``[B, T, H, W, d]`` to ``[B, channels, out_steps, H, W]``."""
        last = getitem(h, (slice(None), -1))
        batch, height, width, _ = last.shape
        shape = (batch, height, width, self.out_steps, self.channels)
        columns = reshape(self.projection(last), shape)
        return transpose(columns, (0, 4, 3, 1, 2))
