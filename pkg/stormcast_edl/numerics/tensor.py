"""Dense 64-bit tensors with tape-based reverse-mode differentiation.

Tensors are immutable values. Operations executed while a :class:`GradTape`
is active, and whose inputs require gradients, are appended to that tape;
:func:`backward` replays the tape in reverse to produce a gradient for every
leaf that requires one.
"""

from __future__ import annotations

import logging
import math
from contextvars import ContextVar
from typing import Any, Callable, NamedTuple, Optional, Sequence, Union

import numpy as np
from scipy import special

from stormcast_edl.errors import DomainError, GraphError, NumericError, ShapeError
from stormcast_edl.numerics.flops import record_flops

logger = logging.getLogger(__name__)

BackwardFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]

_active_tape: ContextVar[Optional["GradTape"]] = ContextVar("stormcast_grad_tape", default=None)


class Tensor:
    """Row-major array of 64-bit floats that may take part in differentiation."""

    __slots__ = ("data", "requires_grad", "name", "_is_leaf", "_tape")

    # Make numpy defer binary operators to the Tensor implementations.
    __array_ufunc__ = None

    def __init__(self, data: Any, requires_grad: bool = False, name: Optional[str] = None):
        if isinstance(data, Tensor):
            data = data.data
        array = np.array(data, dtype=np.float64)
        _check_extents(array.shape, "Tensor")
        array.setflags(write=False)
        self.data: np.ndarray = array
        self.requires_grad = bool(requires_grad)
        self.name = name
        self._is_leaf = True
        self._tape: Optional[GradTape] = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return int(self.data.size)

    @property
    def is_leaf(self) -> bool:
        return self._is_leaf

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.data.reshape(()))

    def numpy(self) -> np.ndarray:
        """Return a writable copy of the values."""
        return np.array(self.data)

    def detach(self) -> Tensor:
        return Tensor(self.data)

    def assign(self, values: Any) -> None:
        """Replace the values of a leaf (used by optimizers and checkpoint loading)."""
        if not self._is_leaf:
            raise GraphError("only leaf tensors can be assigned new values")
        array = np.array(values, dtype=np.float64)
        if array.shape != self.data.shape:
            raise ShapeError(f"cannot assign shape {array.shape} to tensor of shape {self.shape}")
        array.setflags(write=False)
        self.data = array

    def __repr__(self) -> str:
        label = f", name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad}{label})"

    def __add__(self, other: Any) -> Tensor:
        return add(self, other)

    def __radd__(self, other: Any) -> Tensor:
        return add(other, self)

    def __sub__(self, other: Any) -> Tensor:
        return sub(self, other)

    def __rsub__(self, other: Any) -> Tensor:
        return sub(other, self)

    def __mul__(self, other: Any) -> Tensor:
        return mul(self, other)

    def __rmul__(self, other: Any) -> Tensor:
        return mul(other, self)

    def __truediv__(self, other: Any) -> Tensor:
        return div(self, other)

    def __rtruediv__(self, other: Any) -> Tensor:
        return div(other, self)

    def __neg__(self) -> Tensor:
        return neg(self)

    def __pow__(self, exponent: float) -> Tensor:
        return power(self, exponent)

    def __matmul__(self, other: Any) -> Tensor:
        return matmul(self, other)

    def __getitem__(self, index: Any) -> Tensor:
        return getitem(self, index)

    def sum(self, axis: Union[int, tuple[int, ...], None] = None, keepdims: bool = False) -> Tensor:
        return tensor_sum(self, axis=axis, keepdims=keepdims)

    def mean(
        self, axis: Union[int, tuple[int, ...], None] = None, keepdims: bool = False
    ) -> Tensor:
        return mean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape: Any) -> Tensor:
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def transpose(self, *axes: Any) -> Tensor:
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        return transpose(self, axes or None)


class TapeEntry(NamedTuple):
    """One recorded primitive: its inputs, its output and how to pull gradients back."""

    op: str
    inputs: tuple[Tensor, ...]
    output: Tensor
    backward: BackwardFn


class GradTape:
    """Ordered record of the primitive operations of one differentiable computation.

    A tape belongs to a single thread of execution. Use it as a context
    manager around the forward computation, then call :meth:`backward`.
    """

    def __init__(self):
        self._entries: list[TapeEntry] = []
        self._token = None

    def __enter__(self) -> GradTape:
        self._token = _active_tape.set(self)
        return self

    def __exit__(self, exc_type, exc, tb) -> bool:
        if self._token is not None:
            _active_tape.reset(self._token)
            self._token = None
        return False

    def __len__(self) -> int:
        return len(self._entries)

    @property
    def entries(self) -> tuple[TapeEntry, ...]:
        return tuple(self._entries)

    def record(
        self, op: str, inputs: tuple[Tensor, ...], output: Tensor, backward: BackwardFn
    ) -> None:
        output._tape = self
        self._entries.append(TapeEntry(op, inputs, output, backward))

    def backward(self, loss: Tensor) -> dict[Tensor, np.ndarray]:
        """
        Replay the tape backwards from a scalar loss.

        Args:
            loss: Scalar tensor produced by operations recorded on this tape

        Returns:
            Mapping from every requires-grad leaf reachable on the tape to its gradient
        """
        if loss.size != 1:
            raise GraphError(f"backward needs a scalar loss, got shape {loss.shape}")
        if loss._is_leaf:
            if not loss.requires_grad:
                raise GraphError("loss does not require gradients")
            return {loss: np.ones_like(loss.data)}

        positions = {id(entry.output): index for index, entry in enumerate(self._entries)}
        if id(loss) not in positions:
            raise GraphError("loss was not produced by operations recorded on this tape")

        last = positions[id(loss)]
        pending: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
        leaves: dict[int, Tensor] = {}
        leaf_grads: dict[int, np.ndarray] = {}

        for entry in reversed(self._entries[: last + 1]):
            grad_out = pending.pop(id(entry.output), None)
            if grad_out is None:
                continue
            input_grads = entry.backward(grad_out)
            for tensor, grad in zip(entry.inputs, input_grads):
                if grad is None or not tensor.requires_grad:
                    continue
                if not tensor._is_leaf and id(tensor) not in positions:
                    raise GraphError(
                        f"input of '{entry.op}' was computed outside this tape "
                        "and cannot be differentiated"
                    )
                grad = _unbroadcast(np.asarray(grad, dtype=np.float64), tensor.shape)
                target = leaf_grads if tensor._is_leaf else pending
                key = id(tensor)
                target[key] = target[key] + grad if key in target else grad
                if tensor._is_leaf:
                    leaves[key] = tensor

        # Leaves recorded on the tape but unreachable from the loss get zero gradients.
        for entry in self._entries[: last + 1]:
            for tensor in entry.inputs:
                if tensor._is_leaf and tensor.requires_grad and id(tensor) not in leaves:
                    leaves[id(tensor)] = tensor
                    leaf_grads[id(tensor)] = np.zeros_like(tensor.data)

        return {leaves[key]: leaf_grads[key] for key in leaves}


def backward(loss: Tensor, tape: Optional[GradTape] = None) -> dict[Tensor, np.ndarray]:
    """
    Compute gradients of a scalar loss with respect to all requires-grad leaves.

    Args:
        loss: Scalar tensor
        tape: Tape the loss was recorded on; defaults to the tape that produced it

    Returns:
        Mapping from leaf tensor to gradient array of the leaf's shape
    """
    tape = tape if tape is not None else loss._tape
    if tape is None:
        if loss._is_leaf and loss.requires_grad:
            return {loss: np.ones_like(loss.data)}
        raise GraphError("loss was not produced by taped operations")
    return tape.backward(loss)


def as_tensor(value: Any) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def _check_extents(shape: tuple[int, ...], op: str) -> None:
    if any(extent <= 0 for extent in shape):
        raise ShapeError(f"{op} produced a tensor with a non-positive extent: {shape}")


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, extent in enumerate(shape) if extent == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


def _result(array: Any, inputs: tuple[Tensor, ...], op: str, backward_fn: BackwardFn) -> Tensor:
    array = np.asarray(array, dtype=np.float64)
    if not np.isfinite(array).all():
        raise NumericError(f"{op} produced non-finite values")
    _check_extents(array.shape, op)
    if array.flags.writeable:
        array.setflags(write=False)
    out = Tensor.__new__(Tensor)
    out.data = array
    out.requires_grad = any(tensor.requires_grad for tensor in inputs)
    out.name = None
    out._is_leaf = False
    out._tape = None
    if out.requires_grad:
        tape = _active_tape.get()
        if tape is not None:
            tape.record(op, inputs, out, backward_fn)
    return out


def _normalize_axis(axis: int, ndim: int, op: str) -> int:
    if not -ndim <= axis < ndim:
        raise ShapeError(f"{op}: axis {axis} is out of range for a {ndim}-d tensor")
    return axis % ndim


# Elementwise arithmetic


def add(a: Any, b: Any) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    try:
        out = a.data + b.data
    except ValueError as e:
        raise ShapeError(f"add: cannot broadcast {a.shape} with {b.shape}") from e
    record_flops("add", out.size)
    return _result(out, (a, b), "add", lambda g: (g, g))


def sub(a: Any, b: Any) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    try:
        out = a.data - b.data
    except ValueError as e:
        raise ShapeError(f"sub: cannot broadcast {a.shape} with {b.shape}") from e
    record_flops("sub", out.size)
    return _result(out, (a, b), "sub", lambda g: (g, -g))


def mul(a: Any, b: Any) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    try:
        out = a.data * b.data
    except ValueError as e:
        raise ShapeError(f"mul: cannot broadcast {a.shape} with {b.shape}") from e
    record_flops("mul", out.size)
    return _result(out, (a, b), "mul", lambda g: (g * b.data, g * a.data))


def div(a: Any, b: Any) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if np.any(b.data == 0.0):
        raise DomainError("div: division by zero")
    try:
        out = a.data / b.data
    except ValueError as e:
        raise ShapeError(f"div: cannot broadcast {a.shape} with {b.shape}") from e
    record_flops("div", out.size)

    def backward_fn(g: np.ndarray):
        grad_a = g / b.data
        return grad_a, -grad_a * out

    return _result(out, (a, b), "div", backward_fn)


def neg(a: Any) -> Tensor:
    a = as_tensor(a)
    record_flops("neg", a.size)
    return _result(-a.data, (a,), "neg", lambda g: (-g,))


def power(a: Any, exponent: float) -> Tensor:
    a = as_tensor(a)
    exponent = float(exponent)
    if exponent != int(exponent) and np.any(a.data < 0):
        raise DomainError(f"power: negative base with fractional exponent {exponent}")
    out = a.data**exponent
    record_flops("power", a.size)
    return _result(out, (a,), "power", lambda g: (g * exponent * a.data ** (exponent - 1.0),))


def exp(a: Any) -> Tensor:
    a = as_tensor(a)
    with np.errstate(over="ignore"):
        out = np.exp(a.data)
    record_flops("exp", a.size)
    return _result(out, (a,), "exp", lambda g: (g * out,))


def log(a: Any) -> Tensor:
    a = as_tensor(a)
    if np.any(a.data <= 0.0):
        raise DomainError("log: argument must be strictly positive")
    record_flops("log", a.size)
    return _result(np.log(a.data), (a,), "log", lambda g: (g / a.data,))


def log1p(a: Any) -> Tensor:
    a = as_tensor(a)
    if np.any(a.data <= -1.0):
        raise DomainError("log1p: argument must exceed -1")
    record_flops("log1p", a.size)
    return _result(np.log1p(a.data), (a,), "log1p", lambda g: (g / (1.0 + a.data),))


def sqrt(a: Any) -> Tensor:
    a = as_tensor(a)
    if np.any(a.data < 0.0):
        raise DomainError("sqrt: argument must be non-negative")
    out = np.sqrt(a.data)
    record_flops("sqrt", a.size)
    return _result(out, (a,), "sqrt", lambda g: (g / (2.0 * out),))


def absolute(a: Any) -> Tensor:
    """Absolute value; the subgradient at zero is zero."""
    a = as_tensor(a)
    record_flops("abs", a.size)
    return _result(np.abs(a.data), (a,), "abs", lambda g: (g * np.sign(a.data),))


def clamp_min(a: Any, floor: float) -> Tensor:
    """Elementwise ``max(a, floor)``; gradient flows only where ``a > floor``."""
    a = as_tensor(a)
    record_flops("clamp_min", a.size)
    out = np.maximum(a.data, floor)
    return _result(out, (a,), "clamp_min", lambda g: (g * (a.data > floor),))


def gelu(a: Any) -> Tensor:
    """Gaussian error linear unit, ``x·Φ(x)`` with the exact normal CDF."""
    a = as_tensor(a)
    cdf = special.ndtr(a.data)
    out = a.data * cdf
    record_flops("gelu", a.size)
    density = np.exp(-0.5 * a.data * a.data) / math.sqrt(2.0 * math.pi)
    return _result(out, (a,), "gelu", lambda g: (g * (cdf + a.data * density),))


# Reductions and layout


def _axis_count(shape: tuple[int, ...], axis: Union[int, tuple[int, ...], None]) -> int:
    if axis is None:
        return int(np.prod(shape, dtype=np.int64))
    axes = (axis,) if isinstance(axis, int) else axis
    return int(np.prod([shape[_normalize_axis(ax, len(shape), "reduce")] for ax in axes]))


def _expand_reduced(g: np.ndarray, shape: tuple[int, ...], axis, keepdims: bool) -> np.ndarray:
    if axis is not None and not keepdims:
        g = np.expand_dims(g, axis)
    return np.broadcast_to(g, shape)


def tensor_sum(
    a: Any, axis: Union[int, tuple[int, ...], None] = None, keepdims: bool = False
) -> Tensor:
    a = as_tensor(a)
    _axis_count(a.shape, axis)
    out = a.data.sum(axis=axis, keepdims=keepdims)
    record_flops("sum", a.size)
    return _result(out, (a,), "sum", lambda g: (_expand_reduced(g, a.shape, axis, keepdims),))


def mean(a: Any, axis: Union[int, tuple[int, ...], None] = None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    count = _axis_count(a.shape, axis)
    out = a.data.mean(axis=axis, keepdims=keepdims)
    record_flops("mean", a.size)
    return _result(
        out, (a,), "mean", lambda g: (_expand_reduced(g / count, a.shape, axis, keepdims),)
    )


def reshape(a: Any, shape: Sequence[int]) -> Tensor:
    a = as_tensor(a)
    try:
        out = a.data.reshape(tuple(shape))
    except ValueError as e:
        raise ShapeError(f"reshape: cannot reshape {a.shape} into {tuple(shape)}") from e
    return _result(out, (a,), "reshape", lambda g: (g.reshape(a.shape),))


def transpose(a: Any, axes: Optional[Sequence[int]] = None) -> Tensor:
    a = as_tensor(a)
    axes = tuple(range(a.ndim))[::-1] if axes is None else tuple(axes)
    if sorted(_normalize_axis(ax, a.ndim, "transpose") for ax in axes) != list(range(a.ndim)):
        raise ShapeError(f"transpose: {axes} is not a permutation of {a.ndim} axes")
    inverse = tuple(int(i) for i in np.argsort([ax % a.ndim for ax in axes]))
    out = a.data.transpose(axes)
    return _result(out, (a,), "transpose", lambda g: (g.transpose(inverse),))


def _is_basic_index(index: Any) -> bool:
    items = index if isinstance(index, tuple) else (index,)
    return all(
        isinstance(item, (int, np.integer, slice)) or item is Ellipsis or item is None
        for item in items
    )


def getitem(a: Any, index: Any) -> Tensor:
    a = as_tensor(a)
    try:
        out = a.data[index]
    except IndexError as e:
        raise ShapeError(f"getitem: invalid index {index!r} for shape {a.shape}") from e
    basic = _is_basic_index(index)

    def backward_fn(g: np.ndarray):
        grad = np.zeros(a.shape, dtype=np.float64)
        if basic:
            grad[index] = g
        else:
            np.add.at(grad, index, g)
        return (grad,)

    return _result(np.array(out, dtype=np.float64), (a,), "getitem", backward_fn)


# Linear algebra and normalisation


def matmul(a: Any, b: Any) -> Tensor:
    """
    Matrix product over the last two axes, broadcasting any leading batch axes.

    Args:
        a: Tensor of shape ``[..., m, k]``
        b: Tensor of shape ``[..., k, n]``

    Returns:
        Tensor of shape ``[..., m, n]``
    """
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 2 or b.ndim < 2:
        raise ShapeError(f"matmul needs operands with at least 2 axes, got {a.shape} and {b.shape}")
    m, k = a.shape[-2:]
    k_b, n = b.shape[-2:]
    if k != k_b:
        raise ShapeError(f"matmul inner dimensions differ: {a.shape} @ {b.shape}")
    try:
        out = np.matmul(a.data, b.data)
    except ValueError as e:
        raise ShapeError(f"matmul batch axes do not broadcast: {a.shape} @ {b.shape}") from e
    batch = out.size // (m * n)
    record_flops("matmul", 2 * batch * m * k * n)

    def backward_fn(g: np.ndarray):
        grad_a = np.matmul(g, np.swapaxes(b.data, -1, -2)) if a.requires_grad else None
        grad_b = None
        if b.requires_grad:
            if b.ndim == 2 and a.ndim > 2:
                grad_b = a.data.reshape(-1, k).T @ g.reshape(-1, n)
            else:
                grad_b = np.matmul(np.swapaxes(a.data, -1, -2), g)
        return grad_a, grad_b

    return _result(out, (a, b), "matmul", backward_fn)


def softmax(a: Any, axis: int = -1) -> Tensor:
    """Softmax along ``axis`` computed after subtracting the running maximum."""
    a = as_tensor(a)
    axis = _normalize_axis(axis, a.ndim, "softmax")
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    exps = np.exp(shifted)
    out = exps / exps.sum(axis=axis, keepdims=True)
    record_flops("softmax", 3 * out.size)

    def backward_fn(g: np.ndarray):
        return (out * (g - (g * out).sum(axis=axis, keepdims=True)),)

    return _result(out, (a,), "softmax", backward_fn)
