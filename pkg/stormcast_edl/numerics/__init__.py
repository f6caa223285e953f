"""Dense tensor arithmetic, reverse-mode differentiation and FLOP counting."""

from stormcast_edl.numerics.flops import FlopCounter, count_flops, record_flops
from stormcast_edl.numerics.functional import dropout, layer_norm, mean_squared_error
from stormcast_edl.numerics.gradcheck import gradient_check, numerical_gradient
from stormcast_edl.numerics.optim import Adam, clip_grad_norm
from stormcast_edl.numerics.special import digamma, lgamma, softplus
from stormcast_edl.numerics.tensor import (
    GradTape,
    Tensor,
    absolute,
    add,
    as_tensor,
    backward,
    clamp_min,
    div,
    exp,
    gelu,
    getitem,
    log,
    log1p,
    matmul,
    mean,
    mul,
    neg,
    power,
    reshape,
    softmax,
    sqrt,
    sub,
    tensor_sum,
    transpose,
)

__all__ = [
    "Adam",
    "FlopCounter",
    "GradTape",
    "Tensor",
    "absolute",
    "add",
    "as_tensor",
    "backward",
    "clamp_min",
    "clip_grad_norm",
    "count_flops",
    "digamma",
    "div",
    "dropout",
    "exp",
    "gelu",
    "getitem",
    "gradient_check",
    "layer_norm",
    "lgamma",
    "log",
    "log1p",
    "matmul",
    "mean",
    "mean_squared_error",
    "mul",
    "neg",
    "numerical_gradient",
    "power",
    "record_flops",
    "reshape",
    "softmax",
    "softplus",
    "sqrt",
    "sub",
    "tensor_sum",
    "transpose",
]
