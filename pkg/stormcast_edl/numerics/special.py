"""Differentiable special functions: softplus, log-gamma and digamma.

Values come from ``scipy.special`` (relative accuracy well inside 1e-10 on
(0, 1e6)); derivatives use the next function in the polygamma family.
"""

import numpy as np
from scipy import special

from stormcast_edl.errors import DomainError
from stormcast_edl.numerics.flops import record_flops
from stormcast_edl.numerics.tensor import Tensor, _result, as_tensor


def softplus(x) -> Tensor:
    """``ln(1 + e^x)`` evaluated without overflow for large ``x``."""
    x = as_tensor(x)
    out = np.logaddexp(0.0, x.data)
    record_flops("softplus", x.size)
    return _result(out, (x,), "softplus", lambda g: (g * special.expit(x.data),))


def _require_positive(x: Tensor, name: str) -> None:
    if np.any(x.data <= 0.0):
        raise DomainError(f"{name}: argument must be strictly positive")


def lgamma(x) -> Tensor:
    """Natural log of the gamma function for strictly positive arguments."""
    x = as_tensor(x)
    _require_positive(x, "lgamma")
    record_flops("lgamma", x.size)
    return _result(
        special.gammaln(x.data), (x,), "lgamma", lambda g: (g * special.digamma(x.data),)
    )


def digamma(x) -> Tensor:
    """Logarithmic derivative of the gamma function for strictly positive arguments."""
    x = as_tensor(x)
    _require_positive(x, "digamma")
    record_flops("digamma", x.size)
    return _result(
        special.digamma(x.data),
        (x,),
        "digamma",
        lambda g: (g * special.polygamma(1, x.data),),
    )
