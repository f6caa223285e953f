"""Normal-Inverse-Gamma evidential regression head and objective."""

from stormcast_edl.evidential.head import SOFTPLUS_FLOOR, constrain, decompose, student_t_params
from stormcast_edl.evidential.losses import evidence_regularizer, nll_loss, total_loss
from stormcast_edl.evidential.models import (
    EvidentialLoss,
    LambdaSchedule,
    NIGParamMap,
    UncertaintyField,
)

__all__ = [
    "SOFTPLUS_FLOOR",
    "EvidentialLoss",
    "LambdaSchedule",
    "NIGParamMap",
    "UncertaintyField",
    "constrain",
    "decompose",
    "evidence_regularizer",
    "nll_loss",
    "student_t_params",
    "total_loss",
]
