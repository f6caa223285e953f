"""Forecast verification and uncertainty diagnostics."""

from stormcast_edl.evaluation.correlation import uncertainty_error_correlation
from stormcast_edl.evaluation.csi import THRESHOLDS, contingency, csi
from stormcast_edl.evaluation.lead import mse_by_lead
from stormcast_edl.evaluation.models import (
    CostProfile,
    CSIEntry,
    CSIReport,
    EvalReport,
    LeadCurve,
    ReliabilityCurve,
)
from stormcast_edl.evaluation.profiling import profile
from stormcast_edl.evaluation.reliability import (
    NOMINAL_LEVELS,
    GaussianPredictive,
    StudentTPredictive,
    reliability,
    student_t_quantile,
)
from stormcast_edl.evaluation.report import read_report, write_report

__all__ = [
    "NOMINAL_LEVELS",
    "THRESHOLDS",
    "CSIEntry",
    "CSIReport",
    "CostProfile",
    "EvalReport",
    "GaussianPredictive",
    "LeadCurve",
    "ReliabilityCurve",
    "StudentTPredictive",
    "contingency",
    "csi",
    "mse_by_lead",
    "profile",
    "read_report",
    "reliability",
    "student_t_quantile",
    "uncertainty_error_correlation",
    "write_report",
]
