"""Evaluation report persistence: one CSV table per metric plus a JSON summary."""

import json
import logging
from pathlib import Path
from typing import Union

import pandas as pd
from pydantic import ValidationError

from stormcast_edl.errors import EvaluationError
from stormcast_edl.evaluation.models import EvalReport
from stormcast_edl.utils import atomic_write_json, atomic_write_text

logger = logging.getLogger(__name__)

SUMMARY_NAME = "summary.json"


def csi_table(report: EvalReport) -> pd.DataFrame:
    return pd.DataFrame([entry.model_dump() for entry in report.csi.entries])


def lead_table(report: EvalReport) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "lead_step": range(1, len(report.mse.values) + 1),
            "lead_minutes": report.mse.lead_minutes,
            "mse": report.mse.values,
            "correlation": report.correlation.values,
            "correlation_defined": report.correlation.defined,
        }
    )


def reliability_table(report: EvalReport) -> pd.DataFrame:
    curve = report.reliability
    return pd.DataFrame(
        {"nominal": curve.nominal, "observed": curve.observed, "mean_width": curve.mean_width}
    )


def write_report(report: EvalReport, directory: Union[str, Path]) -> Path:
    """
    Write ``csi.csv``, ``lead.csv``, ``reliability.csv``, ``timings.csv`` and ``summary.json``.

    Args:
        report: Report to persist
        directory: Destination directory, created when missing

    Returns:
        The directory
    """
    directory = Path(directory)
    atomic_write_text(directory / "csi.csv", csi_table(report).to_csv(index=False))
    atomic_write_text(directory / "lead.csv", lead_table(report).to_csv(index=False))
    atomic_write_text(directory / "reliability.csv", reliability_table(report).to_csv(index=False))
    if report.cost is not None:
        timings = pd.DataFrame(
            {"run": range(len(report.cost.timings)), "seconds": report.cost.timings}
        )
        atomic_write_text(directory / "timings.csv", timings.to_csv(index=False))
    atomic_write_json(directory / SUMMARY_NAME, report.model_dump())
    logger.info(f"Wrote {report.variant} report to {directory}")
    return directory


def read_report(directory: Union[str, Path]) -> EvalReport:
    """Load the report summary written by :func:`write_report`."""
    path = Path(directory) / SUMMARY_NAME
    if not path.is_file():
        raise EvaluationError(f"Report summary not found: {path}")
    try:
        return EvalReport.model_validate(json.loads(path.read_text()))
    except (ValidationError, json.JSONDecodeError) as e:
        raise EvaluationError(f"Invalid report summary {path}: {e}") from e
