"""Side-by-side comparison of evaluation reports computed on the same test split."""

import logging
from pathlib import Path
from typing import Sequence, Union

import pandas as pd
from pydantic import BaseModel, ConfigDict

from stormcast_edl.errors import CompareError
from stormcast_edl.evaluation import EvalReport, read_report
from stormcast_edl.utils import atomic_write_text

logger = logging.getLogger(__name__)

TABLES = ("csi", "mse", "correlation", "reliability", "cost", "timings")
COST_COLUMNS = [
    "variant",
    "parameters",
    "passes",
    "flops_per_pass",
    "total_flops",
    "wall_mean",
    "wall_std",
]


class Comparison(BaseModel):
    """Comparison tables, one row (or column) per report."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    labels: list[str]
    csi: pd.DataFrame
    mse: pd.DataFrame
    correlation: pd.DataFrame
    reliability: pd.DataFrame
    cost: pd.DataFrame
    timings: pd.DataFrame


def _labels(reports: Sequence[EvalReport]) -> list[str]:
    seen: dict[str, int] = {}
    labels = []
    for report in reports:
        seen[report.variant] = seen.get(report.variant, 0) + 1
        count = seen[report.variant]
        labels.append(report.variant if count == 1 else f"{report.variant}#{count}")
    return labels


def compare(reports: Sequence[EvalReport]) -> Comparison:
    """
    Build comparison tables.

    Args:
        reports: Reports computed on the same test split

    Returns:
        Comparison with CSI per threshold, MSE and correlation per lead,
        reliability per nominal level, cost per variant and raw timings
    """
    if not reports:
        raise CompareError("nothing to compare")
    fingerprints = {report.test_fingerprint for report in reports}
    if len(fingerprints) > 1:
        detail = ", ".join(f"{r.variant}={r.test_fingerprint[:12]}" for r in reports)
        raise CompareError(f"reports were computed on different test splits ({detail})")

    labels = _labels(reports)
    csi = pd.DataFrame(
        [
            {"variant": label, **{f"CSI-{e.threshold}": e.csi for e in report.csi.entries}}
            for label, report in zip(labels, reports)
        ]
    )
    first = reports[0]
    mse = pd.DataFrame({"lead_minutes": first.mse.lead_minutes})
    correlation = pd.DataFrame({"lead_minutes": first.correlation.lead_minutes})
    reliability = pd.DataFrame({"nominal": first.reliability.nominal})
    for label, report in zip(labels, reports):
        if len(report.mse.values) != len(first.mse.values):
            raise CompareError(
                f"{label} has {len(report.mse.values)} lead steps, expected {len(first.mse.values)}"
            )
        mse[label] = report.mse.values
        correlation[label] = report.correlation.values
        reliability[label] = report.reliability.observed

    cost_rows, timing_rows = [], []
    for label, report in zip(labels, reports):
        if report.cost is None:
            continue
        cost_rows.append(
            {
                "variant": label,
                "parameters": report.cost.parameter_count,
                "passes": report.cost.passes,
                "flops_per_pass": report.cost.flops_per_pass,
                "total_flops": report.cost.total_flops,
                "wall_mean": report.cost.wall_mean,
                "wall_std": report.cost.wall_std,
            }
        )
        timing_rows.extend({"variant": label, "seconds": t} for t in report.cost.timings)

    return Comparison(
        labels=labels,
        csi=csi,
        mse=mse,
        correlation=correlation,
        reliability=reliability,
        cost=pd.DataFrame(cost_rows, columns=COST_COLUMNS),
        timings=pd.DataFrame(timing_rows, columns=["variant", "seconds"]),
    )


def load_reports(directories: Sequence[Union[str, Path]]) -> list[EvalReport]:
    return [read_report(directory) for directory in directories]


def write_comparison(comparison: Comparison, directory: Union[str, Path]) -> Path:
    directory = Path(directory)
    for name in TABLES:
        table: pd.DataFrame = getattr(comparison, name)
        atomic_write_text(directory / f"{name}.csv", table.to_csv(index=False))
    logger.info(f"Wrote comparison of {', '.join(comparison.labels)} to {directory}")
    return directory


def read_comparison(directory: Union[str, Path]) -> Comparison:
    directory = Path(directory)
    tables = {}
    for name in TABLES:
        path = directory / f"{name}.csv"
        if not path.is_file():
            raise CompareError(f"comparison table not found: {path}")
        tables[name] = pd.read_csv(path)
    return Comparison(labels=tables["csi"]["variant"].astype(str).tolist(), **tables)
