"""SVG figures from comparison tables and error maps."""

import io
import logging
from pathlib import Path
from typing import Mapping, Optional, Union

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from stormcast_edl.errors import EvaluationError  # noqa: E402
from stormcast_edl.harness.compare import Comparison  # noqa: E402
from stormcast_edl.utils import atomic_write_bytes  # noqa: E402

logger = logging.getLogger(__name__)

MAP_ROWS = ("target", "output", "rmse", "uncertainty")


def _save(fig, path: Union[str, Path]) -> Path:
    buffer = io.BytesIO()
    fig.savefig(buffer, format="svg", bbox_inches="tight")
    plt.close(fig)
    return atomic_write_bytes(path, buffer.getvalue())


def _variants(table) -> list[str]:
    return [column for column in table.columns if column not in ("lead_minutes", "nominal")]


def plot_mse_vs_lead(comparison: Comparison, path: Union[str, Path]) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    for variant in _variants(comparison.mse):
        ax.plot(comparison.mse["lead_minutes"], comparison.mse[variant], marker="o", label=variant)
    ax.set_xlabel("Lead time (min)")
    ax.set_ylabel("MSE (normalized intensity²)")
    ax.legend()
    return _save(fig, path)


def plot_cost(comparison: Comparison, path: Union[str, Path]) -> Path:
    """Histogram of inference times and bar chart of GFLOPs per prediction."""
    fig, (time_ax, flop_ax) = plt.subplots(1, 2, figsize=(10, 4))
    for variant, group in comparison.timings.groupby("variant", sort=False):
        time_ax.hist(group["seconds"] * 1e3, bins=15, alpha=0.6, label=str(variant))
    time_ax.set_xlabel("Inference time (ms)")
    time_ax.set_ylabel("Runs")
    time_ax.legend()
    flop_ax.bar(comparison.cost["variant"].astype(str), comparison.cost["total_flops"] / 1e9)
    flop_ax.set_ylabel("GFLOPs per prediction")
    return _save(fig, path)


def plot_correlation(comparison: Comparison, path: Union[str, Path]) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    table = comparison.correlation
    for variant in _variants(table):
        ax.plot(table["lead_minutes"], table[variant], marker="o", label=variant)
    ax.set_xlabel("Lead time (min)")
    ax.set_ylabel("Uncertainty-error correlation")
    ax.legend()
    return _save(fig, path)


def plot_reliability(comparison: Comparison, path: Union[str, Path]) -> Path:
    fig, ax = plt.subplots(figsize=(5, 5))
    table = comparison.reliability
    ax.plot([0, 1], [0, 1], linestyle="--", color="gray", label="y = x")
    for variant in _variants(table):
        ax.plot(table["nominal"], table[variant], marker=".", label=variant)
    ax.set_xlabel("Nominal coverage")
    ax.set_ylabel("Observed coverage")
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1)
    ax.legend()
    return _save(fig, path)


def plot_error_maps(
    maps: Mapping[str, np.ndarray], path: Union[str, Path], step_minutes: float = 5.0
) -> Path:
    """Grid of target, output, RMSE and uncertainty (rows) at each stored lead (columns)."""
    missing = [name for name in ("leads",) + MAP_ROWS if name not in maps]
    if missing:
        raise EvaluationError(f"error maps lack {', '.join(missing)}")
    leads = np.asarray(maps["leads"])
    fig, axes = plt.subplots(
        len(MAP_ROWS), len(leads), figsize=(2.2 * len(leads), 2.2 * len(MAP_ROWS)), squeeze=False
    )
    for row, name in enumerate(MAP_ROWS):
        for col, lead in enumerate(leads):
            ax = axes[row][col]
            image = ax.imshow(maps[name][col], cmap="viridis")
            ax.set_xticks([])
            ax.set_yticks([])
            if row == 0:
                ax.set_title(f"{lead * step_minutes:g} min")
            if col == 0:
                ax.set_ylabel(name)
            fig.colorbar(image, ax=ax, fraction=0.046)
    return _save(fig, path)


def render_figures(
    comparison: Comparison,
    directory: Union[str, Path],
    maps: Optional[Mapping[str, Mapping[str, np.ndarray]]] = None,
) -> list[Path]:
    """
    Render every figure into ``directory``.

    Args:
        comparison: Comparison tables
        directory: Output directory
        maps: Optional error maps per variant label

    Returns:
        Paths of the written SVG files
    """
    directory = Path(directory)
    written = [
        plot_mse_vs_lead(comparison, directory / "mse_vs_lead.svg"),
        plot_correlation(comparison, directory / "correlation.svg"),
        plot_reliability(comparison, directory / "reliability.svg"),
    ]
    if not comparison.cost.empty:
        written.append(plot_cost(comparison, directory / "cost.svg"))
    for label, variant_maps in (maps or {}).items():
        written.append(plot_error_maps(variant_maps, directory / f"maps_{label}.svg"))
    logger.info(f"Rendered {len(written)} figures into {directory}")
    return written
