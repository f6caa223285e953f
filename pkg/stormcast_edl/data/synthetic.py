"""Synthetic advecting-storm generator producing VIL-like frame sequences."""

import logging
from typing import Optional

import numpy as np

from stormcast_edl.data.models import FrameSequence, StormCell, SyntheticStormConfig

logger = logging.getLogger(__name__)


def sample_cells(config: SyntheticStormConfig, rng: np.random.Generator) -> list[StormCell]:
    """
    Draw the storm cells of one event.

    Centres are placed so that each cell's position at the middle frame is
    uniform over the domain. Positions may leave the grid; rendering wraps them.
    """
    low, high = config.cells_per_event
    n_cells = int(rng.integers(low, high + 1))
    middle = (config.n_frames - 1) / 2.0
    cells = []
    for _ in range(n_cells):
        speed = rng.uniform(*config.speed_range)
        heading = rng.uniform(*config.heading_range)
        velocity_row = speed * np.sin(heading)
        velocity_col = speed * np.cos(heading)
        mid_row = rng.uniform(0.0, config.height - 1)
        mid_col = rng.uniform(0.0, config.width - 1)
        cells.append(
            StormCell(
                row=mid_row - velocity_row * middle,
                col=mid_col - velocity_col * middle,
                velocity_row=velocity_row,
                velocity_col=velocity_col,
                sigma=rng.uniform(*config.sigma_range),
                amplitude=rng.uniform(*config.amplitude_range),
                growth=rng.uniform(*config.growth_range),
            )
        )
    return cells


def _periodic_profile(coords: np.ndarray, centre: float, sigma: float, period: int) -> np.ndarray:
    """Gaussian profile along one axis of a periodic domain, summed over enough images."""
    n_images = int(np.ceil(6.0 * sigma / period)) + 1
    shifts = np.arange(-n_images, n_images + 1, dtype=np.float64) * period
    offsets = coords[:, None] - (centre % period) + shifts[None, :]
    return np.exp(-(offsets**2) / (2.0 * sigma**2)).sum(axis=1)


def render_event(
    cells: list[StormCell],
    config: SyntheticStormConfig,
    rng: Optional[np.random.Generator] = None,
) -> np.ndarray:
    """
    Render cells into a ``[T, H, W]`` intensity array with values in [0, 1].

    The domain wraps around, so advection moves mass without losing it at the
    edges. If overlapping or growing cells would push the clean field above 1,
    the whole event is scaled down by one factor; frame-to-frame mass ratios
    therefore stay those set by the cells' growth rates and clipping only ever
    touches the noise.

    Args:
        cells: Cells to advect
        config: Generator settings (frame count, size, noise amplitude)
        rng: Source of the additive noise; no noise when omitted

    Returns:
        Float64 array of frames
    """
    rows = np.arange(config.height, dtype=np.float64)
    cols = np.arange(config.width, dtype=np.float64)
    middle = (config.n_frames - 1) / 2.0
    frames = np.zeros((config.n_frames, config.height, config.width), dtype=np.float64)
    for t in range(config.n_frames):
        for cell in cells:
            row_profile = _periodic_profile(
                rows, cell.row + cell.velocity_row * t, cell.sigma, config.height
            )
            col_profile = _periodic_profile(
                cols, cell.col + cell.velocity_col * t, cell.sigma, config.width
            )
            peak = cell.amplitude * cell.growth ** (t - middle)
            frames[t] += peak * np.outer(row_profile, col_profile)
    highest = frames.max(initial=0.0)
    if highest > 1.0:
        logger.debug(f"Scaling event by {1.0 / highest:.4f} to keep intensities within [0, 1]")
        frames /= highest
    if rng is not None and config.noise_amplitude > 0.0:
        frames += rng.uniform(-config.noise_amplitude, config.noise_amplitude, size=frames.shape)
    return np.clip(frames, 0.0, 1.0)


def generate(config: SyntheticStormConfig) -> list[FrameSequence]:
    """
    Generate ``config.n_events`` storm events.

    Each event draws from its own child of the configured seed, so the dataset
    is identical for a given seed regardless of how events are produced.

    Args:
        config: Generator settings

    Returns:
        List of frame sequences with event ids ``0 .. n_events-1``
    """
    children = np.random.SeedSequence(config.seed).spawn(config.n_events)
    events = []
    for event_id, child in enumerate(children):
        rng = np.random.default_rng(child)
        cells = sample_cells(config, rng)
        frames = render_event(cells, config, rng)
        events.append(
            FrameSequence(frames=frames, step_minutes=config.step_minutes, event_id=event_id)
        )
    logger.info(
        f"Generated {len(events)} synthetic events of {config.n_frames} frames "
        f"({config.height}x{config.width}, seed {config.seed})"
    )
    return events
