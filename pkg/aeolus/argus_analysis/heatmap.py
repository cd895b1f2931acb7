"""
Heatmap Module

Coarse 2D histograms over the 700x700 pixel space: where a ball spent its time (visitation maps)
and how far it stayed from its goal (reaching-error maps). Bins are square, `bin_size` pixels on a
side, indexed (row, col) with row 0 at the top of the image. A pixel falls into bin
`floor(p / bin_size)`, so a pixel on a bin boundary belongs to the higher-index bin.

Classes:
    Heatmap: Unnormalized per-bin accumulator plus its normalization mode.
    ReachErrorMaps: Cumulative and count-normalized reaching-error maps.

Functions:
    bin_indices(): (row, col) bin of every pixel.
    accumulate_visits(): Visitation heatmap of raw pixel samples.
    visit_heatmap(): Visitation heatmap of one ball over the last K logged episodes.
    episode_reach_errors(): Mean ball-to-goal distance over the final steps of each episode.
    reach_error_heatmap(): Reaching error accumulated into goal bins.

Mythology:
    Argus Panoptes had a hundred eyes and never closed them all at once. Hera set him to watch,
    and nothing that moved in his field went unrecorded.
"""

from dataclasses import dataclass
from typing import List, NamedTuple, Sequence, Tuple

import numpy as np

from aeolus.boreas_sim.box_simulator import ball_colors
from aeolus.boreas_sim.sim_config import EPISODE_LENGTH
from aeolus.errors import DatasetError
from aeolus.mnemosyne_replay.episode_log import EpisodeLog
from aeolus.themis_tasks.rewards import PIXEL_EXTENT

VISIT_BIN_SIZE = 35
REACH_BIN_SIZE = 80
REACH_WINDOW = (800, EPISODE_LENGTH)
NORMALIZATION_MODES = ("max", "min-max")


def grid_shape(bin_size: int, extent: float = PIXEL_EXTENT) -> Tuple[int, int]:
    n = int(np.ceil(extent / bin_size))
    return n, n


@dataclass
class Heatmap:
    """Per-bin accumulator over the pixel space.

    Attributes:
        values (np.ndarray): (rows, cols) unnormalized, non-negative bin totals.
        bin_size (int): Bin edge length in pixels.
        mode (str): "max" divides by the largest bin; "min-max" maps the smallest bin to black and
            the largest to red.
        n_samples (int): Samples accumulated into `values`.

    Methods:
        normalized(): Intensities in [0, 1].
        to_rgb(): Black-to-red image at pixel resolution.
    """

    values: np.ndarray
    bin_size: int
    mode: str = "max"
    n_samples: int = 0

    def __post_init__(self):
        if self.mode not in NORMALIZATION_MODES:
            raise ValueError(f'Heatmap mode="{self.mode}" is not one of {NORMALIZATION_MODES}')
        if np.any(self.values < 0):
            raise ValueError("Heatmap bins must be non-negative.")

    @property
    def shape(self) -> Tuple[int, int]:
        return self.values.shape

    def normalized(self) -> np.ndarray:
        values = self.values.astype(np.float64)
        if self.mode == "max":
            low = 0.0
        else:
            low = values.min()
        span = values.max() - low
        if span <= 0:
            return np.zeros_like(values)
        return np.clip((values - low) / span, 0.0, 1.0)

    def to_rgb(self, extent: int = int(PIXEL_EXTENT)) -> np.ndarray:
        """(extent, extent, 3) uint8 image, red channel proportional to the normalized bin."""
        red = np.rint(self.normalized() * 255).astype(np.uint8)
        red = np.repeat(np.repeat(red, self.bin_size, axis=0), self.bin_size, axis=1)[:extent, :extent]
        image = np.zeros(red.shape + (3,), dtype=np.uint8)
        image[..., 0] = red
        return image

    def rows(self) -> List[Tuple[int, int, int, int, float, float]]:
        """(row, col, x0, y0, value, intensity) for every bin, row-major."""
        intensity = self.normalized()
        return [
            (r, c, c * self.bin_size, r * self.bin_size, float(self.values[r, c]), float(intensity[r, c]))
            for r in range(self.values.shape[0])
            for c in range(self.values.shape[1])
        ]


class ReachErrorMaps(NamedTuple):
    cumulative: Heatmap
    count_normalized: Heatmap
    counts: np.ndarray
    episode_errors: np.ndarray
    goals: np.ndarray


def bin_indices(pixels: np.ndarray, bin_size: int, extent: float = PIXEL_EXTENT) -> Tuple[np.ndarray, np.ndarray]:
    """(rows, cols) of `pixels` (..., 2) given as (x, y).

    Raises:
        DatasetError: If a pixel lies outside [0, extent).
    """
    pixels = np.asarray(pixels, dtype=np.float64).reshape(-1, 2)
    if pixels.size and (pixels.min() < 0 or pixels.max() >= extent or not np.all(np.isfinite(pixels))):
        raise DatasetError(f"Pixels must lie in [0, {extent:g}).")
    rows = np.floor(pixels[:, 1] / bin_size).astype(np.int64)
    cols = np.floor(pixels[:, 0] / bin_size).astype(np.int64)
    return rows, cols


def accumulate_visits(pixels: np.ndarray, bin_size: int = VISIT_BIN_SIZE) -> Heatmap:
    rows, cols = bin_indices(pixels, bin_size)
    values = np.zeros(grid_shape(bin_size), dtype=np.int64)
    np.add.at(values, (rows, cols), 1)
    return Heatmap(values, bin_size, mode="max", n_samples=rows.size)


def _episode_blocks(logs: Sequence[EpisodeLog]) -> List[Tuple[EpisodeLog, np.ndarray]]:
    """(log, records) of every episode, in file order across `logs`."""
    blocks = []
    for log in logs:
        episodes = log.records.reshape(log.n_episodes, EPISODE_LENGTH)
        blocks.extend((log, episode) for episode in episodes)
    return blocks


def _ball_index(log: EpisodeLog, color: str) -> int:
    colors = ball_colors(log.n_balls)
    if color not in colors:
        raise DatasetError(f'Ball color="{color}" not present in a log of {log.n_balls} balls {colors}.')
    return colors.index(color)


def visit_heatmap(
    logs: Sequence[EpisodeLog], color: str, last_episodes: int, bin_size: int = VISIT_BIN_SIZE
) -> Heatmap:
    """Visitation heatmap of the `color` ball over the last `last_episodes` episodes of `logs`.

    Raises:
        DatasetError: If fewer episodes are available, or a log has no ball of that color.
    """
    blocks = _episode_blocks(logs)
    if last_episodes < 1 or last_episodes > len(blocks):
        raise DatasetError(f"Requested the last {last_episodes} episodes, logs hold {len(blocks)}.")
    pixels = [
        episode["pixels"][:, _ball_index(log, color)].astype(np.float64)
        for log, episode in blocks[-last_episodes:]
    ]
    return accumulate_visits(np.concatenate(pixels), bin_size)


def episode_reach_errors(
    logs: Sequence[EpisodeLog], color: str = "orange", window: Tuple[int, int] = REACH_WINDOW
) -> Tuple[np.ndarray, np.ndarray]:
    """(errors, goals): per episode, the mean pixel distance between ball and goal over steps in
    `window` and the episode's goal pixel.

    Raises:
        DatasetError: If a log stores no goals.
    """
    errors, goals = [], []
    for log, episode in _episode_blocks(logs):
        if not log.goal_conditioned:
            raise DatasetError(f'Episode {int(episode["episode"][0])} of task="{log.task_id}" has no goal.')
        ball = _ball_index(log, color)
        goal = log.goals(episode[:1])[0]
        steps = episode["step"].astype(np.int64)
        late = episode[(steps >= window[0]) & (steps < window[1])]
        distance = np.linalg.norm(late["pixels"][:, ball].astype(np.float64) - goal, axis=-1)
        errors.append(distance.mean())
        goals.append(goal)
    return np.asarray(errors, dtype=np.float64), np.asarray(goals, dtype=np.float64).reshape(-1, 2)


def reach_error_heatmap(
    logs: Sequence[EpisodeLog],
    bin_size: int = REACH_BIN_SIZE,
    color: str = "orange",
    window: Tuple[int, int] = REACH_WINDOW,
) -> ReachErrorMaps:
    """Reaching error summed into the bin of each episode's goal.

    The cumulative map follows the raw sum; the count-normalized map divides each bin by its
    episode count. Both use min-black, max-red normalization.
    """
    errors, goals = episode_reach_errors(logs, color, window)
    if errors.size == 0:
        raise DatasetError("Reach-error map needs at least one episode.")
    rows, cols = bin_indices(np.clip(goals, 0, PIXEL_EXTENT - 1), bin_size)
    shape = grid_shape(bin_size)
    cumulative = np.zeros(shape, dtype=np.float64)
    counts = np.zeros(shape, dtype=np.int64)
    np.add.at(cumulative, (rows, cols), errors)
    np.add.at(counts, (rows, cols), 1)
    mean = np.divide(cumulative, counts, out=np.zeros(shape), where=counts > 0)
    return ReachErrorMaps(
        cumulative=Heatmap(cumulative, bin_size, mode="min-max", n_samples=errors.size),
        count_normalized=Heatmap(mean, bin_size, mode="min-max", n_samples=errors.size),
        counts=counts,
        episode_errors=errors,
        goals=goals,
    )
