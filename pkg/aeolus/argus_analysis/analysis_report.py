"""
Analysis Report Module

File-producing front end of the analysis package, one function per `analyze` kind. Every image
is written next to a CSV of the numbers it shows.

Functions:
    write_heatmap(): PPM plus per-bin CSV of a `Heatmap`.
    report_visits(): Visitation heatmap of the logs.
    report_reach_error(): Cumulative and count-normalized reaching-error maps.
    report_curve(): Smoothed reward curve CSV.
    report_frames(): Filmstrip of one episode.
    analyze(): Dispatch on the analysis kind.
"""

import csv
import logging
from pathlib import Path
from typing import List, Optional, Sequence, Union

from aeolus.argus_analysis.frame_renderer import render_frames, write_ppm
from aeolus.argus_analysis.heatmap import (
    REACH_BIN_SIZE,
    VISIT_BIN_SIZE,
    Heatmap,
    reach_error_heatmap,
    visit_heatmap,
)
from aeolus.argus_analysis.reward_curve import DEFAULT_WINDOW, reward_curve, write_curve_csv
from aeolus.errors import ConfigError, DatasetError
from aeolus.mnemosyne_replay.episode_log import read_log

logger = logging.getLogger(__name__)

ANALYSIS_KINDS = ("visits", "reach-error", "curve", "frames")
DEFAULT_VISIT_EPISODES = 100

PathLike = Union[str, Path]


def write_heatmap(out_dir: PathLike, name: str, heatmap: Heatmap) -> List[Path]:
    out_dir = Path(out_dir)
    image_path = out_dir / f"{name}.ppm"
    csv_path = out_dir / f"{name}.csv"
    write_ppm(image_path, heatmap.to_rgb())
    with open(csv_path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["row", "col", "x0", "y0", "value", "intensity"])
        for row, col, x0, y0, value, intensity in heatmap.rows():
            writer.writerow([row, col, x0, y0, repr(value), repr(intensity)])
    logger.info("Wrote %s and %s", image_path, csv_path)
    return [image_path, csv_path]


def report_visits(
    inputs: Sequence[PathLike], out_dir: PathLike, color: str = "orange",
    episodes: int = DEFAULT_VISIT_EPISODES, bin_size: int = VISIT_BIN_SIZE,
) -> List[Path]:
    logs = [read_log(path) for path in inputs]
    heatmap = visit_heatmap(logs, color, episodes, bin_size)
    return write_heatmap(out_dir, f"visits_{color}_bin_size_{bin_size}", heatmap)


def report_reach_error(inputs: Sequence[PathLike], out_dir: PathLike, bin_size: int = REACH_BIN_SIZE) -> List[Path]:
    logs = [read_log(path) for path in inputs]
    maps = reach_error_heatmap(logs, bin_size)
    written = write_heatmap(out_dir, f"reach_error_bin_size_{bin_size}", maps.cumulative)
    written += write_heatmap(out_dir, f"reach_error_mean_bin_size_{bin_size}", maps.count_normalized)
    episodes_path = Path(out_dir) / "reach_error_episodes.csv"
    with open(episodes_path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["goal_x", "goal_y", "mean_error_px"])
        for goal, error in zip(maps.goals, maps.episode_errors):
            writer.writerow([repr(float(goal[0])), repr(float(goal[1])), repr(float(error))])
    return written + [episodes_path]


def report_curve(inputs: Sequence[PathLike], out_dir: PathLike, window: int = DEFAULT_WINDOW) -> List[Path]:
    path = Path(out_dir) / "reward_curve.csv"
    write_curve_csv(path, reward_curve(inputs, window))
    logger.info("Wrote %s", path)
    return [path]


def report_frames(
    inputs: Sequence[PathLike], out_dir: PathLike, episode: Optional[int] = None, stride: int = 1
) -> List[Path]:
    if len(inputs) != 1:
        raise ConfigError(f"Frame rendering reads exactly one log, got {len(inputs)}")
    log = read_log(inputs[0])
    if log.n_episodes == 0:
        raise DatasetError(f'Episode log "{inputs[0]}" holds no episodes.')
    if episode is None:
        episode = int(log.episode_ids()[-1])
    return render_frames(log, episode, out_dir, stride)


def analyze(
    kind: str,
    inputs: Sequence[PathLike],
    out_dir: PathLike,
    bins: Optional[int] = None,
    episodes: Optional[int] = None,
    color: str = "orange",
    episode: Optional[int] = None,
    stride: int = 1,
    window: int = DEFAULT_WINDOW,
) -> List[Path]:
    """Run one analysis kind and return the files it wrote.

    Args:
        kind (str): One of `ANALYSIS_KINDS`.
        inputs (Sequence[PathLike]): Episode logs, or training CSVs for "curve".
        out_dir (PathLike): Output directory, created if needed.
        bins (int, optional): Bin size in pixels for the heatmaps.
        episodes (int, optional): Trailing episodes for the visitation map.
        color (str): Ball color for the visitation map.
        episode (int, optional): Episode id for "frames"; defaults to the last logged one.
        stride (int): Control steps between rendered frames.
        window (int): Moving-average window of the curve.

    Raises:
        ConfigError: On an unknown kind or no inputs.
    """
    if kind not in ANALYSIS_KINDS:
        raise ConfigError(f'Analysis="{kind}" not found in {ANALYSIS_KINDS}.')
    if not inputs:
        raise ConfigError("analyze needs at least one input path")
    Path(out_dir).mkdir(parents=True, exist_ok=True)
    if kind == "visits":
        return report_visits(
            inputs, out_dir, color,
            DEFAULT_VISIT_EPISODES if episodes is None else episodes,
            VISIT_BIN_SIZE if bins is None else bins,
        )
    if kind == "reach-error":
        return report_reach_error(inputs, out_dir, REACH_BIN_SIZE if bins is None else bins)
    if kind == "curve":
        return report_curve(inputs, out_dir, window)
    return report_frames(inputs, out_dir, episode, stride)
