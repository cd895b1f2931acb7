"""
Frame Renderer Module

Draws logged ball pixels into 700x700 palette frames and writes them as binary portable pixmaps
(P6). Every drawable goes onto the subframe of its z-index; subframes hold palette indices with 0
as transparency and are merged from the highest z-index down, so a higher layer hides whatever
lies beneath it.

Classes:
    FrameRenderer: Layered palette renderer for one frame size.

Functions:
    encode_ppm(): RGB array to P6 bytes.
    write_ppm(): Write an RGB array as a P6 file.
    render_frames(): Filmstrip of one logged episode.
"""

import csv
import logging
from pathlib import Path
from typing import Dict, List, Tuple, Union

import numpy as np

from aeolus.boreas_sim.box_simulator import ball_colors
from aeolus.errors import DatasetError
from aeolus.mnemosyne_replay.episode_log import EpisodeLog
from aeolus.themis_tasks.rewards import PIXEL_EXTENT, RADIUS_PX

logger = logging.getLogger(__name__)

# Palette index -> RGB. Index 0 is transparent until the background is applied.
PALETTE = np.array(
    [
        [0, 0, 0],
        [235, 235, 235],  # background
        [20, 20, 20],  # goal cross
        [255, 140, 0],  # orange
        [128, 0, 160],  # purple
        [0, 160, 60],  # green
        [90, 90, 90],  # any further ball
    ],
    dtype=np.uint8,
)
BACKGROUND_CODE = 1
GOAL_CODE = 2
COLOR_CODES = {"orange": 3, "purple": 4, "green": 5}
OTHER_BALL_CODE = 6
GOAL_Z_INDEX = 100
CROSS_HALF_LENGTH = 12
CROSS_HALF_WIDTH = 1


def color_code(color: str) -> int:
    return COLOR_CODES.get(color, OTHER_BALL_CODE)


class FrameRenderer:
    """Layered palette renderer.

    Attributes:
        height (int): Frame height in pixels.
        width (int): Frame width in pixels.
        background_code (int): Palette index that fills whatever no layer covers.
        layered_frames (Dict[int, np.ndarray]): z-index -> uint8 subframe of palette indices.

    Methods:
        draw_disc(): Filled circle on a layer.
        draw_cross(): Plus-shaped marker on a layer.
        render(): Merge the layers into one palette frame and clear them.
        render_rgb(): `render()` mapped through the palette.
    """

    def __init__(self, height: int = int(PIXEL_EXTENT), width: int = int(PIXEL_EXTENT), background_code: int = BACKGROUND_CODE):
        self.height = height
        self.width = width
        self.background_code = background_code
        self.layered_frames: Dict[int, np.ndarray] = {}
        self._rows, self._cols = np.ogrid[:height, :width]

    def _subframe(self, z_index: int) -> np.ndarray:
        if z_index not in self.layered_frames:
            self.layered_frames[z_index] = np.zeros((self.height, self.width), dtype=np.uint8)
        return self.layered_frames[z_index]

    def draw_disc(self, z_index: int, center: Tuple[float, float], radius: float, code: int):
        """Fill every pixel whose center is within `radius` of `center` (x, y). Pixels off the
        frame are never touched.
        """
        x, y = center
        mask = (self._cols - x) ** 2 + (self._rows - y) ** 2 <= radius**2
        self._subframe(z_index)[mask] = code

    def draw_cross(self, z_index: int, center: Tuple[float, float], code: int, half_length: int = CROSS_HALF_LENGTH):
        x, y = (int(round(v)) for v in center)
        subframe = self._subframe(z_index)
        top, bottom = max(y - half_length, 0), min(y + half_length + 1, self.height)
        left, right = max(x - half_length, 0), min(x + half_length + 1, self.width)
        band_top, band_bottom = max(y - CROSS_HALF_WIDTH, 0), min(y + CROSS_HALF_WIDTH + 1, self.height)
        band_left, band_right = max(x - CROSS_HALF_WIDTH, 0), min(x + CROSS_HALF_WIDTH + 1, self.width)
        subframe[band_top:band_bottom, left:right] = code
        subframe[top:bottom, band_left:band_right] = code

    def render(self) -> np.ndarray:
        """Collapse the layers, highest z-index first, filling only still-transparent cells."""
        merged = np.zeros((self.height, self.width), dtype=np.uint8)
        for z_index in sorted(self.layered_frames, reverse=True):
            merged = np.where(merged == 0, self.layered_frames[z_index], merged)
        if self.background_code != 0:
            merged[merged == 0] = self.background_code
        self.layered_frames = {}
        return merged

    def render_rgb(self) -> np.ndarray:
        return PALETTE[self.render()]


def encode_ppm(rgb: np.ndarray) -> bytes:
    rgb = np.ascontiguousarray(rgb, dtype=np.uint8)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise ValueError(f"PPM images are (height, width, 3), got {rgb.shape}")
    height, width, _ = rgb.shape
    return f"P6\n{width} {height}\n255\n".encode("ascii") + rgb.tobytes()


def write_ppm(path: Union[str, Path], rgb: np.ndarray):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_ppm(rgb))


def render_frames(
    log: EpisodeLog,
    episode_id: int,
    out_dir: Union[str, Path],
    stride: int = 1,
    radius_px: float = RADIUS_PX,
) -> List[Path]:
    """Write one PPM per `stride` control steps of episode `episode_id`, plus `frames.csv` listing
    the drawn pixels of every written frame.

    Raises:
        DatasetError: If the episode is not in the log.
    """
    if stride < 1:
        raise ValueError(f"Frame stride must be >= 1, got {stride}")
    records = log.episode(episode_id)
    colors = ball_colors(log.n_balls)
    goal = log.goals(records[:1])[0] if log.goal_conditioned else None
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    renderer = FrameRenderer()

    paths, rows = [], []
    for record in records[::stride]:
        step = int(record["step"])
        pixels = record["pixels"].astype(np.float64)
        for z_index, (color, center) in enumerate(zip(colors, pixels), start=1):
            renderer.draw_disc(z_index, tuple(center), radius_px, color_code(color))
        if goal is not None:
            renderer.draw_cross(GOAL_Z_INDEX, tuple(goal), GOAL_CODE)
        path = out_dir / f"episode{episode_id:05d}_step{step:04d}.ppm"
        write_ppm(path, renderer.render_rgb())
        paths.append(path)
        rows.append([path.name, step, *pixels.ravel().tolist(), *([] if goal is None else goal.tolist())])

    header = ["file", "step"] + [f"{color}_{axis}" for color in colors for axis in ("x", "y")]
    if goal is not None:
        header += ["goal_x", "goal_y"]
    with open(out_dir / "frames.csv", "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        writer.writerows(rows)
    logger.info("Rendered %d frames of episode %d into %s", len(paths), episode_id, out_dir)
    return paths
