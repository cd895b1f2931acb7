"""
Rewards Module

Per-step reward laws of the task suite, written as pure NumPy functions of ground-truth ball
pixels (x right, y down). Every function accepts single pixels of shape (2,) or batches of shape
(..., 2) and returns values clipped to [0, 1], so the same code scores live steps and relabels
whole logs.

Functions:
    hover_reward(): Height of the target ball between its reachable pixel extremes.
    rearrange_reward(): Product of per-ball proximity to the target halves.
    stack_reward(): Height-offset kernel times horizontal-alignment kernel.
    reach_reward(): One minus the ball-to-goal distance over the grid diagonal.
    hover_center_reward(): Hover reward scaled by closeness to the vertical center line.
    constant_reward(): Always 1; a relabeling baseline.
"""

import numpy as np

PIXEL_EXTENT = 700.0
RADIUS_PX = 20.0
STACK_OFFSET = 2 * RADIUS_PX
STACK_SIGMA = 20.0


def _unit(value):
    value = np.clip(value, 0.0, 1.0)
    return float(value) if np.ndim(value) == 0 else value


def hover_reward(target, radius_px: float = RADIUS_PX, pixel_height: float = PIXEL_EXTENT):
    """(y_max - y) / (y_max - y_min) with y_max = pixel_height - 1 - radius_px, y_min = radius_px."""
    y = np.asarray(target, dtype=np.float64)[..., 1]
    y_max = pixel_height - 1.0 - radius_px
    y_min = radius_px
    return _unit((y_max - y) / (y_max - y_min))


def _half_proximity(inside, distance, pixel_width):
    return np.where(inside, 1.0, 1.0 - distance / pixel_width)


def rearrange_reward(orange, purple, pixel_width: float = PIXEL_EXTENT):
    """Orange belongs in the right half, purple in the left; the midline counts as inside for both.

    A ball inside its half scores 1, otherwise 1 - d / pixel_width with d the horizontal distance
    to the midline. The reward is the product of the two scores.
    """
    middle = pixel_width / 2.0
    xo = np.asarray(orange, dtype=np.float64)[..., 0]
    xp = np.asarray(purple, dtype=np.float64)[..., 0]
    r_orange = _half_proximity(xo >= middle, middle - xo, pixel_width)
    r_purple = _half_proximity(xp <= middle, xp - middle, pixel_width)
    return _unit(r_orange * r_purple)


def stack_reward(
    orange,
    purple,
    offset: float = STACK_OFFSET,
    sigma_height: float = STACK_SIGMA,
    sigma_align: float = STACK_SIGMA,
):
    """Orange sits `offset` px above purple and shares its x coordinate."""
    orange = np.asarray(orange, dtype=np.float64)
    purple = np.asarray(purple, dtype=np.float64)
    gap = purple[..., 1] - orange[..., 1]
    r_height = np.exp(-np.square(gap - offset) / (2.0 * sigma_height**2))
    r_align = np.exp(-np.square(orange[..., 0] - purple[..., 0]) / (2.0 * sigma_align**2))
    return _unit(r_height * r_align)


def reach_reward(ball, goal, pixel_extent: float = PIXEL_EXTENT):
    """1 - |ball - goal| / (pixel_extent * sqrt(2)), clipped at 0."""
    ball = np.asarray(ball, dtype=np.float64)
    goal = np.asarray(goal, dtype=np.float64)
    distance = np.linalg.norm(ball - goal, axis=-1)
    return _unit(1.0 - distance / (pixel_extent * np.sqrt(2.0)))


def hover_center_reward(
    target,
    radius_px: float = RADIUS_PX,
    pixel_width: float = PIXEL_EXTENT,
    pixel_height: float = PIXEL_EXTENT,
):
    middle = pixel_width / 2.0
    x = np.asarray(target, dtype=np.float64)[..., 0]
    centering = 1.0 - np.abs(x - middle) / middle
    return _unit(hover_reward(target, radius_px, pixel_height) * centering)


def constant_reward(pixels, goal=None):
    shape = np.shape(pixels)[:-2]
    return 1.0 if shape == () else np.ones(shape)
