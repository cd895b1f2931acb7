"""
Pixel Observer Module

Stands in for the camera and blob detector: ball centers are mapped onto the pixel grid, jittered
with seeded Gaussian noise and pushed into a fixed-length frame history. Only ball pixels (and the
goal pixel of goal-conditioned tasks) ever reach an observation; valve commands and supply
pressure stay hidden.

Classes:
    Observation: A frame history plus optional goal, flattened into the agent's input vector.
    FrameHistory: Fixed-length queue of the most recent frames.
    PixelObserver: Noisy pixel frames from simulator states.

Functions:
    observation_size(): Length of the flattened observation vector.
"""

from collections import deque
from typing import Optional

import numpy as np

from aeolus.boreas_sim.box_simulator import SimState, ground_truth_pixels
from aeolus.boreas_sim.sim_config import SimConfig
from aeolus.errors import ShapeMismatchError


def observation_size(n_balls: int, history_length: int, has_goal: bool) -> int:
    return n_balls * 2 * history_length + (2 if has_goal else 0)


class Observation:
    """A frame history plus optional goal pixel.

    Attributes:
        frames (np.ndarray): (H, n_balls, 2) pixel coordinates, oldest first.
        goal (Optional[np.ndarray]): (2,) goal pixel, or None.
    """

    def __init__(self, frames: np.ndarray, goal: Optional[np.ndarray] = None):
        frames = np.asarray(frames, dtype=np.float64)
        if frames.ndim != 3 or frames.shape[2] != 2:
            raise ShapeMismatchError(f"Observation frames must be (H, n_balls, 2), got {frames.shape}")
        self.frames = frames
        self.goal = None if goal is None else np.asarray(goal, dtype=np.float64).reshape(2)

    @property
    def latest(self) -> np.ndarray:
        return self.frames[-1]

    def vector(self) -> np.ndarray:
        """Flatten slot-major ([slot0: b0x, b0y, b1x, ...], ..., [goal x, goal y])."""
        flat = self.frames.reshape(-1)
        if self.goal is None:
            return flat.copy()
        return np.concatenate([flat, self.goal])

    def __len__(self):
        return self.frames.size + (0 if self.goal is None else 2)

    def __repr__(self):
        return f"Observation(history={self.frames.shape[0]}, n_balls={self.frames.shape[1]}, goal={self.goal})"


class FrameHistory:
    """The H most recent frames; the first frame of an episode fills every slot."""

    def __init__(self, history_length: int):
        self.history_length = history_length
        self._frames = deque(maxlen=history_length)

    def fill(self, frame: np.ndarray):
        self._frames.clear()
        for _ in range(self.history_length):
            self._frames.append(frame.copy())

    def push(self, frame: np.ndarray):
        if not self._frames:
            self.fill(frame)
        else:
            self._frames.append(frame.copy())

    def stacked(self) -> np.ndarray:
        return np.stack(self._frames)

    def __len__(self):
        return len(self._frames)


class PixelObserver:
    """Noisy pixel frames from simulator states.

    Attributes:
        config (SimConfig): Provides the pixel scale, noise level and history length.
        history (FrameHistory): Frames of the current episode.
        goal (Optional[np.ndarray]): Goal pixel appended to every observation, if any.

    Methods:
        reset(): Start an episode: fill the history with the first frame.
        observe(): Append the frame of a new state and return the observation.
    """

    def __init__(self, config: SimConfig, rng: np.random.Generator):
        self.config = config
        self.rng = rng
        self.history = FrameHistory(config.history_length)
        self.goal: Optional[np.ndarray] = None

    def frame(self, state: SimState) -> np.ndarray:
        """Ground-truth pixels plus blob-detector jitter, clipped to the grid."""
        pixels = ground_truth_pixels(self.config, state.positions)
        if self.config.pixel_noise > 0:
            pixels = pixels + self.config.pixel_noise * self.rng.standard_normal(pixels.shape)
        pixels[:, 0] = np.clip(pixels[:, 0], 0.0, self.config.pixel_width - 1)
        pixels[:, 1] = np.clip(pixels[:, 1], 0.0, self.config.pixel_height - 1)
        return pixels

    def reset(self, state: SimState, goal: Optional[np.ndarray] = None) -> Observation:
        self.goal = None if goal is None else np.asarray(goal, dtype=np.float64)
        self.history.fill(self.frame(state))
        return Observation(self.history.stacked(), self.goal)

    def observe(self, state: SimState) -> Observation:
        self.history.push(self.frame(state))
        return Observation(self.history.stacked(), self.goal)
