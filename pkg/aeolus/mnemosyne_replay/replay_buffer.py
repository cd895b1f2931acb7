"""
Replay Buffer Module

Fixed-capacity FIFO ring of transitions stored column-wise in NumPy arrays. One actor appends while
one learner samples; a single lock serializes the two, and sampled batches are always copies.

Classes:
    ReplayBuffer: Ring storage with uniform, seeded sampling.
"""

import threading
from typing import Iterator, Optional

import numpy as np

from aeolus.errors import DatasetError, ShapeMismatchError
from aeolus.mnemosyne_replay.transition import Transition, TransitionBatch

DEFAULT_CAPACITY = 1_000_000


class ReplayBuffer:
    """Ring storage with uniform, seeded sampling.

    Storage is allocated on the first append, sized from that transition. Observations, actions
    and pixels are kept as float32 (the precision of the episode log), rewards as float64.

    Attributes:
        capacity (int): Maximum number of stored transitions.
        cursor (int): Slot the next append writes.
        size (int): Number of stored transitions.

    Methods:
        append(): Store a transition, evicting the oldest when full.
        extend(): Append column arrays in order.
        sample_batch(): Uniform sample with replacement.
        get(): The i-th stored transition, oldest first.
    """

    def __init__(self, capacity: int = DEFAULT_CAPACITY):
        if capacity < 1:
            raise ValueError(f"ReplayBuffer capacity (={capacity}) must be >= 1.")
        self.capacity = int(capacity)
        self.cursor = 0
        self.size = 0
        self._lock = threading.Lock()
        self._columns: Optional[dict] = None

    def _allocate(self, obs_dim: int, n_balls: int, action_dim: int):
        c = self.capacity
        self._columns = {
            "observation": np.zeros((c, obs_dim), dtype=np.float32),
            "action": np.zeros((c, action_dim), dtype=np.float32),
            "reward": np.zeros(c, dtype=np.float64),
            "next_observation": np.zeros((c, obs_dim), dtype=np.float32),
            "done": np.zeros(c, dtype=bool),
            "pixels": np.zeros((c, n_balls, 2), dtype=np.float32),
            "episode": np.zeros(c, dtype=np.int64),
            "step": np.zeros(c, dtype=np.int64),
        }

    def append(self, transition: Transition):
        obs = np.asarray(transition.observation)
        pixels = np.asarray(transition.pixels)
        action = np.asarray(transition.action)
        with self._lock:
            if self._columns is None:
                self._allocate(obs.shape[0], pixels.shape[0], action.shape[0])
            elif obs.shape != self._columns["observation"].shape[1:]:
                raise ShapeMismatchError(
                    f"Observation shape {obs.shape} != buffer {self._columns['observation'].shape[1:]}"
                )
            i = self.cursor
            cols = self._columns
            cols["observation"][i] = obs
            cols["action"][i] = action
            cols["reward"][i] = transition.reward
            cols["next_observation"][i] = transition.next_observation
            cols["done"][i] = transition.done
            cols["pixels"][i] = pixels
            cols["episode"][i] = transition.episode
            cols["step"][i] = transition.step
            self.cursor = (i + 1) % self.capacity
            self.size = min(self.size + 1, self.capacity)

    def extend(self, transitions):
        for transition in transitions:
            self.append(transition)

    def extend_columns(self, **columns: np.ndarray):
        """Append column arrays (keys as in `Transition`'s fields) in row order."""
        n = len(columns["reward"])
        with self._lock:
            if self._columns is None:
                self._allocate(
                    columns["observation"].shape[1], columns["pixels"].shape[1], columns["action"].shape[1]
                )
            keep = min(n, self.capacity)
            slots = (self.cursor + (n - keep) + np.arange(keep)) % self.capacity
            for name, store in self._columns.items():
                store[slots] = np.asarray(columns[name])[n - keep:]
            self.cursor = int((self.cursor + n) % self.capacity)
            self.size = min(self.size + n, self.capacity)

    def _index(self, i: int) -> int:
        """Ring slot of the i-th stored transition, oldest first."""
        start = self.cursor if self.size == self.capacity else 0
        return (start + i) % self.capacity

    def get(self, i: int) -> Transition:
        with self._lock:
            if not 0 <= i < self.size:
                raise IndexError(f"Transition index {i} outside buffer of size {self.size}")
            j = self._index(i)
            cols = self._columns
            return Transition(
                observation=cols["observation"][j].astype(np.float64),
                action=cols["action"][j].astype(np.float64),
                reward=float(cols["reward"][j]),
                next_observation=cols["next_observation"][j].astype(np.float64),
                done=bool(cols["done"][j]),
                pixels=cols["pixels"][j].astype(np.float64),
                episode=int(cols["episode"][j]),
                step=int(cols["step"][j]),
            )

    def __iter__(self) -> Iterator[Transition]:
        for i in range(self.size):
            yield self.get(i)

    def __len__(self):
        return self.size

    def sample_indices(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Ring slots of `n` uniform draws with replacement over the filled region."""
        if n < 1:
            raise DatasetError(f"Cannot sample a batch of {n} transitions.")
        if self.size < n:
            raise DatasetError(f"Replay buffer holds {self.size} transitions, batch needs {n}.")
        return rng.integers(0, self.size, size=n)

    def sample_batch(self, n: int, rng: np.random.Generator) -> TransitionBatch:
        """Uniform sample with replacement over the filled region.

        Raises:
            DatasetError: If fewer than `n` transitions are stored.

        Returns:
            TransitionBatch: Float64 copies of the sampled columns.
        """
        with self._lock:
            slots = self.sample_indices(n, rng)
            cols = self._columns
            return TransitionBatch(
                observations=cols["observation"][slots].astype(np.float64),
                actions=cols["action"][slots].astype(np.float64),
                rewards=cols["reward"][slots].copy(),
                next_observations=cols["next_observation"][slots].astype(np.float64),
                dones=cols["done"][slots].astype(np.float64),
            )

    def __repr__(self):
        return f"ReplayBuffer(size={self.size}, capacity={self.capacity})"
