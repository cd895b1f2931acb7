"""
Transition Module

Classes:
    Transition: One control step of experience.
    TransitionBatch: Column arrays of sampled transitions, as the learners consume them.

Mythology:
    Mnemosyne is the Titaness of memory and mother of the nine Muses. Whatever she keeps can be
    recalled exactly, and told again with a new meaning.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np


@dataclass
class Transition:
    """One control step of experience.

    Attributes:
        observation (np.ndarray): Observation vector before the action.
        action (np.ndarray): Nine valve openings actually applied.
        reward (float): Reward scored on `pixels`.
        next_observation (np.ndarray): Observation vector after the action.
        done (bool): True only on the last step of an episode.
        pixels (np.ndarray): (n_balls, 2) ground-truth ball pixels after the action.
        episode (int): Episode id.
        step (int): Step index within the episode, 0-based.
    """

    observation: np.ndarray
    action: np.ndarray
    reward: float
    next_observation: np.ndarray
    done: bool
    pixels: np.ndarray
    episode: int = 0
    step: int = 0


class TransitionBatch(NamedTuple):
    observations: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_observations: np.ndarray
    dones: np.ndarray

    @property
    def size(self) -> int:
        return self.rewards.shape[0]
