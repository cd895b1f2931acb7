"""
Task Environment Module

Binds one `TaskSpec` to a simulator and a pixel observer, giving the reset/step episode interface
the actors use. Rewards are scored on the ground-truth pixels after each action; the goal of a
goal-conditioned task is sampled once at reset and held for the whole episode.

Classes:
    StepResult: What one environment step returns.
    TaskEnvironment: Episode interface for a task.
"""

import dataclasses
from typing import NamedTuple, Optional

import numpy as np

from aeolus.boreas_sim.box_simulator import BoxSimulator, SimState
from aeolus.boreas_sim.pixel_observer import Observation, PixelObserver, observation_size
from aeolus.boreas_sim.sim_config import SimConfig
from aeolus.themis_tasks.task_spec import TaskSpec

# Sub-stream labels for the per-episode seed.
OBSERVER_STREAM = 1
GOAL_STREAM = 2


class StepResult(NamedTuple):
    observation: Observation
    reward: float
    done: bool
    pixels: np.ndarray
    action: np.ndarray


class TaskEnvironment:
    """Episode interface for a task.

    Attributes:
        task (TaskSpec): The task being scored.
        simulator (BoxSimulator): Simulator configured with the task's ball count.
        state (Optional[SimState]): Current simulator state.
        goal (Optional[np.ndarray]): Goal pixel of the current episode.

    Methods:
        reset(): Start an episode from a seed and return the first observation.
        step(): Apply an action and return the next observation, reward and done flag.
    """

    def __init__(self, task: TaskSpec, sim_config: Optional[SimConfig] = None):
        sim_config = sim_config if sim_config is not None else SimConfig()
        if sim_config.n_balls != task.n_balls:
            sim_config = dataclasses.replace(sim_config, n_balls=task.n_balls)
        self.task = task
        self.simulator = BoxSimulator(sim_config)
        self.state: Optional[SimState] = None
        self.goal: Optional[np.ndarray] = None
        self.pixels: Optional[np.ndarray] = None
        self._observer: Optional[PixelObserver] = None

    @property
    def sim_config(self) -> SimConfig:
        return self.simulator.config

    @property
    def observation_size(self) -> int:
        return observation_size(
            self.task.n_balls, self.sim_config.history_length, self.task.goal_conditioned
        )

    def reset(self, seed: int) -> Observation:
        self.state = self.simulator.reset(seed)
        self._observer = PixelObserver(self.sim_config, np.random.default_rng([seed, OBSERVER_STREAM]))
        self.goal = None
        if self.task.goal_conditioned:
            self.goal = self.task.sample_goal(np.random.default_rng([seed, GOAL_STREAM]))
        self.pixels = self.simulator.pixels(self.state)
        return self._observer.reset(self.state, self.goal)

    def step(self, action) -> StepResult:
        """Apply `action` and score the resulting pixels.

        Raises:
            RuntimeError: If called before `reset()`.
        """
        if self.state is None:
            raise RuntimeError("TaskEnvironment.step() called before reset().")
        self.state, self.pixels = self.simulator.step(self.state, action)
        reward = float(self.task.reward(self.pixels, self.goal))
        done = self.state.step_index == self.task.episode_length
        return StepResult(
            self._observer.observe(self.state), reward, done, self.pixels.copy(), self.state.action.copy()
        )

    def __repr__(self):
        return f"TaskEnvironment(task={self.task.task_id}, n_balls={self.task.n_balls})"
