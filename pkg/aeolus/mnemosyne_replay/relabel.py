"""
Relabel Module

Turns logged experience plus a new reward law into a training dataset. Only the reward column
changes; every other field of every record is carried over untouched.

Functions:
    relabel(): New log with rewards recomputed from the stored pixels.
    relabel_file(): Relabel a log file for a registered task and write the result.
    log_to_buffer(): Load a log into a replay buffer for offline training.
"""

import logging
from pathlib import Path
from typing import Callable, Optional, Union

import numpy as np

from aeolus.errors import ConfigError
from aeolus.mnemosyne_replay.episode_log import REACH_CODE, EpisodeLog, read_log, write_log
from aeolus.mnemosyne_replay.replay_buffer import ReplayBuffer
from aeolus.themis_tasks import rewards
from aeolus.themis_tasks.task_spec import TASK_IDS, get_task

logger = logging.getLogger(__name__)

BatchRewardFn = Callable[[np.ndarray, Optional[np.ndarray]], np.ndarray]


def relabel(log: EpisodeLog, reward_fn: BatchRewardFn) -> EpisodeLog:
    """Recompute every reward from the stored ground-truth pixels.

    Args:
        log (EpisodeLog): Source log; left untouched.
        reward_fn (BatchRewardFn): Maps (N, n_balls, 2) pixels and (N, 2) goals (None for logs
            without goals) to N rewards in [0, 1].

    Returns:
        EpisodeLog: A copy of `log` with the reward column replaced.
    """
    relabeled = log.copy()
    goals = log.goals() if log.goal_conditioned else None
    pixels = log.records["pixels"].astype(np.float64)
    new_rewards = np.broadcast_to(np.asarray(reward_fn(pixels, goals), dtype=np.float64), (log.n_transitions,))
    relabeled.records["reward"] = new_rewards.astype(np.float32)
    return relabeled


def reward_law(task_id: str, n_balls: int) -> BatchRewardFn:
    """Batch reward law of `task_id` for logs with `n_balls` balls; "constant" scores 1 everywhere."""
    if task_id == "constant":
        return rewards.constant_reward
    return get_task(task_id, {"n_balls": str(n_balls)}).reward


def relabel_file(in_path: Union[str, Path], task_id: str, out_path: Union[str, Path]) -> EpisodeLog:
    """Relabel the log at `in_path` with the reward law of `task_id` and write it to `out_path`.

    The written header names `task_id`; "constant" keeps the source task.

    Raises:
        ConfigError: If `task_id` and the source log disagree on goal conditioning.
    """
    log = read_log(in_path)
    law = reward_law(task_id, log.n_balls)
    task_code = log.task_code
    if task_id != "constant":
        task_code = TASK_IDS.index(task_id)
        if (task_code == REACH_CODE) != log.goal_conditioned:
            raise ConfigError(
                f'Cannot relabel a task="{log.task_id}" log as task="{task_id}": goal conditioning differs.'
            )
    relabeled = relabel(log, law)
    relabeled = EpisodeLog(log.n_balls, log.history_length, task_code, relabeled.records)
    write_log(out_path, relabeled)
    logger.info(
        "Relabeled %d transitions of %s with task=%s into %s",
        log.n_transitions, in_path, task_id, out_path,
    )
    return relabeled


def log_to_buffer(log: EpisodeLog) -> ReplayBuffer:
    """A replay buffer holding exactly the log's transitions, in file order."""
    buffer = ReplayBuffer(capacity=max(log.n_transitions, 1))
    if log.n_transitions:
        buffer.extend_columns(**{name: log.records[name] for name in log.records.dtype.names})
    return buffer
