"""
AeolusEngine Module

The primary orchestration module of experiments: the online actor-learner loop, offline training
on logged data, and checkpoint evaluation. Every random stream of a run is derived from the root
seed by `seed_split()` with a fixed label, so a run is a pure function of its resolved config.

Run directory of an online run:

    resolved_config.txt     the resolved config (without `out`)
    episodes.bofl           every training episode
    train.csv               env_steps, mean_episode_return
    eval.csv                env_steps, mean_eval_return (every `eval_period` episodes)
    checkpoints/learner_<env_steps>.bofp
    line_profile.txt        only with profiling on

Classes:
    RunSummary: What a run produced.
    AeolusEngine: Runs one `ExperimentConfig`.

Functions:
    run_online(): Online MPO run of a config.
    run_offline(): Offline CRR run of a config on a logged dataset.

Mythology:
    Aeolus was keeper of the winds, holding them in a bag and letting each out on command. Here
    he holds the simulator, the learners and the logs, and decides which runs when.
"""

import csv
import logging
import math
import queue
import threading
from functools import partial
from pathlib import Path
from typing import Callable, List, NamedTuple, Optional, Tuple, Union

import numpy as np
from line_profiler import LineProfiler
from tqdm import tqdm

from aeolus.aeolus_engine.experiment_config import ExperimentConfig, write_resolved_config
from aeolus.aeolus_engine.seeding import seed_split, stream
from aeolus.athena_learners import mpo
from aeolus.athena_learners.crr import load_crr, offline_train
from aeolus.athena_learners.policy import act
from aeolus.boreas_sim.box_simulator import BoxSimulator
from aeolus.boreas_sim.sim_config import EPISODE_LENGTH
from aeolus.config_file import write_key_value_file
from aeolus.errors import ConfigError
from aeolus.metis_autodiff.mlp import MlpParams
from aeolus.mnemosyne_replay.episode_log import EpisodeLogWriter, file_sha256, read_log
from aeolus.mnemosyne_replay.relabel import log_to_buffer
from aeolus.mnemosyne_replay.replay_buffer import DEFAULT_CAPACITY, ReplayBuffer
from aeolus.mnemosyne_replay.transition import Transition
from aeolus.themis_tasks.task_env import TaskEnvironment

logger = logging.getLogger(__name__)

EPISODE_LOG = "episodes.bofl"
TRAIN_CSV = "train.csv"
EVAL_CSV = "eval.csv"
EVAL_RETURNS_CSV = "eval_returns.csv"
PROVENANCE = "provenance.txt"
LINE_PROFILE = "line_profile.txt"
CHECKPOINT_DIR = "checkpoints"


class RunSummary(NamedTuple):
    out_dir: Path
    episodes: int
    env_steps: int
    learner_steps: int
    train_returns: List[float]
    eval_returns: List[Tuple[int, float]]


class _CsvLog:
    """Header-first CSV that flushes after every row."""

    def __init__(self, path: Path, header: List[str]):
        self.path = path
        self._handle = open(path, "w", newline="")
        self._writer = csv.writer(self._handle)
        self.write(header)

    def write(self, row):
        self._writer.writerow(row)
        self._handle.flush()

    def close(self):
        self._handle.close()


def learner_checkpoint_path(out_dir: Union[str, Path], env_steps: int) -> Path:
    return Path(out_dir) / CHECKPOINT_DIR / f"learner_{env_steps:08d}.bofp"


class AeolusEngine:
    """Runs one experiment.

    Attributes:
        config (ExperimentConfig): The resolved experiment.
        progress (bool): Show tqdm progress bars.
        profiler (Optional[LineProfiler]): Line profiler of the simulator and learner steps. Only the
            thread that learns uses it; threaded actor episodes run unprofiled.

    Methods:
        run_online(): Online MPO training.
        run_offline(): Offline CRR training on an episode log.
        run_episode(): One full episode with a policy.
        evaluate_policy(): Mean-mode evaluation returns.
        evaluate_checkpoint(): Evaluate a saved learner and log its episodes.
    """

    def __init__(self, config: ExperimentConfig, progress: bool = False, profile: bool = False):
        self.config = config
        self.progress = progress
        self.profiler: Optional[LineProfiler] = None
        if profile:
            self.profiler = LineProfiler()
            self.profiler.add_function(BoxSimulator._advance)
            self.profiler.add_function(mpo.learner_step)

    def __repr__(self):
        return f"AeolusEngine(task={self.config.task}, algorithm={self.config.algorithm}, seed={self.config.seed})"

    def _environment(self) -> TaskEnvironment:
        return TaskEnvironment(self.config.task_spec, self.config.sim)

    def _profiled(self, fn: Callable, *args):
        if self.profiler is None:
            return fn(*args)
        self.profiler.enable_by_count()
        try:
            return fn(*args)
        finally:
            self.profiler.disable_by_count()

    def _dump_profile(self, out_dir: Path):
        if self.profiler is None:
            return
        with open(out_dir / LINE_PROFILE, "w") as handle:
            self.profiler.print_stats(stream=handle)
        logger.info("Wrote line profile to %s", out_dir / LINE_PROFILE)

    def run_episode(
        self,
        env: TaskEnvironment,
        policy: MlpParams,
        seed: int,
        mode: str,
        rng: Optional[np.random.Generator] = None,
        episode_id: int = 0,
        profiled: bool = True,
    ) -> Tuple[List[Transition], float]:
        """One full episode; returns its transitions and its mean per-step reward.

        Simulator steps go through the line profiler only when `profiled` is set.
        """
        step = partial(self._profiled, env.step) if profiled else env.step
        observation = env.reset(seed).vector()
        transitions: List[Transition] = []
        done = False
        while not done:
            action = act(policy, observation, mode, rng)
            result = step(action)
            next_observation = result.observation.vector()
            done = result.done
            transitions.append(Transition(
                observation=observation,
                action=result.action,
                reward=result.reward,
                next_observation=next_observation,
                done=done,
                pixels=result.pixels,
                episode=episode_id,
                step=len(transitions),
            ))
            observation = next_observation
        return transitions, float(np.mean([t.reward for t in transitions]))

    def evaluate_policy(self, policy: MlpParams, n_episodes: Optional[int] = None) -> List[float]:
        """Mean-mode returns on the fixed evaluation seeds `eval-episode-<j>`."""
        n_episodes = self.config.eval_episodes if n_episodes is None else n_episodes
        env = self._environment()
        return [
            self.run_episode(env, policy, seed_split(self.config.seed, f"eval-episode-{j}"), "mean")[1]
            for j in range(n_episodes)
        ]

    def _learn(self, state: mpo.LearnerState, buffer: ReplayBuffer, rng: np.random.Generator) -> mpo.LearnerState:
        if len(buffer) < self.config.mpo.batch_size:
            logger.debug("Replay holds %d transitions, skipping learner steps", len(buffer))
            return state
        for _ in range(self.config.mpo.updates_per_episode):
            state = self._profiled(mpo.learner_step, state, buffer, self.config.mpo, rng)
        return state

    def run_online(self) -> RunSummary:
        """Online MPO training for ceil(steps / 1000) episodes.

        Each episode samples actions from the current policy, appends its transitions to the replay
        buffer and the episode log, then runs `updates_per_episode` learner steps. Every
        `eval_period` episodes the mean-mode policy is evaluated and the learner is checkpointed;
        the final learner is always checkpointed.
        """
        config = self.config
        if config.algorithm != "mpo":
            raise ConfigError(f'Online training runs algorithm="mpo", config has "{config.algorithm}".')
        out_dir = config.out_dir
        out_dir.mkdir(parents=True, exist_ok=True)
        resolved = write_resolved_config(config)
        logger.info("Starting online run %r, resolved config in %s", self, resolved)

        n_episodes = math.ceil(config.steps / EPISODE_LENGTH)
        env = self._environment()
        state = mpo.init_learner(env.observation_size, config.mpo, stream(config.seed, "learner-init"))
        buffer = ReplayBuffer(min(DEFAULT_CAPACITY, max(n_episodes, 1) * EPISODE_LENGTH))
        train_csv = _CsvLog(out_dir / TRAIN_CSV, ["env_steps", "mean_episode_return"])
        eval_csv = _CsvLog(out_dir / EVAL_CSV, ["env_steps", "mean_eval_return"])
        writer = EpisodeLogWriter(
            out_dir / EPISODE_LOG, config.task_spec.n_balls, config.sim.history_length, config.task_spec.code
        )
        train_returns: List[float] = []
        eval_returns: List[Tuple[int, float]] = []

        def on_evaluation(episode_count: int, policy_state: mpo.LearnerState):
            env_steps = episode_count * EPISODE_LENGTH
            score = float(np.mean(self.evaluate_policy(policy_state.policy)))
            eval_returns.append((env_steps, score))
            eval_csv.write([env_steps, repr(score)])
            path = learner_checkpoint_path(out_dir, env_steps)
            path.parent.mkdir(parents=True, exist_ok=True)
            mpo.save_learner(path, policy_state)
            logger.info("Evaluation at %d env steps: mean return %.4f, checkpoint %s", env_steps, score, path)

        def on_episode(episode: int, transitions: List[Transition], episode_return: float):
            buffer.extend(transitions)
            writer.write_episode(transitions)
            train_returns.append(episode_return)
            train_csv.write([(episode + 1) * EPISODE_LENGTH, repr(episode_return)])
            logger.debug("Episode %d: mean return %.4f", episode, episode_return)

        try:
            if config.threaded:
                state = self._threaded_loop(env, state, buffer, n_episodes, on_episode, on_evaluation)
            else:
                actor_rng = stream(config.seed, "actor")
                learner_rng = stream(config.seed, "learner")
                for episode in tqdm(range(n_episodes), desc=f"mpo/{config.task}", disable=not self.progress):
                    transitions, episode_return = self.run_episode(
                        env, state.policy, seed_split(config.seed, f"episode-{episode}"), "sample",
                        actor_rng, episode,
                    )
                    on_episode(episode, transitions, episode_return)
                    state = self._learn(state, buffer, learner_rng)
                    if (episode + 1) % config.eval_period == 0:
                        on_evaluation(episode + 1, state)
            final = learner_checkpoint_path(out_dir, n_episodes * EPISODE_LENGTH)
            if not final.exists():
                final.parent.mkdir(parents=True, exist_ok=True)
                mpo.save_learner(final, state)
                logger.info("Wrote final checkpoint %s", final)
        finally:
            writer.close()
            train_csv.close()
            eval_csv.close()
        self._dump_profile(out_dir)
        return RunSummary(
            out_dir, n_episodes, n_episodes * EPISODE_LENGTH, state.update_count, train_returns, eval_returns
        )

    def _threaded_loop(self, env, state, buffer, n_episodes, on_episode, on_evaluation) -> mpo.LearnerState:
        """Actor thread collects episodes with the latest published policy; this thread learns.

        Policies are exchanged only at episode boundaries and the replay buffer is the only shared
        store, so results depend on thread timing.
        """
        config = self.config
        finished: "queue.Queue" = queue.Queue()
        snapshot = {"policy": state.policy.copy()}
        snapshot_lock = threading.Lock()
        errors: List[BaseException] = []

        def actor():
            actor_rng = stream(config.seed, "actor")
            try:
                for episode in range(n_episodes):
                    with snapshot_lock:
                        policy = snapshot["policy"]
                    transitions, episode_return = self.run_episode(
                        env, policy, seed_split(config.seed, f"episode-{episode}"), "sample", actor_rng, episode,
                        profiled=False,
                    )
                    on_episode(episode, transitions, episode_return)
                    finished.put(episode)
            except BaseException as err:
                errors.append(err)
                finished.put(None)

        thread = threading.Thread(target=actor, name="aeolus-actor", daemon=True)
        thread.start()
        learner_rng = stream(config.seed, "learner")
        for _ in tqdm(range(n_episodes), desc=f"mpo/{config.task} (threaded)", disable=not self.progress):
            episode = finished.get()
            if episode is None:
                break
            state = self._learn(state, buffer, learner_rng)
            with snapshot_lock:
                snapshot["policy"] = state.policy.copy()
            if (episode + 1) % config.eval_period == 0:
                on_evaluation(episode + 1, state)
        thread.join()
        if errors:
            raise errors[0]
        return state

    def run_offline(self, dataset: Union[str, Path], resume: bool = False) -> RunSummary:
        """Offline CRR training on the episode log `dataset`.

        Writes `provenance.txt` with the dataset path and SHA-256, then delegates to
        `offline_train()`; evaluations run mean-mode episodes of the configured task.

        Raises:
            DatasetError: If the dataset is missing.
            LogFormatError: If it is not a readable episode log.
            ConfigError: If its observations do not fit the configured task.
        """
        config = self.config
        out_dir = config.out_dir
        out_dir.mkdir(parents=True, exist_ok=True)
        log = read_log(dataset)
        digest = file_sha256(dataset)
        write_key_value_file(out_dir / PROVENANCE, {
            "dataset": str(Path(dataset)),
            "dataset_sha256": digest,
            "dataset_task": log.task_id,
            "dataset_transitions": str(log.n_transitions),
        })
        resolved = write_resolved_config(config)
        logger.info("Offline run on %s (sha256 %s), resolved config in %s", dataset, digest, resolved)

        env = self._environment()
        obs_dim = log.records.dtype["observation"].shape[0]
        if obs_dim != env.observation_size:
            raise ConfigError(
                f"Dataset observations have {obs_dim} entries, task {config.task} observes {env.observation_size}."
            )

        def evaluate(policy: MlpParams) -> float:
            return float(np.mean(self.evaluate_policy(policy, config.crr.eval_episodes)))

        state, records = offline_train(
            log_to_buffer(log), config.crr, config.steps, config.seed, out_dir, evaluate,
            resume=resume, progress=self.progress,
        )
        return RunSummary(
            out_dir, 0, 0, state.step, [], [(r.learner_steps, r.mean_eval_return) for r in records]
        )

    def evaluate_checkpoint(self, checkpoint: Union[str, Path], n_episodes: int) -> List[float]:
        """Run `n_episodes` mean-mode episodes of a saved learner, logging them to `episodes.bofl`
        and their returns to `eval_returns.csv` in the output directory.
        """
        config = self.config
        if n_episodes < 1:
            raise ConfigError(f"Evaluation needs at least one episode, got {n_episodes}")
        if config.algorithm == "mpo":
            policy = mpo.load_learner(checkpoint, config.mpo).policy
        else:
            policy = load_crr(checkpoint, config.crr).policy
        out_dir = config.out_dir
        out_dir.mkdir(parents=True, exist_ok=True)
        env = self._environment()
        returns: List[float] = []
        with EpisodeLogWriter(
            out_dir / EPISODE_LOG, config.task_spec.n_balls, config.sim.history_length, config.task_spec.code
        ) as writer:
            returns_csv = _CsvLog(out_dir / EVAL_RETURNS_CSV, ["episode", "mean_return"])
            try:
                for j in tqdm(range(n_episodes), desc="eval", disable=not self.progress):
                    transitions, episode_return = self.run_episode(
                        env, policy, seed_split(config.seed, f"eval-episode-{j}"), "mean", episode_id=j
                    )
                    writer.write_episode(transitions)
                    returns_csv.write([j, repr(episode_return)])
                    returns.append(episode_return)
            finally:
                returns_csv.close()
        logger.info("Evaluated %s over %d episodes: mean return %.4f", checkpoint, n_episodes, float(np.mean(returns)))
        return returns


def run_online(config: ExperimentConfig, progress: bool = False, profile: bool = False) -> RunSummary:
    return AeolusEngine(config, progress, profile).run_online()


def run_offline(
    config: ExperimentConfig, dataset: Union[str, Path], resume: bool = False, progress: bool = False
) -> RunSummary:
    return AeolusEngine(config, progress).run_offline(dataset, resume)
