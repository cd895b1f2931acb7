"""
CRR Learner Module

Offline Critic Regularized Regression: the MPO actor update specialized to dataset states and
actions. Logged actions are cloned with weights min(exp(A / beta), w_max), where the advantage A
compares the logged action against actions the current policy would take, and the critic is
trained on dataset transitions with the same TD loss as online MPO.

Classes:
    CrrConfig: Offline learner hyperparameters.
    CrrState: Everything the offline learner updates.
    EvalRecord: One intermittent evaluation.

Functions:
    advantage(): Q(s, a) minus the mean Q of policy samples at s.
    crr_weights(): Clipped exponential advantage weights.
    crr_policy_loss_graph(): Weighted negative log-likelihood as a graph.
    crr_policy_loss(): Same for a batch, as a float.
    crr_learner_step(): One critic and one policy update.
    offline_train(): Full offline run with evaluations, checkpoints and resume.
    action_support_ratio(): How far policy actions stray from the dataset's actions.
"""

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from tqdm import tqdm

from aeolus.aeolus_engine.seeding import stream
from aeolus.athena_learners.critic import critic_targets, init_critic, q_values
from aeolus.athena_learners.mpo import adam_to_arrays, adam_from_arrays, critic_update, mlp_from_arrays
from aeolus.athena_learners.policy import (
    init_policy,
    policy_distribution,
    policy_distribution_graph,
    squash,
    squashed_log_prob,
)
from aeolus.errors import DatasetError
from aeolus.metis_autodiff import tensor as T
from aeolus.metis_autodiff.adam import AdamState, adam_step
from aeolus.metis_autodiff.checkpoint import load_tensors, save_tensors
from aeolus.metis_autodiff.mlp import MlpParams
from aeolus.metis_autodiff.tensor import Tensor, value_and_grad
from aeolus.mnemosyne_replay.replay_buffer import ReplayBuffer
from aeolus.mnemosyne_replay.transition import TransitionBatch

logger = logging.getLogger(__name__)

EVAL_CSV = "offline_eval.csv"
CHECKPOINT_DIR = "checkpoints"
CHECKPOINT_PREFIX = "crr_"


@dataclass(frozen=True)
class CrrConfig:
    """Offline learner hyperparameters.

    Attributes:
        beta (float): Advantage temperature.
        weight_clip (float): Largest weight w_max.
        advantage_samples (int): Policy samples m in the advantage baseline.
        batch_size (int): Dataset transitions per learner step.
        eval_period (int): Learner steps between evaluations.
        eval_episodes (int): Simulator episodes per evaluation.
        gamma (float): Discount of the critic's TD targets.
        target_period (int): Learner steps between target-critic refreshes.
        hidden_sizes (Tuple[int, ...]): Hidden widths of both networks.
        activation (str): Hidden nonlinearity.
        policy_lr (float): Adam step size of the policy.
        critic_lr (float): Adam step size of the critic.
        behavior_cloning (bool): Use unit weights (plain behavior cloning).
    """

    beta: float = 1.0
    weight_clip: float = 20.0
    advantage_samples: int = 4
    batch_size: int = 256
    eval_period: int = 10_000
    eval_episodes: int = 10
    gamma: float = 0.99
    target_period: int = 200
    hidden_sizes: Tuple[int, ...] = field(default=(256, 256))
    activation: str = "tanh"
    policy_lr: float = 3e-4
    critic_lr: float = 3e-4
    behavior_cloning: bool = False

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError(f"CrrConfig.beta (={self.beta}) must be > 0.")
        if not self.weight_clip >= 1:
            raise ValueError(f"CrrConfig.weight_clip (={self.weight_clip}) must be >= 1.")
        for name in ("advantage_samples", "batch_size", "eval_period", "eval_episodes", "target_period"):
            if getattr(self, name) < 1:
                raise ValueError(f"CrrConfig.{name} (={getattr(self, name)}) must be >= 1.")
        if not 0.0 < self.gamma < 1.0:
            raise ValueError(f"CrrConfig.gamma (={self.gamma}) must be in (0, 1).")


@dataclass
class CrrState:
    policy: MlpParams
    critic: MlpParams
    target_critic: MlpParams
    policy_opt: AdamState
    critic_opt: AdamState
    step: int = 0
    metrics: Dict[str, float] = field(default_factory=dict)

    def __repr__(self):
        return f"CrrState(step={self.step})"


class EvalRecord(NamedTuple):
    learner_steps: int
    mean_eval_return: float


def advantage(
    critic: MlpParams,
    observations: np.ndarray,
    actions: np.ndarray,
    policy: MlpParams,
    m: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """A(s, a) = Q(s, a) - (1/m) sum_j Q(s, a_j), a_j ~ policy(s); one value per row."""
    q = q_values(critic, observations, actions)
    samples = squash(policy_distribution(policy, observations).sample(rng, m))
    baseline = q_values(critic, observations, samples).mean(axis=0)
    return q - baseline


def crr_weights(advantages: np.ndarray, beta: float, weight_clip: float) -> np.ndarray:
    """min(exp(A / beta), w_max), kept strictly positive."""
    scaled = np.minimum(np.asarray(advantages, dtype=np.float64) / beta, np.log(weight_clip))
    weights = np.minimum(np.exp(scaled), weight_clip)
    return np.maximum(weights, np.finfo(np.float64).tiny)


def crr_policy_loss_graph(
    layer_sizes: Sequence[int],
    flat_params: Sequence[Tensor],
    observations: np.ndarray,
    actions: np.ndarray,
    weights: np.ndarray,
    activation: str = "tanh",
) -> Tensor:
    """-mean_i w_i log pi(a_i | s_i)."""
    if len(weights) == 0:
        raise DatasetError("CRR policy loss needs a non-empty batch.")
    d = policy_distribution_graph(layer_sizes, flat_params, observations, activation)
    return -T.mean(squashed_log_prob(d, actions) * np.asarray(weights, dtype=np.float64))


def crr_policy_loss(
    batch: TransitionBatch,
    policy: MlpParams,
    critic: MlpParams,
    config: CrrConfig,
    rng: np.random.Generator,
) -> float:
    if batch.size == 0:
        raise DatasetError("CRR policy loss needs a non-empty batch.")
    adv = advantage(critic, batch.observations, batch.actions, policy, config.advantage_samples, rng)
    weights = np.ones_like(adv) if config.behavior_cloning else crr_weights(adv, config.beta, config.weight_clip)
    loss = crr_policy_loss_graph(
        policy.layer_sizes, [T.as_tensor(p) for p in policy.flat()],
        batch.observations, batch.actions, weights, policy.activation,
    )
    return loss.item()


def init_crr(obs_dim: int, config: CrrConfig, rng: np.random.Generator) -> CrrState:
    policy = init_policy(obs_dim, config.hidden_sizes, rng, config.activation)
    critic = init_critic(obs_dim, config.hidden_sizes, rng, config.activation)
    return CrrState(
        policy=policy,
        critic=critic,
        target_critic=critic.copy(),
        policy_opt=AdamState.zeros_like(policy.flat(), config.policy_lr),
        critic_opt=AdamState.zeros_like(critic.flat(), config.critic_lr),
    )


def crr_learner_step(
    state: CrrState, dataset: ReplayBuffer, config: CrrConfig, rng: np.random.Generator
) -> CrrState:
    """One critic Adam step on dataset TD targets, then one weighted-cloning policy step.

    The advantage is always evaluated, also in behavior-cloning mode, so both modes consume the
    same random draws.
    """
    batch = dataset.sample_batch(config.batch_size, rng)
    targets = critic_targets(batch, state.policy, state.target_critic, config.gamma, rng)
    critic, critic_opt, q_loss = critic_update(state.critic, state.critic_opt, batch, targets)

    adv = advantage(critic, batch.observations, batch.actions, state.policy, config.advantage_samples, rng)
    weights = np.ones_like(adv) if config.behavior_cloning else crr_weights(adv, config.beta, config.weight_clip)
    policy = state.policy
    pi_loss, grads = value_and_grad(
        lambda p: crr_policy_loss_graph(
            policy.layer_sizes, p, batch.observations, batch.actions, weights, policy.activation
        ),
        policy.flat(),
    )
    new_flat, policy_opt = adam_step(policy.flat(), grads, state.policy_opt)

    step = state.step + 1
    target_critic = critic.copy() if step % config.target_period == 0 else state.target_critic
    return CrrState(
        policy=MlpParams.from_flat(policy.layer_sizes, new_flat, policy.activation),
        critic=critic,
        target_critic=target_critic,
        policy_opt=policy_opt,
        critic_opt=critic_opt,
        step=step,
        metrics={"critic_loss": q_loss, "policy_loss": pi_loss, "mean_weight": float(np.mean(weights))},
    )


def save_crr(path: Union[str, Path], state: CrrState):
    """BOFP layout: [n_policy, n_critic, step, policy_opt.step, critic_opt.step], policy, critic,
    target critic, policy Adam moments, critic Adam moments."""
    n_policy, n_critic = len(state.policy.flat()), len(state.critic.flat())
    header = np.array(
        [n_policy, n_critic, state.step, state.policy_opt.step, state.critic_opt.step], dtype=np.float64
    )
    save_tensors(path, [
        header,
        *state.policy.flat(),
        *state.critic.flat(),
        *state.target_critic.flat(),
        *adam_to_arrays(state.policy_opt),
        *adam_to_arrays(state.critic_opt),
    ])


def load_crr(path: Union[str, Path], config: CrrConfig) -> CrrState:
    arrays = load_tensors(path)
    header, rest = arrays[0], arrays[1:]
    n_policy, n_critic = int(header[0]), int(header[1])
    sections = [n_policy, n_critic, n_critic, 2 * n_policy, 2 * n_critic]
    chunks, start = [], 0
    for size in sections:
        chunks.append(rest[start:start + size])
        start += size
    policy, critic, target_critic, policy_moments, critic_moments = chunks
    return CrrState(
        policy=mlp_from_arrays(policy, config.activation),
        critic=mlp_from_arrays(critic, config.activation),
        target_critic=mlp_from_arrays(target_critic, config.activation),
        policy_opt=adam_from_arrays(policy_moments, int(header[3]), config.policy_lr),
        critic_opt=adam_from_arrays(critic_moments, int(header[4]), config.critic_lr),
        step=int(header[2]),
    )


def checkpoint_path(out_dir: Union[str, Path], step: int) -> Path:
    return Path(out_dir) / CHECKPOINT_DIR / f"{CHECKPOINT_PREFIX}{step:08d}.bofp"


def latest_checkpoint(out_dir: Union[str, Path]) -> Optional[Path]:
    paths = sorted((Path(out_dir) / CHECKPOINT_DIR).glob(f"{CHECKPOINT_PREFIX}*.bofp"))
    return paths[-1] if paths else None


def _read_eval_csv(path: Path, up_to_step: int) -> List[EvalRecord]:
    if not path.exists():
        return []
    with open(path, newline="") as handle:
        rows = list(csv.DictReader(handle))
    records = [EvalRecord(int(r["learner_steps"]), float(r["mean_eval_return"])) for r in rows]
    return [r for r in records if r.learner_steps <= up_to_step]


def _write_eval_csv(path: Path, records: Sequence[EvalRecord]):
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(EvalRecord._fields)
        for record in records:
            writer.writerow([record.learner_steps, repr(record.mean_eval_return)])


def offline_train(
    dataset: ReplayBuffer,
    config: CrrConfig,
    total_steps: int,
    seed: int,
    out_dir: Union[str, Path],
    evaluate: Callable[[MlpParams], float],
    resume: bool = False,
    progress: bool = False,
    step_hook: Optional[Callable[[CrrState], None]] = None,
) -> Tuple[CrrState, List[EvalRecord]]:
    """Train CRR on `dataset` for `total_steps` learner steps.

    The initial parameters are checkpointed at step 0. Every `eval_period` steps the mean-mode
    policy is scored by `evaluate`, a checkpoint is written and a row is added to the evaluation
    CSV; the final state is always checkpointed. Each step draws from its own seed split, so a run
    resumed from a checkpoint ends in exactly the state of an uninterrupted run.

    Args:
        dataset (ReplayBuffer): Logged transitions.
        config (CrrConfig): Hyperparameters.
        total_steps (int): Learner steps to reach.
        seed (int): Root seed.
        out_dir (Union[str, Path]): Receives checkpoints/ and the evaluation CSV.
        evaluate (Callable[[MlpParams], float]): Mean evaluation return of a policy.
        resume (bool): Continue from the last checkpoint in `out_dir`, if any.
        progress (bool): Show a progress bar.
        step_hook (Optional[Callable[[CrrState], None]]): Called after every learner step.

    Raises:
        DatasetError: If the dataset is empty or smaller than a batch.

    Returns:
        Tuple[CrrState, List[EvalRecord]]: Final state and every evaluation of the run.
    """
    if len(dataset) == 0:
        raise DatasetError("Offline training needs a non-empty dataset.")
    out_dir = Path(out_dir)
    csv_path = out_dir / EVAL_CSV
    out_dir.mkdir(parents=True, exist_ok=True)
    obs_dim = dataset.get(0).observation.shape[0]

    last = latest_checkpoint(out_dir) if resume else None
    if last is not None:
        state = load_crr(last, config)
        records = _read_eval_csv(csv_path, state.step)
        logger.info("Resuming offline training from %s (step %d)", last, state.step)
    else:
        state = init_crr(obs_dim, config, stream(seed, "crr-init"))
        records = []
        save_crr(checkpoint_path(out_dir, 0), state)
    _write_eval_csv(csv_path, records)

    for _ in tqdm(range(state.step, total_steps), desc="crr", disable=not progress):
        state = crr_learner_step(state, dataset, config, stream(seed, f"crr-step-{state.step}"))
        if step_hook is not None:
            step_hook(state)
        if state.step % config.eval_period == 0:
            record = EvalRecord(state.step, float(evaluate(state.policy)))
            records.append(record)
            save_crr(checkpoint_path(out_dir, state.step), state)
            _write_eval_csv(csv_path, records)
            logger.info("CRR step %d: mean eval return %.4f", record.learner_steps, record.mean_eval_return)
    if not checkpoint_path(out_dir, state.step).exists():
        save_crr(checkpoint_path(out_dir, state.step), state)
    return state, records


def action_support_ratio(
    policy: MlpParams, observations: np.ndarray, actions: np.ndarray
) -> float:
    """Mean distance from each mean-mode policy action to its nearest dataset action, divided by the
    mean nearest-neighbor distance among the dataset actions themselves."""
    dataset_actions = np.asarray(actions, dtype=np.float64)
    if len(dataset_actions) < 2:
        raise DatasetError("Support ratio needs at least 2 dataset actions.")
    policy_actions = squash(policy_distribution(policy, observations).mean.value)
    to_data = np.linalg.norm(policy_actions[:, None, :] - dataset_actions[None, :, :], axis=-1)
    within = np.linalg.norm(dataset_actions[:, None, :] - dataset_actions[None, :, :], axis=-1)
    np.fill_diagonal(within, np.inf)
    self_distance = float(np.mean(within.min(axis=1)))
    return float(np.mean(to_data.min(axis=1))) / max(self_distance, 1e-12)
