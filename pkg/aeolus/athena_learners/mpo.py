"""
MPO Learner Module

Online Maximum a-posteriori Policy Optimization. One learner step fits the critic to TD targets,
reweights actions sampled from the target policy by a softmax of their Q values (E-step, with the
temperature tuned by its dual), and fits the policy to the reweighted samples under decoupled
mean/covariance KL trust regions against the target policy (M-step).

Classes:
    MpoConfig: Learner hyperparameters.
    LearnerState: Everything the learner updates.

Functions:
    estep_weights(): Per-state softmax of Q / eta.
    temperature_dual(): Dual value and gradient in eta.
    temperature_dual_step(): One projected gradient step on eta.
    policy_loss_graph(): Weighted likelihood plus KL penalties, as a graph.
    policy_loss(): Same as a float.
    init_learner(): Fresh learner state.
    learner_step(): One critic, temperature and policy update.
    save_learner() / load_learner(): BOFP checkpoints of a learner state.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import logsumexp, softmax

from aeolus.athena_learners.critic import critic_loss_graph, critic_targets, init_critic, q_values
from aeolus.athena_learners.policy import (
    init_policy,
    policy_distribution,
    policy_distribution_graph,
    squash,
    squashed_log_prob,
)
from aeolus.errors import ShapeMismatchError
from aeolus.metis_autodiff import tensor as T
from aeolus.metis_autodiff.adam import AdamState, adam_step
from aeolus.metis_autodiff.checkpoint import load_tensors, save_tensors
from aeolus.metis_autodiff.distributions import DiagGaussian, kl_cov_part, kl_mean_part
from aeolus.metis_autodiff.mlp import MlpParams
from aeolus.metis_autodiff.tensor import Tensor, value_and_grad
from aeolus.mnemosyne_replay.replay_buffer import ReplayBuffer

logger = logging.getLogger(__name__)

ETA_FLOOR = 1e-6


@dataclass(frozen=True)
class MpoConfig:
    """Learner hyperparameters.

    Attributes:
        gamma (float): Discount.
        epsilon_eta (float): KL bound of the E-step weights against uniform.
        epsilon_mean (float): KL bound on the policy mean change.
        epsilon_cov (float): KL bound on the policy covariance change.
        n_action_samples (int): Actions sampled per state in the E-step.
        batch_size (int): Transitions per learner step.
        updates_per_episode (int): Learner steps after each 1000-step episode.
        target_period (int): Learner steps between target-network refreshes.
        hidden_sizes (Tuple[int, ...]): Hidden widths of both networks.
        activation (str): Hidden nonlinearity of both networks.
        policy_lr (float): Adam step size of the policy.
        critic_lr (float): Adam step size of the critic.
        temperature_lr (float): Gradient step size of the temperature dual.
        init_temperature (float): Starting eta.
        fixed_beta (Optional[float]): If set, eta is held at this value and never tuned.
        alpha_mean_lr (float): Step size of the mean-KL multiplier.
        alpha_cov_lr (float): Step size of the covariance-KL multiplier.
        alpha_mean_max (float): Upper bound of the mean-KL multiplier.
        alpha_cov_max (float): Upper bound of the covariance-KL multiplier.
        avg_q (bool): Average the TD target over `n_action_samples` next actions.
    """

    gamma: float = 0.99
    epsilon_eta: float = 0.1
    epsilon_mean: float = 0.01
    epsilon_cov: float = 1e-5
    n_action_samples: int = 20
    batch_size: int = 256
    updates_per_episode: int = 250
    target_period: int = 200
    hidden_sizes: Tuple[int, ...] = field(default=(256, 256))
    activation: str = "tanh"
    policy_lr: float = 3e-4
    critic_lr: float = 3e-4
    temperature_lr: float = 0.1
    init_temperature: float = 1.0
    fixed_beta: Optional[float] = None
    alpha_mean_lr: float = 1.0
    alpha_cov_lr: float = 100.0
    alpha_mean_max: float = 0.1
    alpha_cov_max: float = 10.0
    avg_q: bool = False

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ValueError(f"MpoConfig.gamma (={self.gamma}) must be in (0, 1).")
        for name in ("epsilon_eta", "epsilon_mean", "epsilon_cov", "policy_lr", "critic_lr",
                     "temperature_lr", "init_temperature"):
            if not getattr(self, name) > 0:
                raise ValueError(f"MpoConfig.{name} (={getattr(self, name)}) must be > 0.")
        if self.n_action_samples < 2:
            raise ValueError(f"MpoConfig.n_action_samples (={self.n_action_samples}) must be >= 2.")
        for name in ("batch_size", "target_period"):
            if getattr(self, name) < 1:
                raise ValueError(f"MpoConfig.{name} (={getattr(self, name)}) must be >= 1.")
        if self.updates_per_episode < 0:
            raise ValueError("MpoConfig.updates_per_episode must be >= 0.")
        if self.fixed_beta is not None and self.fixed_beta <= 0:
            raise ValueError(f"MpoConfig.fixed_beta (={self.fixed_beta}) must be > 0.")


@dataclass
class LearnerState:
    """Everything the learner updates.

    Attributes:
        policy (MlpParams): Policy parameters theta.
        critic (MlpParams): Critic parameters phi.
        target_policy (MlpParams): Snapshot theta' used to sample E-step actions and bound the M-step.
        target_critic (MlpParams): Snapshot phi' used for TD targets.
        policy_opt (AdamState): Policy optimizer state.
        critic_opt (AdamState): Critic optimizer state.
        eta (float): Temperature, always > 0.
        alpha_mean (float): Lagrange multiplier of the mean-KL bound.
        alpha_cov (float): Lagrange multiplier of the covariance-KL bound.
        update_count (int): Learner steps taken.
        metrics (Dict[str, float]): Diagnostics of the last step.
    """

    policy: MlpParams
    critic: MlpParams
    target_policy: MlpParams
    target_critic: MlpParams
    policy_opt: AdamState
    critic_opt: AdamState
    eta: float
    alpha_mean: float = 0.0
    alpha_cov: float = 0.0
    update_count: int = 0
    metrics: Dict[str, float] = field(default_factory=dict)

    def __repr__(self):
        return f"LearnerState(update_count={self.update_count}, eta={self.eta:.4g})"


def estep_weights(q: np.ndarray, eta: float) -> np.ndarray:
    """Per-state softmax over sampled actions of Q / eta.

    Args:
        q (np.ndarray): (n_states, n_actions) Q values.
        eta (float): Temperature, > 0.

    Returns:
        np.ndarray: Non-negative weights summing to 1 along the last axis.
    """
    if eta <= 0:
        raise ValueError(f"Temperature eta={eta} must be > 0.")
    return softmax(np.asarray(q, dtype=np.float64) / eta, axis=-1)


def temperature_dual(q: np.ndarray, eta: float, epsilon: float) -> Tuple[float, float]:
    """Dual g(eta) = eta * epsilon + eta * mean_s log mean_j exp(Q_sj / eta) and dg/deta."""
    q = np.asarray(q, dtype=np.float64)
    n_actions = q.shape[-1]
    log_mean_exp = logsumexp(q / eta, axis=-1) - np.log(n_actions)
    weights = estep_weights(q, eta)
    expected_q = np.sum(weights * q, axis=-1)
    value = eta * epsilon + eta * np.mean(log_mean_exp)
    gradient = epsilon + np.mean(log_mean_exp - expected_q / eta)
    return float(value), float(gradient)


def temperature_dual_step(q: np.ndarray, eta: float, epsilon: float, learning_rate: float = 0.1) -> float:
    """One gradient step on the temperature dual, projected onto eta >= 1e-6."""
    _, gradient = temperature_dual(q, eta, epsilon)
    return max(eta - learning_rate * gradient, ETA_FLOOR)


def _mpo_terms(
    layer_sizes: Sequence[int],
    flat_params: Sequence[Tensor],
    observations: np.ndarray,
    actions: np.ndarray,
    weights: np.ndarray,
    old: DiagGaussian,
    activation: str,
) -> Tuple[Tensor, Tensor, Tensor]:
    n_states, n_actions = weights.shape
    if actions.shape[:2] != (n_actions, n_states):
        raise ShapeMismatchError(
            f"Sampled actions {actions.shape[:2]} do not match weights (states, actions)={weights.shape}"
        )
    new = policy_distribution_graph(layer_sizes, flat_params, observations, activation)
    log_probs = squashed_log_prob(new, actions)
    weighted = T.mean(T.sum(log_probs * weights.T, axis=0))
    kl_mean = T.mean(kl_mean_part(old, new))
    kl_cov = T.mean(kl_cov_part(old, new))
    return weighted, kl_mean, kl_cov


def policy_loss_graph(
    layer_sizes: Sequence[int],
    flat_params: Sequence[Tensor],
    observations: np.ndarray,
    actions: np.ndarray,
    weights: np.ndarray,
    old: DiagGaussian,
    alpha_mean: float,
    alpha_cov: float,
    activation: str = "tanh",
) -> Tensor:
    """-mean_s sum_j w_sj log pi(a_j | s) + alpha_mean KL_mean + alpha_cov KL_cov.

    Args:
        observations (np.ndarray): (n_states, obs_dim).
        actions (np.ndarray): (n_actions, n_states, 9) squashed actions.
        weights (np.ndarray): (n_states, n_actions) E-step weights.
        old (DiagGaussian): Constant distribution of the frozen policy at `observations`.

    Raises:
        ShapeMismatchError: If the weight and action counts disagree.
    """
    weighted, kl_mean, kl_cov = _mpo_terms(
        layer_sizes, flat_params, observations, actions, weights, old, activation
    )
    return -weighted + alpha_mean * kl_mean + alpha_cov * kl_cov


def policy_loss(
    observations: np.ndarray,
    actions: np.ndarray,
    weights: np.ndarray,
    policy: MlpParams,
    old_policy: MlpParams,
    alpha_mean: float = 0.0,
    alpha_cov: float = 0.0,
) -> float:
    old = policy_distribution(old_policy, observations).detach()
    loss = policy_loss_graph(
        policy.layer_sizes, [T.as_tensor(p) for p in policy.flat()], observations, actions,
        np.asarray(weights, dtype=np.float64), old, alpha_mean, alpha_cov, policy.activation,
    )
    return loss.item()


def init_learner(obs_dim: int, config: MpoConfig, rng: np.random.Generator) -> LearnerState:
    policy = init_policy(obs_dim, config.hidden_sizes, rng, config.activation)
    critic = init_critic(obs_dim, config.hidden_sizes, rng, config.activation)
    return LearnerState(
        policy=policy,
        critic=critic,
        target_policy=policy.copy(),
        target_critic=critic.copy(),
        policy_opt=AdamState.zeros_like(policy.flat(), config.policy_lr),
        critic_opt=AdamState.zeros_like(critic.flat(), config.critic_lr),
        eta=config.fixed_beta if config.fixed_beta is not None else config.init_temperature,
    )


def critic_update(
    critic: MlpParams,
    critic_opt: AdamState,
    batch,
    targets: np.ndarray,
) -> Tuple[MlpParams, AdamState, float]:
    """One Adam step of the critic towards fixed TD targets."""
    loss, grads = value_and_grad(
        lambda p: critic_loss_graph(critic.layer_sizes, p, batch, targets, critic.activation),
        critic.flat(),
    )
    new_flat, new_opt = adam_step(critic.flat(), grads, critic_opt)
    return MlpParams.from_flat(critic.layer_sizes, new_flat, critic.activation), new_opt, loss


def learner_step(
    state: LearnerState, buffer: ReplayBuffer, config: MpoConfig, rng: np.random.Generator
) -> LearnerState:
    """One critic Adam step, one temperature dual step and one policy Adam step.

    TD next actions come from the current policy and are scored by the target critic; E-step
    actions come from the target policy.

    Targets are refreshed from the online networks every `target_period` steps.

    Raises:
        DatasetError: If the buffer holds fewer than `batch_size` transitions.
    """
    batch = buffer.sample_batch(config.batch_size, rng)
    n_next = config.n_action_samples if config.avg_q else 1
    targets = critic_targets(batch, state.policy, state.target_critic, config.gamma, rng, n_next)
    critic, critic_opt, q_loss = critic_update(state.critic, state.critic_opt, batch, targets)

    old = policy_distribution(state.target_policy, batch.observations).detach()
    actions = squash(old.sample(rng, config.n_action_samples))
    q = q_values(critic, batch.observations, actions).T
    if config.fixed_beta is None:
        eta = temperature_dual_step(q, state.eta, config.epsilon_eta, config.temperature_lr)
    else:
        eta = config.fixed_beta
    weights = estep_weights(q, eta)

    policy = state.policy
    kls: List[float] = []

    def loss_fn(params):
        weighted, kl_mean, kl_cov = _mpo_terms(
            policy.layer_sizes, params, batch.observations, actions, weights, old, policy.activation
        )
        kls[:] = [kl_mean.item(), kl_cov.item()]
        return -weighted + state.alpha_mean * kl_mean + state.alpha_cov * kl_cov

    pi_loss, grads = value_and_grad(loss_fn, policy.flat())
    new_flat, policy_opt = adam_step(policy.flat(), grads, state.policy_opt)
    policy = MlpParams.from_flat(policy.layer_sizes, new_flat, policy.activation)

    kl_mean, kl_cov = kls
    alpha_mean = float(np.clip(
        state.alpha_mean - config.alpha_mean_lr * (config.epsilon_mean - kl_mean), 0.0, config.alpha_mean_max
    ))
    alpha_cov = float(np.clip(
        state.alpha_cov - config.alpha_cov_lr * (config.epsilon_cov - kl_cov), 0.0, config.alpha_cov_max
    ))

    update_count = state.update_count + 1
    target_policy, target_critic = state.target_policy, state.target_critic
    if update_count % config.target_period == 0:
        target_policy, target_critic = policy.copy(), critic.copy()
    return LearnerState(
        policy=policy,
        critic=critic,
        target_policy=target_policy,
        target_critic=target_critic,
        policy_opt=policy_opt,
        critic_opt=critic_opt,
        eta=eta,
        alpha_mean=alpha_mean,
        alpha_cov=alpha_cov,
        update_count=update_count,
        metrics={
            "critic_loss": q_loss,
            "policy_loss": pi_loss,
            "eta": eta,
            "kl_mean": kl_mean,
            "kl_cov": kl_cov,
        },
    )


def adam_to_arrays(opt: AdamState) -> List[np.ndarray]:
    return [*opt.first_moments, *opt.second_moments]


def adam_from_arrays(arrays: Sequence[np.ndarray], step: int, learning_rate: float) -> AdamState:
    half = len(arrays) // 2
    return AdamState(arrays[:half], arrays[half:], step=step, learning_rate=learning_rate)


def mlp_from_arrays(arrays: Sequence[np.ndarray], activation: str) -> MlpParams:
    """Rebuild an MLP from its [W0, b0, ...] arrays, reading the layer sizes off the weights."""
    weights = arrays[0::2]
    sizes = [weights[0].shape[0]] + [w.shape[1] for w in weights]
    return MlpParams.from_flat(sizes, arrays, activation)


def save_learner(path: Union[str, Path], state: LearnerState):
    """Write a learner state as a BOFP file.

    Layout: a header vector [n_policy, n_critic, eta, alpha_mean, alpha_cov, update_count,
    policy_opt.step, critic_opt.step], then policy, critic, target policy, target critic and the
    policy and critic Adam moments.
    """
    n_policy, n_critic = len(state.policy.flat()), len(state.critic.flat())
    header = np.array([
        n_policy, n_critic, state.eta, state.alpha_mean, state.alpha_cov, state.update_count,
        state.policy_opt.step, state.critic_opt.step,
    ], dtype=np.float64)
    save_tensors(path, [
        header,
        *state.policy.flat(),
        *state.critic.flat(),
        *state.target_policy.flat(),
        *state.target_critic.flat(),
        *adam_to_arrays(state.policy_opt),
        *adam_to_arrays(state.critic_opt),
    ])
    logger.debug("Saved %r to %s", state, path)


def load_learner(path: Union[str, Path], config: MpoConfig) -> LearnerState:
    arrays = load_tensors(path)
    header, rest = arrays[0], arrays[1:]
    n_policy, n_critic = int(header[0]), int(header[1])
    sections = [n_policy, n_critic, n_policy, n_critic, 2 * n_policy, 2 * n_critic]
    chunks, start = [], 0
    for size in sections:
        chunks.append(rest[start:start + size])
        start += size
    policy, critic, target_policy, target_critic, policy_moments, critic_moments = chunks
    return LearnerState(
        policy=mlp_from_arrays(policy, config.activation),
        critic=mlp_from_arrays(critic, config.activation),
        target_policy=mlp_from_arrays(target_policy, config.activation),
        target_critic=mlp_from_arrays(target_critic, config.activation),
        policy_opt=adam_from_arrays(policy_moments, int(header[6]), config.policy_lr),
        critic_opt=adam_from_arrays(critic_moments, int(header[7]), config.critic_lr),
        eta=float(header[2]),
        alpha_mean=float(header[3]),
        alpha_cov=float(header[4]),
        update_count=int(header[5]),
    )
