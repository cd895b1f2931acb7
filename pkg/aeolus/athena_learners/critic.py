"""
Critic Module

The state-action value network and its temporal-difference loss. Targets are computed outside the
graph with the target critic and actions drawn from the acting-as-previous policy, so gradients
reach only the online critic.

Functions:
    init_critic(): Fresh critic parameters.
    q_values(): Q for observations and (possibly sample-stacked) actions, no graph.
    q_graph(): Q differentiable in the critic parameters.
    critic_targets(): r + gamma (1 - done) Q'(s', a'), a' ~ policy.
    critic_loss_graph(): Mean squared TD error as a graph.
    critic_loss(): Mean squared TD error for a batch, as a float.
"""

from typing import Sequence

import numpy as np

from aeolus.athena_learners.policy import ACTION_DIM, normalize_observations, policy_distribution, squash
from aeolus.errors import DatasetError
from aeolus.metis_autodiff import tensor as T
from aeolus.metis_autodiff.mlp import MlpParams, mlp_apply, mlp_forward
from aeolus.metis_autodiff.tensor import Tensor
from aeolus.mnemosyne_replay.transition import TransitionBatch


def init_critic(
    obs_dim: int, hidden_sizes: Sequence[int], rng: np.random.Generator, activation: str = "tanh"
) -> MlpParams:
    return MlpParams.init([obs_dim + ACTION_DIM, *hidden_sizes, 1], rng, activation)


def critic_inputs(observations, actions) -> np.ndarray:
    """Concatenate normalized observations with actions mapped from [0, 1] to [-1, 1].

    `actions` may carry leading sample axes; observations are broadcast across them.
    """
    obs = normalize_observations(observations)
    actions = np.asarray(actions, dtype=np.float64)
    obs = np.broadcast_to(obs, actions.shape[:-1] + obs.shape[-1:])
    return np.concatenate([obs, 2.0 * actions - 1.0], axis=-1)


def q_values(params: MlpParams, observations, actions) -> np.ndarray:
    """Q(s, a) with shape `actions.shape[:-1]`."""
    inputs = critic_inputs(observations, actions)
    flat = inputs.reshape(-1, inputs.shape[-1])
    return mlp_forward(params, flat)[:, 0].reshape(inputs.shape[:-1])


def q_graph(
    layer_sizes: Sequence[int], flat_params: Sequence[Tensor], observations, actions, activation: str = "tanh"
) -> Tensor:
    """Q(s, a) for a (B, obs) / (B, 9) batch, shape (B,), differentiable in `flat_params`."""
    out = mlp_apply(layer_sizes, flat_params, critic_inputs(observations, actions), activation)
    return T.sum(out, axis=-1)


def critic_targets(
    batch: TransitionBatch,
    policy: MlpParams,
    target_critic: MlpParams,
    gamma: float,
    rng: np.random.Generator,
    n_next: int = 1,
) -> np.ndarray:
    """TD targets r + gamma (1 - done) mean_j Q'(s', a'_j) with a'_j ~ policy(s'), j < n_next."""
    next_dist = policy_distribution(policy, batch.next_observations)
    next_actions = squash(next_dist.sample(rng, n_next))
    next_q = q_values(target_critic, batch.next_observations, next_actions).mean(axis=0)
    return batch.rewards + gamma * (1.0 - batch.dones) * next_q


def critic_loss_graph(
    layer_sizes: Sequence[int],
    flat_params: Sequence[Tensor],
    batch: TransitionBatch,
    targets: np.ndarray,
    activation: str = "tanh",
) -> Tensor:
    if batch.size == 0:
        raise DatasetError("Critic loss needs a non-empty batch.")
    q = q_graph(layer_sizes, flat_params, batch.observations, batch.actions, activation)
    return T.mean(T.square(q - targets))


def critic_loss(
    batch: TransitionBatch,
    policy: MlpParams,
    critic: MlpParams,
    target_critic: MlpParams,
    gamma: float,
    rng: np.random.Generator,
    n_next: int = 1,
) -> float:
    """Mean squared TD error of `critic` on `batch`."""
    if batch.size == 0:
        raise DatasetError("Critic loss needs a non-empty batch.")
    targets = critic_targets(batch, policy, target_critic, gamma, rng, n_next)
    q = q_values(critic, batch.observations, batch.actions)
    return float(np.mean(np.square(targets - q)))
