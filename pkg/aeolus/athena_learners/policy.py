"""
Policy Module

The Gaussian policy shared by both learners: an MLP maps a normalized observation to the mean and
log standard deviation of a diagonal Gaussian over nine pre-squash actions, and a per-dimension
logistic map squashes samples onto valve openings in (0, 1).

Functions:
    normalize_observations(): Pixel observations to roughly [-1, 1].
    init_policy(): Fresh policy parameters.
    policy_distribution(): Action distribution from parameter arrays (no graph).
    policy_distribution_graph(): Action distribution from parameter tensors (graph recorded).
    squash() / unsquash(): The logistic map and its clipped inverse.
    squashed_log_prob(): Log density of squashed actions.
    act(): Sample or mean action for one observation.

Mythology:
    Athena, goddess of wisdom and strategy, sprang fully armed from the head of Zeus. Her counsel
    was always an action weighed against its likely outcome.
"""

from typing import Sequence, Tuple

import numpy as np
from scipy.special import expit, logit

from aeolus.boreas_sim.sim_config import N_NOZZLES
from aeolus.metis_autodiff import tensor as T
from aeolus.metis_autodiff.distributions import DiagGaussian, gaussian_log_prob
from aeolus.metis_autodiff.mlp import MlpParams, mlp_apply, mlp_forward
from aeolus.metis_autodiff.tensor import Tensor

ACTION_DIM = N_NOZZLES
# Pixel observations are centered on the grid middle and scaled to about [-1, 1].
OBS_CENTER = 350.0
# Squashed actions are kept this far from 0 and 1 before inverting the logistic map.
ACTION_EPSILON = 1e-6
POLICY_OUTPUT_SCALE = 1e-2


def normalize_observations(observations) -> np.ndarray:
    return np.asarray(observations, dtype=np.float64) / OBS_CENTER - 1.0


def init_policy(
    obs_dim: int,
    hidden_sizes: Sequence[int],
    rng: np.random.Generator,
    activation: str = "tanh",
) -> MlpParams:
    """Policy network [obs_dim, *hidden, 2 * 9]; a small output layer starts it near N(0, 1)."""
    sizes = [obs_dim, *hidden_sizes, 2 * ACTION_DIM]
    return MlpParams.init(sizes, rng, activation, output_scale=POLICY_OUTPUT_SCALE)


def policy_distribution(params: MlpParams, observations) -> DiagGaussian:
    out = mlp_forward(params, normalize_observations(observations))
    return DiagGaussian(out[..., :ACTION_DIM], out[..., ACTION_DIM:])


def _head_selectors() -> Tuple[np.ndarray, np.ndarray]:
    eye = np.eye(ACTION_DIM)
    zeros = np.zeros((ACTION_DIM, ACTION_DIM))
    return np.vstack([eye, zeros]), np.vstack([zeros, eye])


_SELECT_MEAN, _SELECT_LOG_STD = _head_selectors()


def policy_distribution_graph(
    layer_sizes: Sequence[int], flat_params: Sequence[Tensor], observations, activation: str = "tanh"
) -> DiagGaussian:
    """Same as `policy_distribution` but differentiable in `flat_params`."""
    out = mlp_apply(layer_sizes, flat_params, normalize_observations(observations), activation)
    return DiagGaussian(T.matmul(out, _SELECT_MEAN), T.matmul(out, _SELECT_LOG_STD))


def squash(pre_actions) -> np.ndarray:
    return expit(pre_actions)


def unsquash(actions) -> np.ndarray:
    return logit(np.clip(np.asarray(actions, dtype=np.float64), ACTION_EPSILON, 1.0 - ACTION_EPSILON))


def squashed_log_prob(d: DiagGaussian, actions) -> Tensor:
    """Log density of valve openings under the logistic-squashed Gaussian `d`.

    `actions` may carry leading sample axes in front of the distribution's batch shape.
    """
    clipped = np.clip(np.asarray(actions, dtype=np.float64), ACTION_EPSILON, 1.0 - ACTION_EPSILON)
    log_jacobian = np.sum(np.log(clipped * (1.0 - clipped)), axis=-1)
    return gaussian_log_prob(d, logit(clipped)) - log_jacobian


def act(params: MlpParams, observation, mode: str, rng: np.random.Generator = None) -> np.ndarray:
    """Valve openings for one observation vector.

    Args:
        params (MlpParams): Policy parameters.
        observation: Flat observation vector.
        mode (str): "sample" draws from the squashed Gaussian, "mean" squashes its mean.
        rng (np.random.Generator, optional): Required in sample mode.

    Returns:
        np.ndarray: Nine openings in [0, 1].
    """
    d = policy_distribution(params, observation)
    if mode == "mean":
        return squash(d.mean.value)
    if mode != "sample":
        raise ValueError(f'Action mode="{mode}" is not one of "sample", "mean".')
    if rng is None:
        raise ValueError("Sample mode needs a random generator.")
    return squash(d.sample(rng))
