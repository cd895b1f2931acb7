"""
Diagonal Gaussian Module

Diagonal-Gaussian densities and divergences, written on top of the differentiable primitives so
the same functions serve plain NumPy evaluation (take `.value`) and loss construction. All
functions reduce over the last axis, so batched distributions give one value per row.

Classes:
    DiagGaussian: Per-dimension mean and clamped log standard deviation.

Functions:
    gaussian_log_prob(): Sum of per-dimension log densities.
    kl_diag_gaussians(): KL(p || q) between two diagonal Gaussians.
    kl_mean_part(): KL from moving only the mean (covariance held at p's).
    kl_cov_part(): KL from moving only the covariance (mean held at p's).
"""

from typing import Optional

import numpy as np

from aeolus.errors import ShapeMismatchError
from aeolus.metis_autodiff import tensor as T
from aeolus.metis_autodiff.tensor import ArrayLike, Tensor

LOG_STD_MIN = -5.0
LOG_STD_MAX = 2.0
HALF_LOG_TWO_PI = 0.5 * np.log(2.0 * np.pi)


class DiagGaussian:
    """Per-dimension mean and log standard deviation, log_std clamped to [-5, 2].

    Attributes:
        mean (Tensor): Per-dimension means, trailing axis is the event dimension.
        log_std (Tensor): Clamped per-dimension log standard deviations.

    Raises:
        ShapeMismatchError: If mean and log_std shapes differ.
    """

    def __init__(self, mean: ArrayLike, log_std: ArrayLike):
        mean, log_std = T.as_tensor(mean), T.as_tensor(log_std)
        if mean.shape != log_std.shape:
            raise ShapeMismatchError(
                f"DiagGaussian mean {mean.shape} and log_std {log_std.shape} differ."
            )
        self.mean = mean
        self.log_std = T.clip(log_std, LOG_STD_MIN, LOG_STD_MAX)

    @property
    def dim(self) -> int:
        return self.mean.shape[-1]

    @property
    def std(self) -> np.ndarray:
        return np.exp(self.log_std.value)

    def sample(self, rng: np.random.Generator, n: Optional[int] = None) -> np.ndarray:
        """Draw samples with NumPy; `n` prepends a sample axis."""
        shape = self.mean.shape if n is None else (n,) + self.mean.shape
        return self.mean.value + self.std * rng.standard_normal(shape)

    def detach(self) -> "DiagGaussian":
        """Same distribution with the graph cut (constant tensors)."""
        return DiagGaussian(self.mean.value.copy(), self.log_std.value.copy())

    def __repr__(self):
        return f"DiagGaussian(shape={self.mean.shape})"


def _check_event(d: DiagGaussian, x: Tensor):
    if x.shape[-1:] != d.mean.shape[-1:]:
        raise ShapeMismatchError(f"Sample shape {x.shape} does not match distribution {d.mean.shape}")


def gaussian_log_prob(d: DiagGaussian, x: ArrayLike) -> Tensor:
    """Sum over the last axis of the diagonal-Gaussian log density of `x`."""
    x = T.as_tensor(x)
    _check_event(d, x)
    z = (x - d.mean) * T.exp(-d.log_std)
    return T.sum(-0.5 * T.square(z) - d.log_std - HALF_LOG_TWO_PI, axis=-1)


def kl_diag_gaussians(p: DiagGaussian, q: DiagGaussian) -> Tensor:
    """KL(p || q), summed over the last axis."""
    _check_event(p, q.mean)
    variance_ratio = T.exp(2.0 * (p.log_std - q.log_std))
    mean_term = T.square(p.mean - q.mean) * T.exp(-2.0 * q.log_std)
    per_dim = (q.log_std - p.log_std) + 0.5 * (variance_ratio + mean_term) - 0.5
    return T.sum(per_dim, axis=-1)


def kl_mean_part(p: DiagGaussian, q: DiagGaussian) -> Tensor:
    """KL(N(μp, σp) || N(μq, σp)): the part of the divergence due to the mean alone."""
    _check_event(p, q.mean)
    return T.sum(0.5 * T.square(p.mean - q.mean) * T.exp(-2.0 * p.log_std), axis=-1)


def kl_cov_part(p: DiagGaussian, q: DiagGaussian) -> Tensor:
    """KL(N(μp, σp) || N(μp, σq)): the part of the divergence due to the spread alone."""
    _check_event(p, q.mean)
    variance_ratio = T.exp(2.0 * (p.log_std - q.log_std))
    return T.sum((q.log_std - p.log_std) + 0.5 * variance_ratio - 0.5, axis=-1)
