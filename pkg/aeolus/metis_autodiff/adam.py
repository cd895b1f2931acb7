"""
Adam Optimizer Module

A functional Adam: `adam_step` returns new parameter arrays and a new state and never mutates its
inputs, so a learner can keep the previous state around for checkpoints and comparisons.

Classes:
    AdamState: First/second moment accumulators, step count and hyperparameters.

Functions:
    adam_step(): One bias-corrected Adam update.
"""

from typing import List, Sequence, Tuple

import numpy as np

from aeolus.errors import ShapeMismatchError


class AdamState:
    """First/second moment accumulators, step count and hyperparameters.

    Attributes:
        first_moments (List[np.ndarray]): Running means of the gradients.
        second_moments (List[np.ndarray]): Running means of the squared gradients.
        step (int): Number of updates applied so far.
        learning_rate (float): Step size α.
        beta1 (float): Decay of the first moments.
        beta2 (float): Decay of the second moments.
        epsilon (float): Denominator guard.
    """

    def __init__(
        self,
        first_moments: Sequence[np.ndarray],
        second_moments: Sequence[np.ndarray],
        step: int = 0,
        learning_rate: float = 3e-4,
        beta1: float = 0.9,
        beta2: float = 0.999,
        epsilon: float = 1e-8,
    ):
        if len(first_moments) != len(second_moments):
            raise ShapeMismatchError("Adam moment lists have different lengths.")
        for m, v in zip(first_moments, second_moments):
            if np.shape(m) != np.shape(v):
                raise ShapeMismatchError(f"Adam moments disagree: {np.shape(m)} vs {np.shape(v)}")
        if step < 0:
            raise ValueError(f"Adam step count (={step}) must be >= 0.")
        self.first_moments = [np.asarray(m, dtype=np.float64) for m in first_moments]
        self.second_moments = [np.asarray(v, dtype=np.float64) for v in second_moments]
        self.step = int(step)
        self.learning_rate = float(learning_rate)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.epsilon = float(epsilon)

    @classmethod
    def zeros_like(cls, params: Sequence[np.ndarray], learning_rate: float = 3e-4, **kwargs) -> "AdamState":
        """Fresh state with zero moments shaped like `params`."""
        return cls(
            [np.zeros_like(p, dtype=np.float64) for p in params],
            [np.zeros_like(p, dtype=np.float64) for p in params],
            learning_rate=learning_rate,
            **kwargs,
        )

    def __repr__(self):
        return f"AdamState(step={self.step}, learning_rate={self.learning_rate}, tensors={len(self.first_moments)})"


def adam_step(
    params: Sequence[np.ndarray], grads: Sequence[np.ndarray], state: AdamState
) -> Tuple[List[np.ndarray], AdamState]:
    """Apply one bias-corrected Adam update.

    Args:
        params (Sequence[np.ndarray]): Current parameters.
        grads (Sequence[np.ndarray]): Gradients, shaped like `params`.
        state (AdamState): Optimizer state, shaped like `params`.

    Raises:
        ShapeMismatchError: If params, grads and moments do not align.

    Returns:
        Tuple[List[np.ndarray], AdamState]: The updated parameters and optimizer state.
    """
    if not len(params) == len(grads) == len(state.first_moments):
        raise ShapeMismatchError(
            f"Adam got {len(params)} params, {len(grads)} grads, {len(state.first_moments)} moments"
        )
    step = state.step + 1
    b1, b2 = state.beta1, state.beta2
    correction1 = 1.0 - b1**step
    correction2 = 1.0 - b2**step
    new_params, new_m, new_v = [], [], []
    for p, g, m, v in zip(params, grads, state.first_moments, state.second_moments):
        if np.shape(p) != np.shape(g) or np.shape(p) != m.shape:
            raise ShapeMismatchError(
                f"Adam shapes disagree: param {np.shape(p)}, grad {np.shape(g)}, moment {m.shape}"
            )
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * np.square(g)
        m_hat = m / correction1
        v_hat = v / correction2
        new_params.append(p - state.learning_rate * m_hat / (np.sqrt(v_hat) + state.epsilon))
        new_m.append(m)
        new_v.append(v)
    new_state = AdamState(
        new_m, new_v, step, state.learning_rate, state.beta1, state.beta2, state.epsilon
    )
    return new_params, new_state
