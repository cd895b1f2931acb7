"""
Multilayer Perceptron Module

Feedforward networks for the actor and critic. Weights are stored as (in, out) matrices so a layer
is `h @ W + b`. The same parameters can be run through plain NumPy (`mlp_forward`, used for acting
and target computation) or through the differentiable primitives (`mlp_apply`, used inside losses).

Classes:
    MlpParams: Layer sizes plus per-layer weight and bias arrays.

Functions:
    mlp_forward(): Evaluate a network with NumPy, no graph recorded.
    mlp_apply(): Evaluate a network on parameter tensors, recording the graph.
"""

from typing import Callable, Dict, List, Sequence, Union

import numpy as np
from scipy.special import expit

from aeolus.errors import ShapeMismatchError
from aeolus.metis_autodiff import tensor as T
from aeolus.metis_autodiff.tensor import Tensor

NUMPY_ACTIVATIONS: Dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "tanh": np.tanh,
    "sigmoid": expit,
    "softplus": lambda x: np.logaddexp(0.0, x),
}

GRAPH_ACTIVATIONS: Dict[str, Callable[[Tensor], Tensor]] = {
    "tanh": T.tanh,
    "sigmoid": T.sigmoid,
    "softplus": T.softplus,
}


class MlpParams:
    """Layer sizes plus per-layer weight and bias arrays.

    Attributes:
        layer_sizes (List[int]): Widths from input to output, e.g. [24, 256, 256, 18].
        weights (List[np.ndarray]): One (in, out) matrix per layer.
        biases (List[np.ndarray]): One (out,) vector per layer.
        activation (str): Hidden-layer nonlinearity; the output layer is linear.

    Raises:
        ShapeMismatchError: If any weight or bias disagrees with the layer sizes.
    """

    def __init__(
        self,
        layer_sizes: Sequence[int],
        weights: Sequence[np.ndarray],
        biases: Sequence[np.ndarray],
        activation: str = "tanh",
    ):
        self.layer_sizes = [int(s) for s in layer_sizes]
        if len(self.layer_sizes) < 2:
            raise ShapeMismatchError(f"An MLP needs at least 2 layer sizes, got {self.layer_sizes}")
        if activation not in NUMPY_ACTIVATIONS:
            raise ValueError(f'Activation="{activation}" is not one of {sorted(NUMPY_ACTIVATIONS)}')
        n_layers = len(self.layer_sizes) - 1
        if len(weights) != n_layers or len(biases) != n_layers:
            raise ShapeMismatchError(
                f"Expected {n_layers} weight/bias pairs, got {len(weights)}/{len(biases)}"
            )
        self.weights = [np.asarray(w, dtype=np.float64) for w in weights]
        self.biases = [np.asarray(b, dtype=np.float64) for b in biases]
        self.activation = activation
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            expected = (self.layer_sizes[i], self.layer_sizes[i + 1])
            if w.shape != expected or b.shape != (expected[1],):
                raise ShapeMismatchError(
                    f"Layer {i}: weight {w.shape} / bias {b.shape} do not match sizes {expected}"
                )

    @classmethod
    def init(
        cls,
        layer_sizes: Sequence[int],
        rng: np.random.Generator,
        activation: str = "tanh",
        output_scale: float = 1.0,
    ) -> "MlpParams":
        """Glorot-uniform weights, zero biases; the output layer is scaled by `output_scale`."""
        weights, biases = [], []
        for i, (n_in, n_out) in enumerate(zip(layer_sizes[:-1], layer_sizes[1:])):
            limit = np.sqrt(6.0 / (n_in + n_out))
            w = rng.uniform(-limit, limit, size=(n_in, n_out))
            if i == len(layer_sizes) - 2:
                w *= output_scale
            weights.append(w)
            biases.append(np.zeros(n_out))
        return cls(layer_sizes, weights, biases, activation)

    @classmethod
    def from_flat(
        cls, layer_sizes: Sequence[int], arrays: Sequence[np.ndarray], activation: str = "tanh"
    ) -> "MlpParams":
        """Rebuild from the [W0, b0, W1, b1, ...] ordering produced by `flat()`."""
        arrays = list(arrays)
        return cls(layer_sizes, arrays[0::2], arrays[1::2], activation)

    def flat(self) -> List[np.ndarray]:
        """Return the parameters as [W0, b0, W1, b1, ...]."""
        arrays = []
        for w, b in zip(self.weights, self.biases):
            arrays.extend((w, b))
        return arrays

    def copy(self) -> "MlpParams":
        return MlpParams.from_flat(self.layer_sizes, [a.copy() for a in self.flat()], self.activation)

    @property
    def input_width(self) -> int:
        return self.layer_sizes[0]

    @property
    def output_width(self) -> int:
        return self.layer_sizes[-1]

    def __eq__(self, other):
        if not isinstance(other, MlpParams):
            return False
        return (
            self.layer_sizes == other.layer_sizes
            and self.activation == other.activation
            and all(np.array_equal(a, b) for a, b in zip(self.flat(), other.flat()))
        )

    def __repr__(self):
        return f"MlpParams(layer_sizes={self.layer_sizes}, activation={self.activation})"


def _check_input(layer_sizes: Sequence[int], x_shape) -> None:
    if len(x_shape) not in (1, 2) or x_shape[-1] != layer_sizes[0]:
        raise ShapeMismatchError(
            f"MLP input shape {tuple(x_shape)} does not match input width {layer_sizes[0]}"
        )


def mlp_forward(params: MlpParams, x: Union[np.ndarray, Tensor]) -> Union[np.ndarray, Tensor]:
    """Evaluate the network on a vector or a (batch, width) matrix.

    Args:
        params (MlpParams): The network.
        x (Union[np.ndarray, Tensor]): Input vector or batch. A Tensor input is run through the
            differentiable primitives with the parameters held constant.

    Raises:
        ShapeMismatchError: If the input width does not match the first layer.

    Returns:
        Union[np.ndarray, Tensor]: Output of the last (linear) layer, same type as `x`.
    """
    if isinstance(x, Tensor):
        return mlp_apply(params.layer_sizes, params.flat(), x, params.activation)
    h = np.asarray(x, dtype=np.float64)
    _check_input(params.layer_sizes, h.shape)
    act = NUMPY_ACTIVATIONS[params.activation]
    last = len(params.weights) - 1
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        h = h @ w + b
        if i < last:
            h = act(h)
    return h


def mlp_apply(
    layer_sizes: Sequence[int],
    flat_params: Sequence[Union[np.ndarray, Tensor]],
    x: Union[np.ndarray, Tensor],
    activation: str = "tanh",
) -> Tensor:
    """Evaluate the network on parameter tensors in [W0, b0, W1, b1, ...] order.

    Returns:
        Tensor: Output of the last (linear) layer with the graph recorded.
    """
    x = T.as_tensor(x)
    _check_input(layer_sizes, x.shape)
    act = GRAPH_ACTIVATIONS[activation]
    weights, biases = flat_params[0::2], flat_params[1::2]
    last = len(weights) - 1
    h = x
    for i, (w, b) in enumerate(zip(weights, biases)):
        h = T.matmul(h, w) + b
        if i < last:
            h = act(h)
    return h
