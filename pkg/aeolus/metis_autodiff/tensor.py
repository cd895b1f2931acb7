"""
Metis Tensor Module

This module holds the dense 64-bit tensor type and the small, closed set of differentiable
primitives the learners are built from. Every primitive records the op name and its parents on the
result; `grad()` walks the recorded graph in reverse and looks up one backward rule per op name in
`BACKWARD_RULES`. A node whose op has no rule is rejected with `UnsupportedPrimitiveError`.

Supported primitives:
    affine: add, sub, neg, mul, matmul (elementwise ops broadcast NumPy-style)
    unary: tanh, sigmoid, softplus, exp, log, square
    reductions: sum, mean, max
    selection: maximum (elementwise, against a tensor or constant)

Classes:
    Tensor: A float64 ndarray plus the graph bookkeeping needed for reverse-mode differentiation.

Functions:
    grad(): Gradients of a scalar-valued function with respect to a list of parameter arrays.
    value_and_grad(): Same as `grad()`, also returning the scalar value.

Mythology:
    Metis is the Titaness of wisdom and cunning counsel, and the first wife of Zeus. Zeus swallowed
    her whole, and from within she kept advising him -- a quiet engine of reasoning working
    backwards from every outcome.
"""

from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import expit

from aeolus.errors import NonFiniteError, ShapeMismatchError, UnsupportedPrimitiveError

ArrayLike = Union["Tensor", np.ndarray, float, int]

# Checked mode rejects NaN/Inf whenever a tensor is constructed.
_CHECK_FINITE = True


def set_checked_mode(enabled: bool):
    """Enable or disable the finiteness check performed when a tensor is constructed.

    Args:
        enabled (bool): True to reject NaN/Inf at construction.
    """
    global _CHECK_FINITE
    _CHECK_FINITE = bool(enabled)


def is_checked_mode() -> bool:
    """Return True if tensors are checked for NaN/Inf at construction."""
    return _CHECK_FINITE


class Tensor:
    """A float64 ndarray plus the graph bookkeeping needed for reverse-mode differentiation.

    Attributes:
        value (np.ndarray): The row-major float64 data.
        requires_grad (bool): True for parameters and for every node computed from one.
        op (str): Name of the primitive that produced this tensor ("leaf" for inputs).
        parents (Tuple[Tensor, ...]): The tensors the primitive consumed.
        ctx (dict): Values the backward rule needs (axes, masks, ...).
    """

    __slots__ = ("value", "requires_grad", "op", "parents", "ctx")

    def __init__(
        self,
        value,
        requires_grad: bool = False,
        op: str = "leaf",
        parents: Tuple["Tensor", ...] = (),
        ctx: Optional[dict] = None,
    ):
        value = np.asarray(value, dtype=np.float64)
        if _CHECK_FINITE and not np.all(np.isfinite(value)):
            raise NonFiniteError(f'Tensor produced by op="{op}" holds NaN or Inf values.')
        self.value = value
        self.requires_grad = requires_grad
        self.op = op
        self.parents = parents
        self.ctx = ctx if ctx is not None else {}

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.value.shape

    @property
    def data(self) -> np.ndarray:
        """Flat, row-major view of the values."""
        return self.value.reshape(-1)

    @property
    def size(self) -> int:
        return self.value.size

    @property
    def ndim(self) -> int:
        return self.value.ndim

    def item(self) -> float:
        """Return the value of a single-element tensor as a float."""
        if self.value.size != 1:
            raise ShapeMismatchError(f"item() needs a single element, tensor has shape={self.shape}")
        return float(self.value.reshape(-1)[0])

    def __add__(self, other: ArrayLike) -> "Tensor":
        return add(self, other)

    def __radd__(self, other: ArrayLike) -> "Tensor":
        return add(other, self)

    def __sub__(self, other: ArrayLike) -> "Tensor":
        return sub(self, other)

    def __rsub__(self, other: ArrayLike) -> "Tensor":
        return sub(other, self)

    def __mul__(self, other: ArrayLike) -> "Tensor":
        return mul(self, other)

    def __rmul__(self, other: ArrayLike) -> "Tensor":
        return mul(other, self)

    def __truediv__(self, other: float) -> "Tensor":
        if isinstance(other, Tensor):
            raise UnsupportedPrimitiveError("Division by a tensor is not a supported primitive.")
        return mul(self, 1.0 / np.asarray(other, dtype=np.float64))

    def __neg__(self) -> "Tensor":
        return neg(self)

    def __matmul__(self, other: ArrayLike) -> "Tensor":
        return matmul(self, other)

    def __repr__(self):
        return f"Tensor(shape={self.shape}, op={self.op}, requires_grad={self.requires_grad})"


def as_tensor(x: ArrayLike) -> Tensor:
    """Wrap arrays and scalars as constant tensors; pass tensors through."""
    if isinstance(x, Tensor):
        return x
    return Tensor(x)


def _node(op: str, value: np.ndarray, parents: Tuple[Tensor, ...], **ctx) -> Tensor:
    return Tensor(
        value,
        requires_grad=any(p.requires_grad for p in parents),
        op=op,
        parents=parents,
        ctx=ctx,
    )


def _unbroadcast(g: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Sum-reduce `g` over the axes that were broadcast to reach it from `shape`."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g.reshape(shape)


def _broadcast_shape(a: Tensor, b: Tensor, op: str) -> Tuple[int, ...]:
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeMismatchError(
            f'Op="{op}" cannot broadcast shapes {a.shape} and {b.shape}.'
        ) from None


# Affine primitives


def add(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "add")
    return _node("add", a.value + b.value, (a, b))


def sub(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "sub")
    return _node("sub", a.value - b.value, (a, b))


def mul(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "mul")
    return _node("mul", a.value * b.value, (a, b))


def neg(a: ArrayLike) -> Tensor:
    a = as_tensor(a)
    return _node("neg", -a.value, (a,))


def matmul(a: ArrayLike, b: ArrayLike) -> Tensor:
    """Matrix product of a vector or matrix `a` with a matrix `b`."""
    a, b = as_tensor(a), as_tensor(b)
    if b.ndim != 2 or a.ndim not in (1, 2) or a.shape[-1] != b.shape[0]:
        raise ShapeMismatchError(f'Op="matmul" cannot multiply shapes {a.shape} and {b.shape}.')
    return _node("matmul", a.value @ b.value, (a, b))


# Unary primitives


def tanh(a: ArrayLike) -> Tensor:
    a = as_tensor(a)
    return _node("tanh", np.tanh(a.value), (a,))


def sigmoid(a: ArrayLike) -> Tensor:
    a = as_tensor(a)
    return _node("sigmoid", expit(a.value), (a,))


def softplus(a: ArrayLike) -> Tensor:
    a = as_tensor(a)
    return _node("softplus", np.logaddexp(0.0, a.value), (a,))


def exp(a: ArrayLike) -> Tensor:
    a = as_tensor(a)
    return _node("exp", np.exp(a.value), (a,))


def log(a: ArrayLike) -> Tensor:
    a = as_tensor(a)
    return _node("log", np.log(a.value), (a,))


def square(a: ArrayLike) -> Tensor:
    a = as_tensor(a)
    return _node("square", np.square(a.value), (a,))


# Reductions


def sum(a: ArrayLike, axis: Optional[int] = None, keepdims: bool = False) -> Tensor:  # noqa: A001
    a = as_tensor(a)
    return _node("sum", a.value.sum(axis=axis, keepdims=keepdims), (a,), axis=axis, keepdims=keepdims)


def mean(a: ArrayLike, axis: Optional[int] = None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    if a.size == 0:
        raise ShapeMismatchError('Op="mean" of an empty tensor is undefined.')
    return _node("mean", a.value.mean(axis=axis, keepdims=keepdims), (a,), axis=axis, keepdims=keepdims)


def max(a: ArrayLike, axis: Optional[int] = None, keepdims: bool = False) -> Tensor:  # noqa: A001
    a = as_tensor(a)
    return _node("max", a.value.max(axis=axis, keepdims=keepdims), (a,), axis=axis, keepdims=keepdims)


def maximum(a: ArrayLike, b: ArrayLike) -> Tensor:
    """Elementwise maximum; ties split the gradient evenly."""
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "maximum")
    return _node("maximum", np.maximum(a.value, b.value), (a, b))


def minimum(a: ArrayLike, b: ArrayLike) -> Tensor:
    return neg(maximum(neg(a), neg(b)))


def clip(a: ArrayLike, low: float, high: float) -> Tensor:
    """Clamp into [low, high], composed from `maximum` and `neg`."""
    return minimum(maximum(a, low), high)


# Backward rules, keyed by op name


def _expand_reduced(g: np.ndarray, node: Tensor) -> np.ndarray:
    (a,) = node.parents
    axis, keepdims = node.ctx["axis"], node.ctx["keepdims"]
    if axis is not None and not keepdims:
        g = np.expand_dims(g, axis)
    return np.broadcast_to(g, a.shape)


def _add_backward(g, node):
    a, b = node.parents
    return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)


def _sub_backward(g, node):
    a, b = node.parents
    return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)


def _mul_backward(g, node):
    a, b = node.parents
    return _unbroadcast(g * b.value, a.shape), _unbroadcast(g * a.value, b.shape)


def _matmul_backward(g, node):
    a, b = node.parents
    ga = g @ b.value.T
    gb = np.outer(a.value, g) if a.ndim == 1 else a.value.T @ g
    return ga, gb


def _sum_backward(g, node):
    return (_expand_reduced(g, node),)


def _mean_backward(g, node):
    (a,) = node.parents
    return (_expand_reduced(g, node) / (a.size // node.value.size),)


def _max_backward(g, node):
    (a,) = node.parents
    axis = node.ctx["axis"]
    peak = a.value.max(axis=axis, keepdims=True)
    mask = (a.value == peak).astype(np.float64)
    mask /= mask.sum(axis=axis, keepdims=True)
    return (_expand_reduced(g, node) * mask,)


def _maximum_backward(g, node):
    a, b = node.parents
    a_wins = np.where(a.value > b.value, 1.0, np.where(a.value == b.value, 0.5, 0.0))
    return _unbroadcast(g * a_wins, a.shape), _unbroadcast(g * (1.0 - a_wins), b.shape)


BACKWARD_RULES: Dict[str, Callable[[np.ndarray, Tensor], Tuple[np.ndarray, ...]]] = {
    "add": _add_backward,
    "sub": _sub_backward,
    "mul": _mul_backward,
    "neg": lambda g, node: (-g,),
    "matmul": _matmul_backward,
    "tanh": lambda g, node: (g * (1.0 - node.value**2),),
    "sigmoid": lambda g, node: (g * node.value * (1.0 - node.value),),
    "softplus": lambda g, node: (g * expit(node.parents[0].value),),
    "exp": lambda g, node: (g * node.value,),
    "log": lambda g, node: (g / node.parents[0].value,),
    "square": lambda g, node: (2.0 * g * node.parents[0].value,),
    "sum": _sum_backward,
    "mean": _mean_backward,
    "max": _max_backward,
    "maximum": _maximum_backward,
}

SUPPORTED_PRIMITIVES = frozenset(BACKWARD_RULES)


def _topological_order(root: Tensor) -> List[Tensor]:
    order: List[Tensor] = []
    visited = set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited or not node.requires_grad:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for parent in node.parents:
            stack.append((parent, False))
    return order


def backward(root: Tensor, wrt: Sequence[Tensor]) -> List[np.ndarray]:
    """Propagate d(root)/d(node) through the recorded graph and collect it for `wrt`.

    Args:
        root (Tensor): A single-element tensor.
        wrt (Sequence[Tensor]): The leaf tensors to return gradients for.

    Raises:
        ShapeMismatchError: If `root` is not a single element.
        UnsupportedPrimitiveError: If a node's op has no backward rule.

    Returns:
        List[np.ndarray]: One gradient per entry of `wrt`, shaped like that entry.
    """
    if root.size != 1:
        raise ShapeMismatchError(f"Gradients need a scalar loss, got shape={root.shape}")
    grads: Dict[int, np.ndarray] = {id(root): np.ones_like(root.value)}
    for node in reversed(_topological_order(root)):
        if node.op == "leaf":
            continue
        rule = BACKWARD_RULES.get(node.op)
        if rule is None:
            raise UnsupportedPrimitiveError(f'Op="{node.op}" has no registered backward rule.')
        g = grads.pop(id(node), None)
        if g is None:
            continue
        for parent, parent_grad in zip(node.parents, rule(g, node)):
            if not parent.requires_grad:
                continue
            if id(parent) in grads:
                grads[id(parent)] = grads[id(parent)] + parent_grad
            else:
                grads[id(parent)] = np.array(parent_grad, dtype=np.float64)
    return [
        np.array(grads.get(id(leaf), np.zeros_like(leaf.value)), dtype=np.float64).reshape(leaf.shape)
        for leaf in wrt
    ]


def value_and_grad(
    loss_fn: Callable[[List[Tensor]], Tensor], params: Sequence[np.ndarray]
) -> Tuple[float, List[np.ndarray]]:
    """Evaluate `loss_fn` on `params` and return (loss, d loss / d params).

    Args:
        loss_fn (Callable[[List[Tensor]], Tensor]): Builds a scalar loss from parameter tensors.
        params (Sequence[np.ndarray]): Parameter arrays, in the order `loss_fn` expects them.

    Returns:
        Tuple[float, List[np.ndarray]]: The loss value and one gradient per parameter.
    """
    leaves = [Tensor(p, requires_grad=True) for p in params]
    loss = loss_fn(leaves)
    if not isinstance(loss, Tensor):
        raise UnsupportedPrimitiveError(
            f"Loss function returned {type(loss).__name__}, not a Tensor built from primitives."
        )
    return loss.item(), backward(loss, leaves)


def grad(
    loss_fn: Callable[[List[Tensor]], Tensor], params: Sequence[np.ndarray]
) -> List[np.ndarray]:
    """Gradients of a scalar-valued `loss_fn` with respect to each parameter array."""
    return value_and_grad(loss_fn, params)[1]
