"""
Tensor Autodiff

Dense float64 tensors with reverse-mode automatic differentiation. Primitive
operations are recorded on the active Tape whenever one of their inputs
requires a gradient; Tape.backward replays the record in reverse.
"""

import threading
from dataclasses import dataclass
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import erfc, expit

from ..utils.errors import DomainError, ShapeError, TapeError

ArrayLike = Union[np.ndarray, float, int, Sequence[Any]]
BackwardFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]

_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)
_SQRT2 = np.sqrt(2.0)

_local = threading.local()


def _tape_stack() -> List["Tape"]:
    stack = getattr(_local, "tapes", None)
    if stack is None:
        stack = []
        _local.tapes = stack
    return stack


def active_tape() -> Optional["Tape"]:
    """Return the innermost Tape entered on this thread, if any."""
    stack = _tape_stack()
    return stack[-1] if stack else None


class Tensor:
    """Dense float64 array with an optional gradient accumulator."""

    def __init__(self, values: ArrayLike, requires_grad: bool = False, name: Optional[str] = None):
        """
        Create a tensor from array-like values (copied).

        Args:
            values: Numbers in any numpy-convertible layout
            requires_grad: Whether backward passes accumulate into ``grad``
            name: Optional label used in error messages and checkpoints
        """
        self.values = np.array(values, dtype=np.float64)
        if any(extent <= 0 for extent in self.values.shape):
            raise ShapeError(f"tensor extents must be positive, got {self.values.shape}")
        self.requires_grad = requires_grad
        self.grad: Optional[np.ndarray] = None
        self.name = name
        self._node: Optional["_Node"] = None

    @classmethod
    def _wrap(cls, values: np.ndarray) -> "Tensor":
        out = cls.__new__(cls)
        out.values = np.asarray(values, dtype=np.float64)
        out.requires_grad = False
        out.grad = None
        out.name = None
        out._node = None
        return out

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.values.shape

    @property
    def ndim(self) -> int:
        return self.values.ndim

    @property
    def size(self) -> int:
        return int(self.values.size)

    @property
    def T(self) -> "Tensor":
        return transpose(self)

    def numpy(self) -> np.ndarray:
        return self.values

    def item(self) -> float:
        if self.size != 1:
            raise ShapeError(f"item() needs a single value, tensor has shape {self.shape}")
        return float(self.values.reshape(-1)[0])

    def zero_grad(self) -> None:
        self.grad = None

    def _accumulate(self, grad: np.ndarray) -> None:
        grad = np.asarray(grad, dtype=np.float64).reshape(self.shape)
        self.grad = grad.copy() if self.grad is None else self.grad + grad

    def reshape(self, *shape: int) -> "Tensor":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def sum(self, axis: Optional[int] = None, keepdims: bool = False) -> "Tensor":
        return reduce_sum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis: Optional[int] = None, keepdims: bool = False) -> "Tensor":
        return reduce_mean(self, axis=axis, keepdims=keepdims)

    def __add__(self, other: Any) -> "Tensor":
        return add(self, other)

    def __radd__(self, other: Any) -> "Tensor":
        return add(other, self)

    def __sub__(self, other: Any) -> "Tensor":
        return sub(self, other)

    def __rsub__(self, other: Any) -> "Tensor":
        return sub(other, self)

    def __mul__(self, other: Any) -> "Tensor":
        return mul(self, other)

    def __rmul__(self, other: Any) -> "Tensor":
        return mul(other, self)

    def __truediv__(self, other: Any) -> "Tensor":
        return div(self, other)

    def __rtruediv__(self, other: Any) -> "Tensor":
        return div(other, self)

    def __neg__(self) -> "Tensor":
        return neg(self)

    def __matmul__(self, other: Any) -> "Tensor":
        return matmul(self, other)

    def __getitem__(self, index: Any) -> "Tensor":
        return take(self, index)

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}{flag})"


@dataclass
class _Node:
    """One recorded primitive: its output, inputs and vector-Jacobian product."""

    output: Tensor
    inputs: Tuple[Tensor, ...]
    backward: BackwardFn
    op: str
    tape: "Tape"


class Tape:
    """Ordered record of primitive operations for one forward pass."""

    def __init__(self) -> None:
        self.nodes: List[_Node] = []

    def __enter__(self) -> "Tape":
        _tape_stack().append(self)
        return self

    def __exit__(self, *exc_info: Any) -> None:
        stack = _tape_stack()
        if stack and stack[-1] is self:
            stack.pop()
        elif self in stack:
            stack.remove(self)

    def __len__(self) -> int:
        return len(self.nodes)

    def backward(self, loss: Tensor) -> None:
        """
        Fill ``grad`` of every tracked leaf with d(loss)/d(leaf).

        Nodes are visited once each, in reverse record order. Gradients add
        to whatever the leaves already hold.

        Args:
            loss: Scalar tensor produced on this tape (or a tracked leaf)

        Raises:
            TapeError: If the loss is not scalar or not tracked by this tape
        """
        if loss.size != 1:
            raise TapeError(f"backward needs a scalar loss, got shape {loss.shape}")
        if not loss.requires_grad:
            raise TapeError("loss does not depend on any tensor that requires grad")

        seed = np.ones_like(loss.values)
        if loss._node is None:
            loss._accumulate(seed)
            return
        if loss._node.tape is not self:
            raise TapeError("loss was recorded on a different tape")

        adjoints: Dict[int, np.ndarray] = {id(loss): seed}
        for node in reversed(self.nodes):
            upstream = adjoints.pop(id(node.output), None)
            if upstream is None:
                continue
            input_grads = node.backward(upstream)
            for tensor, grad in zip(node.inputs, input_grads):
                if grad is None or not tensor.requires_grad:
                    continue
                if tensor._node is None:
                    tensor._accumulate(grad)
                    continue
                key = id(tensor)
                adjoints[key] = adjoints[key] + grad if key in adjoints else grad


def backward(loss: Tensor, tape: Optional[Tape] = None) -> None:
    """Run the backward pass for ``loss`` on its tape (or the active one)."""
    if tape is None:
        tape = loss._node.tape if loss._node is not None else active_tape()
    if tape is None:
        if loss.requires_grad and loss.size == 1:
            loss._accumulate(np.ones_like(loss.values))
            return
        raise TapeError("no tape recorded this loss")
    tape.backward(loss)


def as_tensor(value: Any) -> Tensor:
    """Return ``value`` unchanged if it is a Tensor, else wrap it as a constant."""
    if isinstance(value, Tensor):
        return value
    return Tensor._wrap(np.asarray(value, dtype=np.float64))


def custom_op(values: np.ndarray, inputs: Sequence[Tensor], backward_fn: BackwardFn,
              op: str = "custom") -> Tensor:
    """
    Wrap precomputed output values as a recorded primitive.

    Args:
        values: Forward result
        inputs: Tensors the result depends on
        backward_fn: Maps the upstream gradient to one gradient per input
        op: Name used for debugging

    Returns:
        Output tensor, tracked when a tape is active and an input requires grad
    """
    out = Tensor._wrap(values)
    tape = active_tape()
    if tape is not None and any(t.requires_grad for t in inputs):
        out.requires_grad = True
        node = _Node(out, tuple(inputs), backward_fn, op, tape)
        out._node = node
        tape.nodes.append(node)
    return out


def _broadcast_shape(a: Tensor, b: Tensor, op: str) -> Tuple[int, ...]:
    try:
        return tuple(np.broadcast_shapes(a.shape, b.shape))
    except ValueError:
        raise ShapeError(f"{op}: cannot broadcast extents {a.shape} and {b.shape}") from None


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def add(a: Any, b: Any) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "add")
    return custom_op(
        a.values + b.values, (a, b),
        lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)), "add"
    )


def broadcast_add(x: Any, bias: Any) -> Tensor:
    """Add a vector to every row of a matrix (dense-layer bias)."""
    x, bias = as_tensor(x), as_tensor(bias)
    if bias.ndim != 1 or x.ndim < 1 or x.shape[-1] != bias.shape[0]:
        raise ShapeError(
            f"broadcast_add: bias extents {bias.shape} do not match trailing extent of {x.shape}"
        )
    return add(x, bias)


def sub(a: Any, b: Any) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "sub")
    return custom_op(
        a.values - b.values, (a, b),
        lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)), "sub"
    )


def mul(a: Any, b: Any) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "mul")
    return custom_op(
        a.values * b.values, (a, b),
        lambda g: (_unbroadcast(g * b.values, a.shape), _unbroadcast(g * a.values, b.shape)),
        "mul"
    )


def div(a: Any, b: Any) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "div")
    return custom_op(
        a.values / b.values, (a, b),
        lambda g: (
            _unbroadcast(g / b.values, a.shape),
            _unbroadcast(-g * a.values / (b.values * b.values), b.shape),
        ),
        "div"
    )


def neg(x: Any) -> Tensor:
    x = as_tensor(x)
    return custom_op(-x.values, (x,), lambda g: (-g,), "neg")


def matmul(a: Any, b: Any) -> Tensor:
    """Matrix product of two 2-D tensors."""
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(f"matmul needs 2-D operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: inner extents differ, {a.shape} @ {b.shape}")
    return custom_op(
        a.values @ b.values, (a, b),
        lambda g: (g @ b.values.T, a.values.T @ g), "matmul"
    )


def transpose(x: Any) -> Tensor:
    x = as_tensor(x)
    if x.ndim != 2:
        raise ShapeError(f"transpose needs a 2-D tensor, got {x.shape}")
    return custom_op(x.values.T.copy(), (x,), lambda g: (g.T,), "transpose")


def relu(x: Any) -> Tensor:
    x = as_tensor(x)
    mask = x.values > 0
    return custom_op(np.where(mask, x.values, 0.0), (x,), lambda g: (g * mask,), "relu")


def logistic(x: Any) -> Tensor:
    x = as_tensor(x)
    y = expit(x.values)
    return custom_op(y, (x,), lambda g: (g * y * (1.0 - y),), "logistic")


def normal_cdf_values(x: np.ndarray) -> np.ndarray:
    """Standard-normal CDF through the complementary error function."""
    return 0.5 * erfc(-np.asarray(x, dtype=np.float64) / _SQRT2)


def normal_pdf_values(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return _INV_SQRT_2PI * np.exp(-0.5 * x * x)


def normal_cdf(x: Any) -> Tensor:
    x = as_tensor(x)
    return custom_op(
        normal_cdf_values(x.values), (x,),
        lambda g: (g * normal_pdf_values(x.values),), "normal_cdf"
    )


def softplus(x: Any) -> Tensor:
    x = as_tensor(x)
    return custom_op(
        np.logaddexp(0.0, x.values), (x,), lambda g: (g * expit(x.values),), "softplus"
    )


def softmax(x: Any, axis: int = -1) -> Tensor:
    x = as_tensor(x)
    shifted = x.values - x.values.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=axis, keepdims=True)

    def backward_fn(g: np.ndarray) -> Tuple[np.ndarray]:
        return (y * (g - (g * y).sum(axis=axis, keepdims=True)),)

    return custom_op(y, (x,), backward_fn, "softmax")


def log_softmax(x: Any, axis: int = -1) -> Tensor:
    x = as_tensor(x)
    shifted = x.values - x.values.max(axis=axis, keepdims=True)
    y = shifted - np.log(np.exp(shifted).sum(axis=axis, keepdims=True))

    def backward_fn(g: np.ndarray) -> Tuple[np.ndarray]:
        return (g - np.exp(y) * g.sum(axis=axis, keepdims=True),)

    return custom_op(y, (x,), backward_fn, "log_softmax")


def log(x: Any) -> Tensor:
    x = as_tensor(x)
    if np.any(x.values <= 0):
        raise DomainError(f"log of non-positive entries (min {x.values.min():.3e})")
    return custom_op(np.log(x.values), (x,), lambda g: (g / x.values,), "log")


def exp(x: Any) -> Tensor:
    x = as_tensor(x)
    y = np.exp(x.values)
    return custom_op(y, (x,), lambda g: (g * y,), "exp")


def clip_min(x: Any, floor: float) -> Tensor:
    """Elementwise max(x, floor); the gradient is zero where the floor is active."""
    x = as_tensor(x)
    mask = x.values > floor
    return custom_op(np.where(mask, x.values, floor), (x,), lambda g: (g * mask,), "clip_min")


def _expand_reduced(g: np.ndarray, shape: Tuple[int, ...], axis: Optional[int],
                    keepdims: bool) -> np.ndarray:
    if axis is not None and not keepdims:
        g = np.expand_dims(g, axis)
    return np.broadcast_to(g, shape)


def reduce_sum(x: Any, axis: Optional[int] = None, keepdims: bool = False) -> Tensor:
    x = as_tensor(x)
    return custom_op(
        np.asarray(x.values.sum(axis=axis, keepdims=keepdims)), (x,),
        lambda g: (_expand_reduced(g, x.shape, axis, keepdims),), "sum"
    )


def reduce_mean(x: Any, axis: Optional[int] = None, keepdims: bool = False) -> Tensor:
    x = as_tensor(x)
    count = x.size if axis is None else x.shape[axis]
    return custom_op(
        np.asarray(x.values.mean(axis=axis, keepdims=keepdims)), (x,),
        lambda g: (_expand_reduced(g, x.shape, axis, keepdims) / count,), "mean"
    )


def reshape(x: Any, shape: Sequence[int]) -> Tensor:
    x = as_tensor(x)
    try:
        values = x.values.reshape(tuple(shape))
    except ValueError:
        raise ShapeError(f"reshape: cannot view extents {x.shape} as {tuple(shape)}") from None
    return custom_op(values, (x,), lambda g: (g.reshape(x.shape),), "reshape")


def concat(tensors: Sequence[Any], axis: int = -1) -> Tensor:
    parts = [as_tensor(t) for t in tensors]
    try:
        values = np.concatenate([p.values for p in parts], axis=axis)
    except ValueError:
        shapes = [p.shape for p in parts]
        raise ShapeError(f"concat: extents {shapes} do not agree off axis {axis}") from None
    bounds = np.cumsum([p.shape[axis] for p in parts])[:-1]
    return custom_op(
        values, parts, lambda g: tuple(np.split(g, bounds, axis=axis)), "concat"
    )


def take(x: Any, index: Any) -> Tensor:
    """Basic or advanced indexing, differentiable by scatter-add."""
    x = as_tensor(x)

    def backward_fn(g: np.ndarray) -> Tuple[np.ndarray]:
        full = np.zeros_like(x.values)
        np.add.at(full, index, g)
        return (full,)

    return custom_op(np.array(x.values[index]), (x,), backward_fn, "take")


def _square(x: Tensor, op: str) -> None:
    if x.ndim != 2 or x.shape[0] != x.shape[1]:
        raise ShapeError(f"{op} needs a square matrix, got {x.shape}")


def inverse(x: Any) -> Tensor:
    x = as_tensor(x)
    _square(x, "inverse")
    y = np.linalg.inv(x.values)
    return custom_op(y, (x,), lambda g: (-(y.T @ g @ y.T),), "inverse")


def logdet(x: Any) -> Tensor:
    """Log-determinant of a matrix with positive determinant."""
    x = as_tensor(x)
    _square(x, "logdet")
    sign, value = np.linalg.slogdet(x.values)
    if sign <= 0:
        raise DomainError("logdet needs a matrix with positive determinant")
    inv_t = np.linalg.inv(x.values).T
    return custom_op(np.asarray(value), (x,), lambda g: (g * inv_t,), "logdet")


def trace(x: Any) -> Tensor:
    x = as_tensor(x)
    _square(x, "trace")
    eye = np.eye(x.shape[0])
    return custom_op(np.asarray(np.trace(x.values)), (x,), lambda g: (g * eye,), "trace")


def zero_grads(params: Iterable[Tensor]) -> None:
    for p in params:
        p.zero_grad()


def finite_difference_grad(fn: Callable[[], float], tensor: Tensor,
                           step: float = 1e-4) -> np.ndarray:
    """
    Central finite-difference gradient of a scalar function of ``tensor``.

    The tensor's values are perturbed in place and restored.

    Args:
        fn: Evaluates the scalar with the tensor's current values
        tensor: Tensor to differentiate against
        step: Perturbation size

    Returns:
        Array with the tensor's shape
    """
    grad = np.zeros_like(tensor.values)
    flat = tensor.values.reshape(-1)
    grad_flat = grad.reshape(-1)
    for i in range(flat.size):
        original = flat[i]
        flat[i] = original + step
        upper = fn()
        flat[i] = original - step
        lower = fn()
        flat[i] = original
        grad_flat[i] = (upper - lower) / (2.0 * step)
    return grad


def relative_error(actual: np.ndarray, expected: np.ndarray) -> float:
    """Max absolute difference scaled by the larger operand magnitude."""
    actual = np.asarray(actual, dtype=np.float64)
    expected = np.asarray(expected, dtype=np.float64)
    scale = max(np.abs(actual).max(), np.abs(expected).max(), 1e-12)
    return float(np.abs(actual - expected).max() / scale)
