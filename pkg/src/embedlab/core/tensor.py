"""
Minimal reverse-mode automatic differentiation over dense float64 arrays.

Operations are recorded on the active Tape (a context manager) whenever at
least one input requires gradients. backward() replays the tape in exact
reverse recording order, so gradients are deterministic. Outside a tape,
operations simply compute values (inference mode).

Broadcasting is limited to what numpy does for same-rank or suffix-aligned
shapes; gradients are summed back to each input's shape.
"""

import logging
import threading
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from typing import Any

import numpy as np

from embedlab.errors import ShapeError, TensorError

logger = logging.getLogger(__name__)

LN_EPS = 1e-5
_GELU_C = float(np.sqrt(2.0 / np.pi))
_GELU_A = 0.044715

BackwardFn = Callable[[np.ndarray], Sequence[np.ndarray | None]]


class Tensor:
    """Dense n-dimensional float64 array with an optional gradient slot."""

    def __init__(self, data: Any, requires_grad: bool = False, name: str | None = None) -> None:
        self.data: np.ndarray = np.array(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = bool(requires_grad)
        self.name = name
        # set for outputs recorded on a tape
        self._tape: Tape | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return int(self.data.size)

    @property
    def is_leaf(self) -> bool:
        return self._tape is None

    def item(self) -> float:
        if self.data.size != 1:
            raise TensorError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        return self.data

    def detach(self) -> "Tensor":
        return Tensor(self.data, requires_grad=False, name=self.name)

    def __repr__(self) -> str:
        label = f", name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad}{label})"

    def __add__(self, other: "Tensor | float") -> "Tensor":
        return add(self, _as_tensor(other))

    def __radd__(self, other: float) -> "Tensor":
        return add(_as_tensor(other), self)

    def __mul__(self, other: "Tensor | float") -> "Tensor":
        if isinstance(other, Tensor):
            return mul(self, other)
        return scale(self, float(other))

    def __rmul__(self, other: float) -> "Tensor":
        return scale(self, float(other))

    def __neg__(self) -> "Tensor":
        return scale(self, -1.0)

    def __matmul__(self, other: "Tensor") -> "Tensor":
        return matmul(self, other)


def _as_tensor(value: "Tensor | float | np.ndarray") -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


@dataclass
class TapeEntry:
    """One recorded operation."""

    op: str
    inputs: tuple[Tensor, ...]
    output: Tensor
    backward: BackwardFn


_local = threading.local()


def _tape_stack() -> list["Tape"]:
    stack = getattr(_local, "stack", None)
    if stack is None:
        stack = []
        _local.stack = stack
    return stack


def active_tape() -> "Tape | None":
    """The innermost tape entered on this thread, if any."""
    stack = _tape_stack()
    return stack[-1] if stack else None


class Tape:
    """
    Ordered record of differentiable operations.

    Example:
        >>> w = Tensor(np.ones(3), requires_grad=True)
        >>> with Tape() as tape:
        ...     loss = sum_(mul(w, w))
        >>> backward(loss)
        >>> w.grad
        array([2., 2., 2.])
    """

    def __init__(self) -> None:
        self.entries: list[TapeEntry] = []

    def __enter__(self) -> "Tape":
        _tape_stack().append(self)
        return self

    def __exit__(self, *exc: object) -> None:
        stack = _tape_stack()
        if stack and stack[-1] is self:
            stack.pop()

    def __len__(self) -> int:
        return len(self.entries)

    def record(self, op: str, inputs: tuple[Tensor, ...], output: Tensor, backward: BackwardFn) -> None:
        output._tape = self
        self.entries.append(TapeEntry(op=op, inputs=inputs, output=output, backward=backward))

    def backward(self, loss: Tensor) -> None:
        """Populate .grad of every requires_grad tensor that loss depends on."""
        if loss.size != 1:
            raise TensorError(f"backward() needs a scalar loss, got shape {loss.shape}")
        if not self.entries:
            raise TensorError("backward() called on an empty tape")

        grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
        seen: dict[int, Tensor] = {id(loss): loss}

        for entry in reversed(self.entries):
            g_out = grads.get(id(entry.output))
            if g_out is None:
                continue
            input_grads = entry.backward(g_out)
            for tensor, g in zip(entry.inputs, input_grads, strict=True):
                if g is None or not tensor.requires_grad:
                    continue
                key = id(tensor)
                if key in grads:
                    grads[key] = grads[key] + g
                else:
                    grads[key] = g
                    seen[key] = tensor

        for key, tensor in seen.items():
            g = grads[key]
            if tensor.is_leaf and tensor.grad is not None:
                tensor.grad = tensor.grad + g
            else:
                tensor.grad = g


def backward(loss: Tensor, tape: Tape | None = None) -> None:
    """
    Backpropagate from a scalar loss.

    Leaf gradients accumulate across calls; clear them with zero_grad().
    """
    tape = tape or loss._tape or active_tape()
    if tape is None:
        raise TensorError("backward() called on a tensor that was not recorded on any tape")
    tape.backward(loss)


def zero_grad(params: "Sequence[Tensor] | dict[str, Tensor]") -> None:
    tensors = params.values() if isinstance(params, dict) else params
    for p in tensors:
        p.grad = None


def _make(op: str, data: np.ndarray, inputs: tuple[Tensor, ...], backward_fn: BackwardFn) -> Tensor:
    """Wrap a forward result and record it when any input needs gradients."""
    needs_grad = any(t.requires_grad for t in inputs)
    out = Tensor.__new__(Tensor)
    out.data = np.asarray(data, dtype=np.float64)
    out.grad = None
    out.requires_grad = needs_grad
    out.name = None
    out._tape = None
    tape = active_tape()
    if needs_grad and tape is not None:
        tape.record(op, inputs, out, backward_fn)
    return out


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to shape."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _broadcast_shape(op: str, a: Tensor, b: Tensor) -> tuple[int, ...]:
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(op, a.shape, b.shape) from None


# ---------------------------------------------------------------------------
# Linear algebra
# ---------------------------------------------------------------------------


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """
    Matrix product over the last two axes; leading axes broadcast.

    dA = dC·Bᵀ and dB = Aᵀ·dC, each summed back to its input's shape.
    """
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise ShapeError("matmul", a.shape, b.shape)
    try:
        np.broadcast_shapes(a.shape[:-2], b.shape[:-2])
    except ValueError:
        raise ShapeError("matmul", a.shape, b.shape) from None

    def _backward(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        da = _unbroadcast(g @ np.swapaxes(b.data, -1, -2), a.shape)
        db = _unbroadcast(np.swapaxes(a.data, -1, -2) @ g, b.shape)
        return da, db

    return _make("matmul", a.data @ b.data, (a, b), _backward)


def transpose(x: Tensor, axes: Sequence[int] | None = None) -> Tensor:
    """Permute axes (reverse them when axes is None)."""
    perm = tuple(range(x.ndim))[::-1] if axes is None else tuple(axes)
    if sorted(perm) != list(range(x.ndim)):
        raise TensorError(f"transpose: invalid permutation {perm} for shape {x.shape}")
    inverse = tuple(np.argsort(perm))

    def _backward(g: np.ndarray) -> tuple[np.ndarray]:
        return (np.transpose(g, inverse),)

    return _make("transpose", np.transpose(x.data, perm), (x,), _backward)


def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    try:
        out = x.data.reshape(tuple(shape))
    except ValueError:
        raise ShapeError("reshape", x.shape, tuple(shape)) from None

    def _backward(g: np.ndarray) -> tuple[np.ndarray]:
        return (g.reshape(x.shape),)

    return _make("reshape", out, (x,), _backward)


# ---------------------------------------------------------------------------
# Elementwise
# ---------------------------------------------------------------------------


def add(a: Tensor, b: Tensor) -> Tensor:
    _broadcast_shape("add", a, b)

    def _backward(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return _make("add", a.data + b.data, (a, b), _backward)


def mul(a: Tensor, b: Tensor) -> Tensor:
    _broadcast_shape("mul", a, b)

    def _backward(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return _make("mul", a.data * b.data, (a, b), _backward)


def scale(x: Tensor, c: float) -> Tensor:
    def _backward(g: np.ndarray) -> tuple[np.ndarray]:
        return (g * c,)

    return _make("scale", x.data * c, (x,), _backward)


def exp(x: Tensor) -> Tensor:
    out = np.exp(x.data)

    def _backward(g: np.ndarray) -> tuple[np.ndarray]:
        return (g * out,)

    return _make("exp", out, (x,), _backward)


def gelu(x: Tensor) -> Tensor:
    """GELU, tanh approximation: 0.5·x·(1 + tanh(√(2/π)·(x + 0.044715·x³)))."""
    v = x.data
    t = np.tanh(_GELU_C * (v + _GELU_A * v**3))
    out = 0.5 * v * (1.0 + t)

    def _backward(g: np.ndarray) -> tuple[np.ndarray]:
        dt = (1.0 - t * t) * _GELU_C * (1.0 + 3.0 * _GELU_A * v * v)
        return (g * (0.5 * (1.0 + t) + 0.5 * v * dt),)

    return _make("gelu", out, (x,), _backward)


def layer_norm(x: Tensor, gamma: Tensor | None = None, beta: Tensor | None = None, eps: float = LN_EPS) -> Tensor:
    """
    Normalize over the last axis, then apply the optional affine (gamma, beta).

    A zero-variance row normalizes to zeros because eps is added to the variance.
    """
    if x.ndim == 0 or x.shape[-1] == 0:
        raise ShapeError("layer_norm (empty axis)", x.shape)
    d = x.shape[-1]
    for p in (gamma, beta):
        if p is not None and p.shape != (d,):
            raise ShapeError("layer_norm", x.shape, p.shape)

    mu = x.data.mean(axis=-1, keepdims=True)
    xc = x.data - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv
    out = xhat
    if gamma is not None:
        out = out * gamma.data
    if beta is not None:
        out = out + beta.data

    inputs: tuple[Tensor, ...] = (x,) + tuple(p for p in (gamma, beta) if p is not None)
    lead = tuple(range(x.ndim - 1))

    def _backward(g: np.ndarray) -> list[np.ndarray]:
        dxhat = g * gamma.data if gamma is not None else g
        dx = inv * (
            dxhat - dxhat.mean(axis=-1, keepdims=True) - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True)
        )
        grads = [dx]
        if gamma is not None:
            grads.append((g * xhat).sum(axis=lead))
        if beta is not None:
            grads.append(g.sum(axis=lead))
        return grads

    return _make("layer_norm", out, inputs, _backward)


def _masked(x: np.ndarray, mask: np.ndarray | None) -> np.ndarray:
    if mask is None:
        return x
    return np.where(mask, x, -np.inf)


def softmax(x: Tensor, axis: int = -1, mask: np.ndarray | None = None) -> Tensor:
    """
    Softmax along axis. Positions where mask is False get probability exactly 0.

    Every slice along axis needs at least one unmasked entry.
    """
    if x.ndim == 0 or x.shape[axis] == 0:
        raise ShapeError("softmax (empty axis)", x.shape)
    z = _masked(x.data, mask)
    zmax = z.max(axis=axis, keepdims=True)
    if not np.all(np.isfinite(zmax)):
        raise TensorError("softmax: a slice is fully masked or non-finite")
    e = np.exp(z - zmax)
    out = e / e.sum(axis=axis, keepdims=True)

    def _backward(g: np.ndarray) -> tuple[np.ndarray]:
        return (out * (g - (g * out).sum(axis=axis, keepdims=True)),)

    return _make("softmax", out, (x,), _backward)


def log_softmax(x: Tensor, axis: int = -1) -> Tensor:
    if x.ndim == 0 or x.shape[axis] == 0:
        raise ShapeError("log_softmax (empty axis)", x.shape)
    zmax = x.data.max(axis=axis, keepdims=True)
    shifted = x.data - zmax
    lse = np.log(np.exp(shifted).sum(axis=axis, keepdims=True))
    out = shifted - lse
    probs = np.exp(out)

    def _backward(g: np.ndarray) -> tuple[np.ndarray]:
        return (g - probs * g.sum(axis=axis, keepdims=True),)

    return _make("log_softmax", out, (x,), _backward)


def l2_normalize(x: Tensor, axis: int = -1) -> Tensor:
    """Scale slices along axis to unit L2 norm."""
    norm = np.sqrt((x.data * x.data).sum(axis=axis, keepdims=True))
    if np.any(norm == 0.0):
        raise TensorError("l2_normalize: cannot normalize a zero vector")
    out = x.data / norm

    def _backward(g: np.ndarray) -> tuple[np.ndarray]:
        return ((g - out * (g * out).sum(axis=axis, keepdims=True)) / norm,)

    return _make("l2_normalize", out, (x,), _backward)


# ---------------------------------------------------------------------------
# Reductions and indexing
# ---------------------------------------------------------------------------


def sum_(x: Tensor, axis: int | tuple[int, ...] | None = None, keepdims: bool = False) -> Tensor:
    out = x.data.sum(axis=axis, keepdims=keepdims)

    def _backward(g: np.ndarray) -> tuple[np.ndarray]:
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, x.shape).copy(),)

    return _make("sum", out, (x,), _backward)


def mean(x: Tensor, axis: int | tuple[int, ...] | None = None, keepdims: bool = False) -> Tensor:
    if x.size == 0:
        raise ShapeError("mean (empty)", x.shape)
    if axis is None:
        count = x.size
    else:
        axes = (axis,) if isinstance(axis, int) else axis
        count = int(np.prod([x.shape[a] for a in axes]))
    return scale(sum_(x, axis=axis, keepdims=keepdims), 1.0 / count)


def index(x: Tensor, key: Any) -> Tensor:
    """
    Numpy-style indexing (ints, slices or integer arrays).

    Repeated indices accumulate their gradients.
    """
    try:
        out = x.data[key]
    except IndexError as e:
        raise TensorError(f"index: {e}") from None

    def _backward(g: np.ndarray) -> tuple[np.ndarray]:
        dx = np.zeros_like(x.data)
        np.add.at(dx, key, g)
        return (dx,)

    return _make("index", np.array(out), (x,), _backward)


def take(table: Tensor, ids: np.ndarray) -> Tensor:
    """Row lookup: table[ids] for an integer array of any shape."""
    return index(table, np.asarray(ids, dtype=np.int64))


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    if not tensors:
        raise TensorError("concat: empty tensor list")
    try:
        out = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError:
        raise ShapeError("concat", *(t.shape for t in tensors)) from None
    bounds = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def _backward(g: np.ndarray) -> list[np.ndarray]:
        return list(np.split(g, bounds, axis=axis))

    return _make("concat", out, tuple(tensors), _backward)


# ---------------------------------------------------------------------------
# Verification
# ---------------------------------------------------------------------------


def grad_check(f: Callable[[Tensor], Tensor], x: "Tensor | np.ndarray", eps: float = 1e-5) -> float:
    """
    Compare backward() against central finite differences.

    Returns:
        max over coordinates of |analytic - numeric| / max(1, |analytic|, |numeric|)
    """
    base = np.array(x.data if isinstance(x, Tensor) else x, dtype=np.float64)

    point = Tensor(base.copy(), requires_grad=True)
    with Tape() as tape:
        loss = f(point)
    if loss.size != 1:
        raise TensorError(f"grad_check needs a scalar function, got shape {loss.shape}")
    if len(tape) == 0:
        analytic = np.zeros_like(base)
    else:
        tape.backward(loss)
        analytic = point.grad if point.grad is not None else np.zeros_like(base)

    numeric = np.zeros_like(base)
    flat = numeric.reshape(-1)
    for i in range(base.size):
        plus = base.copy().reshape(-1)
        minus = base.copy().reshape(-1)
        plus[i] += eps
        minus[i] -= eps
        f_plus = f(Tensor(plus.reshape(base.shape))).item()
        f_minus = f(Tensor(minus.reshape(base.shape))).item()
        flat[i] = (f_plus - f_minus) / (2.0 * eps)

    denom = np.maximum(1.0, np.maximum(np.abs(analytic), np.abs(numeric)))
    error = float(np.max(np.abs(analytic - numeric) / denom)) if base.size else 0.0
    logger.debug(f"grad_check over {base.size} coordinates: max relative error {error:.3e}")
    return error
