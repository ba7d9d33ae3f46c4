"""Dense float64 tensors with reverse-mode automatic differentiation.

Every operation computes its forward value with numpy and, when an active
:class:`Tape` is recording and any input requires gradients, appends a node
holding the local backward rule.  :func:`backward` replays the tape in
reverse to accumulate d(loss)/d(tensor) into ``grad`` for every ancestor
that requires gradients.

The op set is deliberately small: elementwise arithmetic, reductions,
2-D matmul, valid 1-D convolution, global max pooling, the usual
activations, and a handful of structural ops (reshape, row scatter/gather)
that the sentence model needs.  All storage is row-major float64.
"""

from __future__ import annotations

from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ConfigError, DimensionError, SequenceTooShortError

UNIFORM_EPS = 1e-12  # clamp for uniform draws before double-log / logit


class Tensor:
    """A dense float64 array plus optional gradient storage.

    Tensors are treated as immutable once created (the optimizer mutates
    parameter ``data`` in place between forward passes, never during one).
    """

    __slots__ = ("data", "requires_grad", "grad", "_grad_owned")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad: Optional[np.ndarray] = None
        self._grad_owned = False

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data.reshape(()))

    def zero_grad(self) -> None:
        self.grad = None
        self._grad_owned = False

    def accumulate_grad(self, g: np.ndarray) -> None:
        # first contribution is adopted by reference; owning a private
        # buffer is deferred until a second contribution arrives
        if self.grad is None:
            self.grad = g
            self._grad_owned = False
        elif self._grad_owned:
            self.grad += g
        else:
            self.grad = self.grad + g
            self._grad_owned = True

    def own_grad(self) -> np.ndarray:
        """Gradient as a privately owned array, safe to mutate in place."""
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        elif not self._grad_owned:
            self.grad = self.grad.copy()
        self._grad_owned = True
        return self.grad

    def grad_or_zeros(self) -> np.ndarray:
        """Gradient array, zeros if this tensor was detached from the loss."""
        if self.grad is None:
            return np.zeros_like(self.data)
        return self.grad

    def detach(self) -> "Tensor":
        return Tensor(self.data, requires_grad=False)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    # arithmetic sugar; constants are lifted to non-grad tensors
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)


class _Node:
    """One recorded operation: output, inputs, and the local gradient rule."""

    __slots__ = ("output", "inputs", "backward_fn")

    def __init__(self, output: Tensor, inputs: Sequence[Tensor],
                 backward_fn: Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]):
        self.output = output
        self.inputs = inputs
        self.backward_fn = backward_fn


class Tape:
    """Ordered record of operations for one forward pass.

    Use as a context manager; ops performed inside the block are recorded
    when any of their inputs requires gradients.
    """

    def __init__(self):
        self.nodes: list[_Node] = []

    def __enter__(self) -> "Tape":
        _TAPE_STACK.append(self)
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        _TAPE_STACK.pop()

    def __len__(self) -> int:
        return len(self.nodes)


_TAPE_STACK: list[Tape] = []


def _lift(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _record(out: Tensor, inputs: Sequence[Tensor], backward_fn) -> Tensor:
    if _TAPE_STACK and any(t.requires_grad for t in inputs):
        out.requires_grad = True
        _TAPE_STACK[-1].nodes.append(_Node(out, list(inputs), backward_fn))
    return out


def backward(loss: Tensor, tape: Tape) -> None:
    """Populate ``grad`` for every requires-grad ancestor of a scalar loss.

    Replays the tape once, in reverse recording order.  Tensors that never
    fed into the loss keep ``grad is None`` (read as zero).
    """
    if loss.data.size != 1:
        raise DimensionError(f"backward needs a scalar loss, got shape {loss.data.shape}")
    loss.grad = np.ones_like(loss.data)
    for node in reversed(tape.nodes):
        g = node.output.grad
        if g is None:
            continue  # branch not connected to the loss
        for inp, gi in zip(node.inputs, node.backward_fn(g)):
            if gi is not None and inp.requires_grad:
                inp.accumulate_grad(gi)


def zero_grads(tensors: Sequence[Tensor]) -> None:
    for t in tensors:
        t.zero_grad()


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a gradient over axes that were broadcast in the forward op."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


# ---------------------------------------------------------------------------
# elementwise arithmetic


def add(a, b) -> Tensor:
    a, b = _lift(a), _lift(b)
    out = Tensor(a.data + b.data)
    return _record(out, (a, b), lambda g: (_unbroadcast(g, a.data.shape),
                                           _unbroadcast(g, b.data.shape)))


def sub(a, b) -> Tensor:
    a, b = _lift(a), _lift(b)
    out = Tensor(a.data - b.data)
    return _record(out, (a, b), lambda g: (_unbroadcast(g, a.data.shape),
                                           _unbroadcast(-g, b.data.shape)))


def mul(a, b) -> Tensor:
    a, b = _lift(a), _lift(b)
    out = Tensor(a.data * b.data)
    return _record(out, (a, b), lambda g: (_unbroadcast(g * b.data, a.data.shape),
                                           _unbroadcast(g * a.data, b.data.shape)))


def div(a, b) -> Tensor:
    a, b = _lift(a), _lift(b)
    out = Tensor(a.data / b.data)
    return _record(out, (a, b), lambda g: (_unbroadcast(g / b.data, a.data.shape),
                                           _unbroadcast(-g * a.data / (b.data * b.data),
                                                        b.data.shape)))


def neg(a) -> Tensor:
    a = _lift(a)
    out = Tensor(-a.data)
    return _record(out, (a,), lambda g: (-g,))


def exp(a) -> Tensor:
    a = _lift(a)
    out = Tensor(np.exp(a.data))
    y = out.data
    return _record(out, (a,), lambda g: (g * y,))


def log(a) -> Tensor:
    a = _lift(a)
    out = Tensor(np.log(a.data))
    return _record(out, (a,), lambda g: (g / a.data,))


def square(a) -> Tensor:
    a = _lift(a)
    out = Tensor(a.data * a.data)
    return _record(out, (a,), lambda g: (2.0 * g * a.data,))


def clamp(a, lo: float, hi: float) -> Tensor:
    """Clip values into [lo, hi]; gradient flows only where unclipped."""
    a = _lift(a)
    out = Tensor(np.clip(a.data, lo, hi))
    inside = (a.data >= lo) & (a.data <= hi)
    return _record(out, (a,), lambda g: (g * inside,))


# ---------------------------------------------------------------------------
# reductions


def tsum(a, axis=None, keepdims: bool = False) -> Tensor:
    a = _lift(a)
    out = Tensor(a.data.sum(axis=axis, keepdims=keepdims))

    def back(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, a.data.shape).copy(),)

    return _record(out, (a,), back)


def tmean(a, axis=None, keepdims: bool = False) -> Tensor:
    a = _lift(a)
    out = Tensor(a.data.mean(axis=axis, keepdims=keepdims))
    count = a.data.size if axis is None else a.data.shape[axis]

    def back(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, a.data.shape) / count,)

    return _record(out, (a,), back)


# ---------------------------------------------------------------------------
# linear algebra and the sentence-encoder ops


def matmul(a, b) -> Tensor:
    a, b = _lift(a), _lift(b)
    if a.data.ndim != 2 or b.data.ndim != 2 or a.data.shape[1] != b.data.shape[0]:
        raise DimensionError(f"matmul shapes incompatible: {a.data.shape} x {b.data.shape}")
    out = Tensor(a.data @ b.data)
    return _record(out, (a, b), lambda g: (g @ b.data.T, a.data.T @ g))


def conv1d_valid(x, kernel, bias) -> Tensor:
    """Valid cross-correlation over the token axis.

    ``x`` is [T, c_in] or [N, T, c_in]; ``kernel`` is [k, c_in, c_out];
    ``bias`` is [c_out].  Output has T-k+1 positions.
    """
    x, kernel, bias = _lift(x), _lift(kernel), _lift(bias)
    squeeze = x.data.ndim == 2
    xd = x.data[None] if squeeze else x.data
    k, c_in, c_out = kernel.data.shape
    n, t, xc = xd.shape
    if xc != c_in:
        raise DimensionError(f"conv1d_valid channels mismatch: input {xc}, kernel {c_in}")
    if t < k:
        raise SequenceTooShortError(f"token axis {t} shorter than kernel {k}")
    w = t - k + 1
    # im2col: window j holds tokens x_j .. x_{j+k-1} stacked on the channel
    # axis, matching the kernel reshaped to [k*c_in, c_out]
    cols = np.empty((n, w, k * c_in), dtype=np.float64)
    for j in range(k):
        cols[:, :, j * c_in:(j + 1) * c_in] = xd[:, j:j + w, :]
    cols = cols.reshape(n * w, k * c_in)
    kflat = kernel.data.reshape(k * c_in, c_out)
    y = (cols @ kflat).reshape(n, w, c_out) + bias.data
    out = Tensor(y[0] if squeeze else y)

    def back(g):
        g3 = g[None] if squeeze else g
        gflat = g3.reshape(n * w, c_out)
        db = gflat.sum(axis=0)
        dk = (cols.T @ gflat).reshape(k, c_in, c_out)
        dcols = (gflat @ kflat.T).reshape(n, w, k * c_in)
        dx = np.zeros_like(xd)
        for j in range(k):
            dx[:, j:j + w, :] += dcols[:, :, j * c_in:(j + 1) * c_in]
        return (dx[0] if squeeze else dx, dk, db)

    return _record(out, (x, kernel, bias), back)


def global_max_pool(x) -> Tensor:
    """Per-channel max over the token axis ([T, c] -> [c] or [N, T, c] -> [N, c]).

    Gradient flows to the first occurrence of each maximum.
    """
    x = _lift(x)
    if x.data.shape[-2] < 1:
        raise DimensionError("global_max_pool needs a non-empty token axis")
    idx = np.argmax(x.data, axis=-2)
    out = Tensor(np.max(x.data, axis=-2))

    def back(g):
        dx = np.zeros_like(x.data)
        np.put_along_axis(dx, np.expand_dims(idx, -2), np.expand_dims(g, -2), axis=-2)
        return (dx,)

    return _record(out, (x,), back)


def relu(a) -> Tensor:
    a = _lift(a)
    out = Tensor(np.maximum(a.data, 0.0))
    pos = a.data > 0
    return _record(out, (a,), lambda g: (g * pos,))


def sigmoid(a) -> Tensor:
    a = _lift(a)
    x = a.data
    y = np.empty_like(x)
    pos = x >= 0
    y[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    y[~pos] = ex / (1.0 + ex)
    out = Tensor(y)
    return _record(out, (a,), lambda g: (g * y * (1.0 - y),))


def softmax(a) -> Tensor:
    """Softmax over the last axis; rows sum to one."""
    a = _lift(a)
    shifted = a.data - a.data.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=-1, keepdims=True)
    out = Tensor(y)

    def back(g):
        dot = (g * y).sum(axis=-1, keepdims=True)
        return (y * (g - dot),)

    return _record(out, (a,), back)


def apply_activation(kind: str, x) -> Tensor:
    if kind == "relu":
        return relu(x)
    if kind == "sigmoid":
        return sigmoid(x)
    if kind == "softmax":
        return softmax(x)
    if kind == "none":
        return _lift(x)
    raise ConfigError(f"unknown activation kind: {kind!r}")


# ---------------------------------------------------------------------------
# structural ops


def reshape(a, shape) -> Tensor:
    a = _lift(a)
    old = a.data.shape
    out = Tensor(a.data.reshape(shape))
    return _record(out, (a,), lambda g: (g.reshape(old),))


def gather_rows(table, ids: np.ndarray, frozen_row: Optional[int] = None) -> Tensor:
    """Row gather: output[..., :] = table[ids[...], :].

    Backward scatter-adds into the gathered rows; ``frozen_row`` (if given)
    never receives gradient.
    """
    table = _lift(table)
    ids = np.asarray(ids)
    out = Tensor(table.data[ids])

    def back(g):
        dt = np.zeros_like(table.data)
        np.add.at(dt, ids.reshape(-1), g.reshape(-1, table.data.shape[1]))
        if frozen_row is not None:
            dt[frozen_row] = 0.0
        return (dt,)

    return _record(out, (table,), back)


def scatter_rows(values, row_index: np.ndarray, num_rows: int) -> Tensor:
    """Place rows of ``values`` [N, d] at unique ``row_index`` in a zero [num_rows, d]."""
    values = _lift(values)
    out_data = np.zeros((num_rows,) + values.data.shape[1:], dtype=np.float64)
    out_data[row_index] = values.data
    out = Tensor(out_data)
    return _record(out, (values,), lambda g: (g[row_index],))


def append_row(y, row) -> Tensor:
    """Append one broadcast row along the window axis: [N, W, c] + [c] -> [N, W+1, c]."""
    y, row = _lift(y), _lift(row)
    n, w, c = y.data.shape
    out_data = np.empty((n, w + 1, c), dtype=np.float64)
    out_data[:, :w] = y.data
    out_data[:, w] = row.data
    out = Tensor(out_data)
    return _record(out, (y, row), lambda g: (g[:, :w], g[:, w].sum(axis=0)))


def select_index(x, idx: np.ndarray) -> Tensor:
    """Pick one column per row: out[b] = x[b, idx[b]]."""
    x = _lift(x)
    idx = np.asarray(idx)
    rows = np.arange(x.data.shape[0])
    out = Tensor(x.data[rows, idx])

    def back(g):
        dx = np.zeros_like(x.data)
        dx[rows, idx] = g
        return (dx,)

    return _record(out, (x,), back)


# ---------------------------------------------------------------------------
# random sampling


def sample_gumbel(shape, rng: np.random.Generator) -> Tensor:
    """Standard Gumbel draws G = -log(-log u), u ~ Uniform(0, 1).

    Uniforms are clamped away from {0, 1} so the double log stays finite.
    """
    u = np.clip(rng.random(shape), UNIFORM_EPS, 1.0 - UNIFORM_EPS)
    return Tensor(-np.log(-np.log(u)))
