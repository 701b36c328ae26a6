"""Dense float64 tensors with reverse-mode automatic differentiation.

Every operation records its inputs and a vector-Jacobian closure on the
output node; the resulting graph of parent links is the computation tape.
``backward(loss)`` replays that tape once, in reverse topological order,
accumulating gradients into ``.grad`` of every reachable node that
requires them. Repeated backward calls accumulate; call ``zero_grad`` on
parameters between optimizer steps.

Only the broadcasting the model needs is supported: numpy-style alignment
of a trailing/unit axis (a spatial grid of row vectors against a single
row vector). Anything fancier raises ``DimensionError``.

A graph is confined to the thread that built it; tensors created with
``requires_grad=False`` record nothing and are safe to share.
"""

from __future__ import annotations

import threading
from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, DimensionError, ParameterError

_SIGNED_SQRT_EPS = 1e-8  # derivative guard: d/dx = 1 / (2 * max(sqrt|x|, eps))
_L2_EPS = 1e-12  # denominator floor; the zero vector maps to the zero vector

_state = threading.local()


def _grad_enabled() -> bool:
    return getattr(_state, "grad_enabled", True)


@contextmanager
def no_grad():
    """Disable tape recording inside the block (inference paths)."""
    prev = _grad_enabled()
    _state.grad_enabled = False
    try:
        yield
    finally:
        _state.grad_enabled = prev


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_vjps", "_op")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self._parents: tuple[Tensor, ...] = ()
        self._vjps = ()
        self._op = "leaf"

    @property
    def shape(self):
        return self.data.shape

    @property
    def size(self):
        return self.data.size

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    def zero_grad(self):
        self.grad = None

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, op={self._op}, requires_grad={self.requires_grad})"

    # operator sugar; scalars and arrays are wrapped as constants
    def __add__(self, other):
        return add(self, _wrap(other))

    def __radd__(self, other):
        return add(_wrap(other), self)

    def __sub__(self, other):
        return add(self, neg(_wrap(other)))

    def __rsub__(self, other):
        return add(_wrap(other), neg(self))

    def __mul__(self, other):
        return ewise_mul(self, _wrap(other))

    def __rmul__(self, other):
        return ewise_mul(_wrap(other), self)

    def __matmul__(self, other):
        return matmul(self, _wrap(other))

    def __neg__(self):
        return neg(self)

    def sum(self, axis=None, keepdims=False):
        return tensor_sum(self, axis=axis, keepdims=keepdims)


def _wrap(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _make(data, parents, vjps, op) -> Tensor:
    """Build an op output node; prune the tape when no parent needs gradients."""
    out = Tensor(data)
    if _grad_enabled() and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._vjps = tuple(vjps)
        out._op = op
    return out


def _unbroadcast(g: np.ndarray, shape) -> np.ndarray:
    """Reduce a broadcast gradient back to the operand's shape."""
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


def toposort(root: Tensor) -> list[Tensor]:
    """Topological order of the recorded tape below ``root`` (parents first).

    Iterative DFS so deep recurrent chains cannot hit the recursion limit.
    Replaying the returned list in reverse visits each node exactly once
    with every consumer before its producers.
    """
    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in seen:
                stack.append((p, False))
    return order


def backward(loss: Tensor):
    """Populate ``.grad`` for every requires-grad tensor reachable from ``loss``.

    ``loss`` must hold a single element. Gradients accumulate across calls.
    """
    if loss.size != 1:
        raise ContractError(f"backward expects a scalar loss, got shape {loss.shape}")
    order = toposort(loss)
    grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    for node in reversed(order):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if node.requires_grad:
            node.grad = g if node.grad is None else node.grad + g
        for parent, vjp in zip(node._parents, node._vjps):
            if not parent.requires_grad:
                continue
            contrib = vjp(g)
            key = id(parent)
            if key in grads:
                grads[key] = grads[key] + contrib
            else:
                grads[key] = contrib


# ---------------------------------------------------------------------------
# primitives


def add(a: Tensor, b: Tensor) -> Tensor:
    try:
        data = a.data + b.data
    except ValueError:
        raise DimensionError(f"add: shapes {a.shape} and {b.shape} do not broadcast") from None
    return _make(
        data,
        (a, b),
        (lambda g: _unbroadcast(g, a.shape), lambda g: _unbroadcast(g, b.shape)),
        "add",
    )


def neg(a: Tensor) -> Tensor:
    return _make(-a.data, (a,), (lambda g: -g,), "neg")


def ewise_mul(a: Tensor, b: Tensor) -> Tensor:
    """Element-wise product with unit-axis broadcasting (grid x row vector)."""
    try:
        data = a.data * b.data
    except ValueError:
        raise DimensionError(f"ewise_mul: shapes {a.shape} and {b.shape} do not broadcast") from None
    return _make(
        data,
        (a, b),
        (
            lambda g: _unbroadcast(g * b.data, a.shape),
            lambda g: _unbroadcast(g * a.data, b.shape),
        ),
        "ewise_mul",
    )


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim != 2 or b.data.ndim != 2:
        raise DimensionError(f"matmul expects 2-D operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f"matmul: inner dimensions disagree: {a.shape} vs {b.shape}")
    return _make(
        a.data @ b.data,
        (a, b),
        (lambda g: g @ b.data.T, lambda g: a.data.T @ g),
        "matmul",
    )


def tensor_sum(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    data = a.data.sum(axis=axis, keepdims=keepdims)

    def vjp(g):
        if axis is None:
            return np.broadcast_to(g, a.shape).copy()
        gg = g if keepdims else np.expand_dims(g, axis)
        return np.broadcast_to(gg, a.shape).copy()

    return _make(data, (a,), (vjp,), "sum")


def signed_sqrt(a: Tensor) -> Tensor:
    """sign(x) * sqrt(|x|), with the derivative guarded near zero."""
    root = np.sqrt(np.abs(a.data))
    data = np.sign(a.data) * root
    denom = 2.0 * np.maximum(root, _SIGNED_SQRT_EPS)
    return _make(data, (a,), (lambda g: g / denom,), "signed_sqrt")


def l2_normalize(a: Tensor, axis=None) -> Tensor:
    """x / max(||x||_2, 1e-12) along ``axis`` (whole tensor when None)."""
    norm = np.sqrt(np.sum(a.data * a.data, axis=axis, keepdims=True))
    denom = np.maximum(norm, _L2_EPS)
    data = a.data / denom
    live = norm >= _L2_EPS  # below the floor the denominator is constant

    def vjp(g):
        inner = np.sum(g * data, axis=axis, keepdims=True)
        return np.where(live, (g - data * inner) / denom, g / _L2_EPS)

    return _make(data, (a,), (vjp,), "l2_normalize")


def softmax(a: Tensor, axis: int = -1) -> Tensor:
    """Numerically stable softmax (max-subtracted) along ``axis``."""
    if a.data.ndim == 0:
        raise DimensionError("softmax expects at least one axis")
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    data = e / e.sum(axis=axis, keepdims=True)

    def vjp(g):
        return data * (g - np.sum(g * data, axis=axis, keepdims=True))

    return _make(data, (a,), (vjp,), "softmax")


def relu(a: Tensor) -> Tensor:
    mask = a.data > 0  # subgradient at 0 is 0
    return _make(np.where(mask, a.data, 0.0), (a,), (lambda g: g * mask,), "relu")


def tanh(a: Tensor) -> Tensor:
    data = np.tanh(a.data)
    return _make(data, (a,), (lambda g: g * (1.0 - data * data),), "tanh")


def sigmoid(a: Tensor) -> Tensor:
    data = 1.0 / (1.0 + np.exp(-a.data))
    return _make(data, (a,), (lambda g: g * data * (1.0 - data),), "sigmoid")


def log(a: Tensor) -> Tensor:
    return _make(np.log(a.data), (a,), (lambda g: g / a.data,), "log")


def clamp_min(a: Tensor, floor: float) -> Tensor:
    """max(x, floor) element-wise; gradient passes only where x > floor."""
    mask = a.data > floor
    return _make(np.where(mask, a.data, floor), (a,), (lambda g: g * mask,), "clamp_min")


def dropout(a: Tensor, rate: float, training: bool, rng: np.random.Generator | None = None) -> Tensor:
    """Inverted dropout: survivors scaled by 1/(1-rate); identity in eval mode."""
    if not 0.0 <= rate < 1.0:
        raise ParameterError(f"dropout rate must be in [0, 1), got {rate}")
    if not training or rate == 0.0:
        return a
    if rng is None:
        raise ParameterError("dropout in training mode needs an rng")
    keep = (rng.random(a.shape) >= rate) / (1.0 - rate)
    return _make(a.data * keep, (a,), (lambda g: g * keep,), "dropout")


def transpose(a: Tensor) -> Tensor:
    if a.data.ndim != 2:
        raise DimensionError(f"transpose expects a 2-D tensor, got {a.shape}")
    return _make(a.data.T.copy(), (a,), (lambda g: g.T,), "transpose")


def reshape(a: Tensor, shape) -> Tensor:
    return _make(a.data.reshape(shape), (a,), (lambda g: g.reshape(a.shape),), "reshape")


def concat(parts: list[Tensor], axis: int = 1) -> Tensor:
    data = np.concatenate([p.data for p in parts], axis=axis)
    sizes = [p.shape[axis] for p in parts]
    offsets = np.cumsum([0] + sizes)

    def make_vjp(i):
        def vjp(g):
            sl = [slice(None)] * g.ndim
            sl[axis] = slice(offsets[i], offsets[i + 1])
            return g[tuple(sl)]

        return vjp

    return _make(data, tuple(parts), tuple(make_vjp(i) for i in range(len(parts))), "concat")


def narrow(a: Tensor, axis: int, start: int, length: int) -> Tensor:
    """Contiguous slice along one axis (used to split fused LSTM gates)."""
    sl = [slice(None)] * a.data.ndim
    sl[axis] = slice(start, start + length)
    sl = tuple(sl)

    def vjp(g):
        full = np.zeros(a.shape)
        full[sl] = g
        return full

    return _make(a.data[sl].copy(), (a,), (vjp,), "narrow")


def gather_rows(table: Tensor, ids) -> Tensor:
    """Rows ``table[ids]`` (embedding lookup); gradients scatter-add back."""
    ids = np.asarray(ids, dtype=np.int64)
    if table.data.ndim != 2:
        raise DimensionError(f"gather_rows expects a 2-D table, got {table.shape}")

    def vjp(g):
        full = np.zeros(table.shape)
        np.add.at(full, ids, g)
        return full

    return _make(table.data[ids], (table,), (vjp,), "gather_rows")


def index(a: Tensor, idx: tuple) -> Tensor:
    """A single element as a scalar tensor."""

    def vjp(g):
        full = np.zeros(a.shape)
        full[idx] = g
        return full

    return _make(a.data[idx], (a,), (vjp,), "index")


# ---------------------------------------------------------------------------
# recurrent cell


@dataclass
class LSTMParams:
    """One gated recurrent cell: wx (in, 4h), wh (h, 4h), b (4h,) with gate
    order input | forget | output | candidate along the fused axis."""

    wx: Tensor
    wh: Tensor
    b: Tensor

    @property
    def hidden(self) -> int:
        return self.wh.shape[0]


def lstm_step(x: Tensor, h_prev: Tensor, c_prev: Tensor, params: LSTMParams):
    """Single gated recurrent update; returns (h, c), each (1, hidden)."""
    h = params.hidden
    z = add(add(matmul(x, params.wx), matmul(h_prev, params.wh)), params.b)
    i = sigmoid(narrow(z, 1, 0, h))
    f = sigmoid(narrow(z, 1, h, h))
    o = sigmoid(narrow(z, 1, 2 * h, h))
    g = tanh(narrow(z, 1, 3 * h, h))
    c = add(ewise_mul(f, c_prev), ewise_mul(i, g))
    h_new = ewise_mul(o, tanh(c))
    return h_new, c
