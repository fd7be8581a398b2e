"""Reverse-mode differentiation over dense float64 arrays.

Each op returns a new :class:`Tensor` that remembers its inputs and a closure
mapping the output cotangent to input cotangents. :func:`backward` walks the
recorded graph in reverse topological order.
"""
from __future__ import annotations

import contextlib

import numpy as np

from ..errors import InvalidArgumentError

_GRAD_ENABLED = True
DEBUG_FINITE = False


@contextlib.contextmanager
def no_grad():
    global _GRAD_ENABLED
    prev = _GRAD_ENABLED
    _GRAD_ENABLED = False
    try:
        yield
    finally:
        _GRAD_ENABLED = prev


class Tensor:
    __slots__ = ("data", "parents", "backward_fn", "op")
    __array_ufunc__ = None

    def __init__(self, data, parents=(), backward_fn=None, op="leaf"):
        self.data = np.asarray(data, dtype=np.float64)
        if DEBUG_FINITE and not np.all(np.isfinite(self.data)):
            raise FloatingPointError(f"non-finite values produced by {op}")
        self.parents = parents
        self.backward_fn = backward_fn
        self.op = op

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    def numpy(self):
        return self.data

    def __repr__(self):
        return f"Tensor(shape={self.shape}, op={self.op})"

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __rmatmul__(self, other):
        return matmul(other, self)

    def __getitem__(self, idx):
        return getitem(self, idx)

    def sum(self, axis=None, keepdims=False):
        return tsum(self, axis, keepdims)

    def mean(self, axis=None, keepdims=False):
        return mean(self, axis, keepdims)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def transpose(self, *axes):
        return transpose(self, axes if axes else None)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _make(data, parents, backward_fn, op):
    if not _GRAD_ENABLED:
        return Tensor(data, op=op)
    return Tensor(data, parents, backward_fn, op)


def unbroadcast(g: np.ndarray, shape) -> np.ndarray:
    """Sum ``g`` down to ``shape`` after numpy broadcasting."""
    if g.shape == tuple(shape):
        return g
    extra = g.ndim - len(shape)
    if extra:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


def backward(loss: Tensor, params=None):
    """Gradients of scalar ``loss`` with respect to ``params`` (name -> Tensor).

    Parameters the loss does not depend on get zero gradients. Without
    ``params`` a dict keyed by ``id(tensor)`` for every node is returned.
    """
    if loss.data.size != 1:
        raise InvalidArgumentError(f"loss must be scalar, got shape {loss.shape}")

    order = []
    seen = set()
    stack = [(loss, False)]
    while stack:
        node, done = stack.pop()
        if done:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node.parents:
            if id(p) not in seen:
                stack.append((p, False))

    grads = {id(loss): np.ones_like(loss.data)}
    for node in reversed(order):
        g = grads.get(id(node))
        if g is None or node.backward_fn is None:
            continue
        for parent, pg in zip(node.parents, node.backward_fn(g)):
            if pg is None:
                continue
            key = id(parent)
            if key in grads:
                grads[key] = grads[key] + pg
            else:
                grads[key] = pg
        if node is not loss:
            del grads[id(node)]

    if params is None:
        return grads
    return {name: grads.get(id(t), np.zeros_like(t.data)) for name, t in params.items()}


# ---------------------------------------------------------------- elementwise

def add(x, y):
    x, y = as_tensor(x), as_tensor(y)
    return _make(x.data + y.data, (x, y),
                 lambda g: (unbroadcast(g, x.shape), unbroadcast(g, y.shape)), "add")


def sub(x, y):
    x, y = as_tensor(x), as_tensor(y)
    return _make(x.data - y.data, (x, y),
                 lambda g: (unbroadcast(g, x.shape), unbroadcast(-g, y.shape)), "sub")


def mul(x, y):
    x, y = as_tensor(x), as_tensor(y)
    return _make(x.data * y.data, (x, y),
                 lambda g: (unbroadcast(g * y.data, x.shape), unbroadcast(g * x.data, y.shape)), "mul")


def div(x, y):
    x, y = as_tensor(x), as_tensor(y)
    out = x.data / y.data

    def bw(g):
        gx = g / y.data
        return unbroadcast(gx, x.shape), unbroadcast(-gx * out, y.shape)

    return _make(out, (x, y), bw, "div")


def square(x):
    x = as_tensor(x)
    return _make(x.data * x.data, (x,), lambda g: (2.0 * g * x.data,), "square")


def sqrt(x):
    x = as_tensor(x)
    out = np.sqrt(x.data)
    return _make(out, (x,), lambda g: (g * 0.5 / out,), "sqrt")


def relu(x):
    x = as_tensor(x)
    mask = x.data > 0
    return _make(np.where(mask, x.data, 0.0), (x,), lambda g: (g * mask,), "relu")


def norm(x, axis=-1):
    """Euclidean norm along ``axis``; the subgradient at zero is taken as zero."""
    x = as_tensor(x)
    out = np.sqrt(np.sum(x.data * x.data, axis=axis))

    def bw(g):
        o = np.expand_dims(out, axis)
        scale = np.where(o > 0, np.expand_dims(g, axis) / np.where(o > 0, o, 1.0), 0.0)
        return (scale * x.data,)

    return _make(out, (x,), bw, "norm")


# ---------------------------------------------------------------- reductions / shape

def tsum(x, axis=None, keepdims=False):
    x = as_tensor(x)
    out = np.sum(x.data, axis=axis, keepdims=keepdims)

    def bw(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, x.shape).copy(),)

    return _make(out, (x,), bw, "sum")


def mean(x, axis=None, keepdims=False):
    x = as_tensor(x)
    count = x.data.size if axis is None else np.prod([x.shape[a] for a in np.atleast_1d(axis)])
    return mul(tsum(x, axis, keepdims), 1.0 / count)


def reshape(x, shape):
    x = as_tensor(x)
    return _make(x.data.reshape(shape), (x,), lambda g: (g.reshape(x.shape),), "reshape")


def transpose(x, axes=None):
    x = as_tensor(x)
    inv = None if axes is None else np.argsort(axes)
    return _make(np.transpose(x.data, axes), (x,), lambda g: (np.transpose(g, inv),), "transpose")


def swapaxes(x, a, b):
    x = as_tensor(x)
    return _make(np.swapaxes(x.data, a, b), (x,), lambda g: (np.swapaxes(g, a, b),), "swapaxes")


def _is_basic_index(idx):
    items = idx if isinstance(idx, tuple) else (idx,)
    return all(isinstance(i, (int, slice, type(None), type(Ellipsis))) for i in items)


def getitem(x, idx):
    x = as_tensor(x)
    basic = _is_basic_index(idx)

    def bw(g):
        gx = np.zeros_like(x.data)
        if basic:
            gx[idx] += g
        else:
            np.add.at(gx, idx, g)
        return (gx,)

    return _make(x.data[idx], (x,), bw, "getitem")


def concat(xs, axis=0):
    xs = [as_tensor(x) for x in xs]
    sizes = [x.shape[axis] for x in xs]
    splits = np.cumsum(sizes)[:-1]
    out = np.concatenate([x.data for x in xs], axis=axis)
    return _make(out, tuple(xs), lambda g: tuple(np.split(g, splits, axis=axis)), "concat")


def stack(xs, axis=0):
    xs = [as_tensor(x) for x in xs]
    out = np.stack([x.data for x in xs], axis=axis)

    def bw(g):
        return tuple(np.take(g, i, axis=axis) for i in range(len(xs)))

    return _make(out, tuple(xs), bw, "stack")


def matmul(x, y):
    """``np.matmul`` for operands with at least two dimensions (batch axes broadcast)."""
    x, y = as_tensor(x), as_tensor(y)
    if x.ndim < 2 or y.ndim < 2:
        raise InvalidArgumentError("matmul operands need at least two dimensions")
    if x.shape[-1] != y.shape[-2]:
        raise InvalidArgumentError(f"matmul shape mismatch {x.shape} @ {y.shape}")
    out = x.data @ y.data

    def bw(g):
        gx = g @ np.swapaxes(y.data, -1, -2)
        gy = np.swapaxes(x.data, -1, -2) @ g
        return unbroadcast(gx, x.shape), unbroadcast(gy, y.shape)

    return _make(out, (x, y), bw, "matmul")
