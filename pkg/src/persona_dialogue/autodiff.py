"""Minimal reverse-mode automatic differentiation over numpy arrays.

Everything in this package that needs gradients is built from the small set
of operations below. Each op records its parents and a vector-Jacobian
product on a tape; ``backward`` walks the tape once in reverse topological
order. Arrays are kept in float64 unless the caller passes something else.
"""

from __future__ import annotations

import numpy as np


class Var:
    """A node in the computation graph wrapping one numpy array."""

    __slots__ = ("data", "grad", "_parents", "_vjp")

    def __init__(self, data, _parents=(), _vjp=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self._parents = _parents
        self._vjp = _vjp

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    def __repr__(self):
        return f"Var(shape={self.data.shape})"

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return add(self, neg(_wrap(other)))

    def __rsub__(self, other):
        return add(_wrap(other), neg(self))

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)


def _wrap(x) -> Var:
    return x if isinstance(x, Var) else Var(x)


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum ``grad`` down to ``shape`` to undo numpy broadcasting."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and grad.shape[ax] != 1:
            grad = grad.sum(axis=ax, keepdims=True)
    return grad


def add(a, b) -> Var:
    a, b = _wrap(a), _wrap(b)
    out_data = a.data + b.data

    def vjp(g):
        return _unbroadcast(g, a.data.shape), _unbroadcast(g, b.data.shape)

    return Var(out_data, (a, b), vjp)


def mul(a, b) -> Var:
    a, b = _wrap(a), _wrap(b)
    out_data = a.data * b.data

    def vjp(g):
        return (_unbroadcast(g * b.data, a.data.shape),
                _unbroadcast(g * a.data, b.data.shape))

    return Var(out_data, (a, b), vjp)


def neg(a) -> Var:
    a = _wrap(a)
    return Var(-a.data, (a,), lambda g: (-g,))


def matmul(a, b) -> Var:
    """Matrix product for the 1-d/2-d shape combinations numpy supports."""
    a, b = _wrap(a), _wrap(b)
    out_data = a.data @ b.data
    an, bn = a.data.ndim, b.data.ndim

    def vjp(g):
        if an == 2 and bn == 2:
            return g @ b.data.T, a.data.T @ g
        if an == 2 and bn == 1:
            return np.outer(g, b.data), a.data.T @ g
        if an == 1 and bn == 2:
            return g @ b.data.T, np.outer(a.data, g)
        if an == 1 and bn == 1:  # inner product -> scalar
            return g * b.data, g * a.data
        raise ValueError(f"unsupported matmul ranks {an}, {bn}")

    return Var(out_data, (a, b), vjp)


def tanh(a) -> Var:
    a = _wrap(a)
    out_data = np.tanh(a.data)
    return Var(out_data, (a,), lambda g: (g * (1.0 - out_data ** 2),))


def sigmoid(a) -> Var:
    a = _wrap(a)
    out_data = 1.0 / (1.0 + np.exp(-a.data))
    return Var(out_data, (a,), lambda g: (g * out_data * (1.0 - out_data),))


def exp(a) -> Var:
    a = _wrap(a)
    out_data = np.exp(a.data)
    return Var(out_data, (a,), lambda g: (g * out_data,))


def log(a) -> Var:
    a = _wrap(a)
    return Var(np.log(a.data), (a,), lambda g: (g / a.data,))


def vsum(a, axis=None, keepdims=False) -> Var:
    a = _wrap(a)
    out_data = a.data.sum(axis=axis, keepdims=keepdims)

    def vjp(g):
        g = np.asarray(g)
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, a.data.shape).copy(),)

    return Var(out_data, (a,), vjp)


def vmean(a, axis=None) -> Var:
    a = _wrap(a)
    n = a.data.size if axis is None else a.data.shape[axis]
    return mul(vsum(a, axis=axis), 1.0 / n)


def softmax(a) -> Var:
    """Stable softmax over the last axis."""
    a = _wrap(a)
    shifted = a.data - a.data.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    out_data = e / e.sum(axis=-1, keepdims=True)

    def vjp(g):
        dot = (g * out_data).sum(axis=-1, keepdims=True)
        return (out_data * (g - dot),)

    return Var(out_data, (a,), vjp)


def log_softmax(a) -> Var:
    """Stable log-softmax over the last axis."""
    a = _wrap(a)
    shifted = a.data - a.data.max(axis=-1, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
    out_data = shifted - lse

    def vjp(g):
        return (g - np.exp(out_data) * g.sum(axis=-1, keepdims=True),)

    return Var(out_data, (a,), vjp)


def concat(parts, axis=0) -> Var:
    parts = [_wrap(p) for p in parts]
    out_data = np.concatenate([p.data for p in parts], axis=axis)
    sizes = [p.data.shape[axis] for p in parts]
    splits = np.cumsum(sizes)[:-1]

    def vjp(g):
        return tuple(np.split(g, splits, axis=axis))

    return Var(out_data, tuple(parts), vjp)


def stack(parts, axis=0) -> Var:
    parts = [_wrap(p) for p in parts]
    out_data = np.stack([p.data for p in parts], axis=axis)

    def vjp(g):
        return tuple(np.moveaxis(g, axis, 0))

    return Var(out_data, tuple(parts), vjp)


def rows(a, idx) -> Var:
    """Select rows ``a[idx]`` (embedding lookup); scatter-adds on backward."""
    a = _wrap(a)
    idx = np.asarray(idx, dtype=np.intp)
    out_data = a.data[idx]

    def vjp(g):
        da = np.zeros_like(a.data)
        np.add.at(da, idx, g)
        return (da,)

    return Var(out_data, (a,), vjp)


def getitem(a, key) -> Var:
    """Indexing with gradient; duplicate fancy indices accumulate."""
    a = _wrap(a)
    out_data = a.data[key]

    def vjp(g):
        da = np.zeros_like(a.data)
        np.add.at(da, key, g)
        return (da,)

    return Var(out_data, (a,), vjp)


def reshape(a, shape) -> Var:
    a = _wrap(a)
    old = a.data.shape
    return Var(a.data.reshape(shape), (a,), lambda g: (g.reshape(old),))


def maxpool_columns(a) -> Var:
    """Column-wise max over axis 0 of a 2-d array.

    Ties route the gradient to the first maximal row, matching np.argmax.
    """
    a = _wrap(a)
    arg = a.data.argmax(axis=0)
    out_data = a.data[arg, np.arange(a.data.shape[1])]

    def vjp(g):
        da = np.zeros_like(a.data)
        da[arg, np.arange(a.data.shape[1])] = g
        return (da,)

    return Var(out_data, (a,), vjp)


def backward(out: Var, seed=None) -> None:
    """Accumulate gradients of ``out`` into every node of its graph."""
    topo: list[Var] = []
    visited: set[int] = set()
    stack_ = [(out, False)]
    while stack_:
        node, processed = stack_.pop()
        if processed:
            topo.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack_.append((node, True))
        for p in node._parents:
            if id(p) not in visited:
                stack_.append((p, False))

    for node in topo:
        node.grad = None
    out.grad = np.ones_like(out.data) if seed is None else np.asarray(seed, dtype=np.float64)

    for node in reversed(topo):
        if node._vjp is None or node.grad is None:
            continue
        for parent, g in zip(node._parents, node._vjp(node.grad)):
            if parent.grad is None:
                parent.grad = np.array(g, dtype=np.float64, copy=True)
            else:
                parent.grad += g
