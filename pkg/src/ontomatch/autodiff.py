"""Minimal reverse-mode automatic differentiation over numpy arrays.

Just enough machinery for the pair scorer: a Tensor wrapping an ndarray,
a tape built from parent links and per-node backward closures, and the
handful of ops the encoders need. Gradients accumulate into ``.grad``.
"""

from __future__ import annotations

import numpy as np

_grad_enabled = True


class no_grad:
    """Context manager disabling tape construction (inference mode)."""

    def __enter__(self):
        global _grad_enabled
        self._prev = _grad_enabled
        _grad_enabled = False
        return self

    def __exit__(self, *exc):
        global _grad_enabled
        _grad_enabled = self._prev
        return False


class Tensor:
    __slots__ = ("data", "grad", "_parents", "_backward")

    def __init__(self, data, parents=(), backward=None):
        self.data = np.asarray(data)
        self.grad = None
        self._parents = parents
        self._backward = backward

    @property
    def shape(self):
        return self.data.shape

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype})"

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return add(self, mul(other, -1.0))

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(self, other)

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, key):
        return take(self, key)

    def backward(self):
        """Backpropagate from this tensor; seeds with ones."""
        topo: list[Tensor] = []
        visited: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                topo.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if id(parent) not in visited:
                    stack.append((parent, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)


def _node(data, parents, backward):
    if not _grad_enabled:
        return Tensor(data)
    return Tensor(data, parents=parents, backward=backward)


def _accumulate(tensor: Tensor, grad: np.ndarray) -> None:
    if tensor.grad is None:
        tensor.grad = grad.copy() if isinstance(grad, np.ndarray) else np.asarray(grad)
    else:
        tensor.grad = tensor.grad + grad


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum grad over axes that were broadcast to produce ``grad.shape``."""
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


def _raw(x):
    return x.data if isinstance(x, Tensor) else np.asarray(x)


def add(a, b):
    a_t, b_t = isinstance(a, Tensor), isinstance(b, Tensor)
    out = _raw(a) + _raw(b)
    parents = tuple(x for x, is_t in ((a, a_t), (b, b_t)) if is_t)

    def backward(g):
        if a_t:
            _accumulate(a, _unbroadcast(g, a.data.shape))
        if b_t:
            _accumulate(b, _unbroadcast(g, b.data.shape))

    return _node(out, parents, backward)


def mul(a, b):
    a_t, b_t = isinstance(a, Tensor), isinstance(b, Tensor)
    ad, bd = _raw(a), _raw(b)
    parents = tuple(x for x, is_t in ((a, a_t), (b, b_t)) if is_t)

    def backward(g):
        if a_t:
            _accumulate(a, _unbroadcast(g * bd, a.data.shape))
        if b_t:
            _accumulate(b, _unbroadcast(g * ad, b.data.shape))

    return _node(ad * bd, parents, backward)


def matmul(a: Tensor, b: Tensor):
    """a @ b where b is a 2-D parameter matrix; a may have leading axes."""
    a_t, b_t = isinstance(a, Tensor), isinstance(b, Tensor)
    ad, bd = _raw(a), _raw(b)
    out = ad @ bd
    parents = tuple(x for x, is_t in ((a, a_t), (b, b_t)) if is_t)

    def backward(g):
        if a_t:
            _accumulate(a, g @ bd.T)
        if b_t:
            _accumulate(b, ad.reshape(-1, ad.shape[-1]).T @ g.reshape(-1, g.shape[-1]))

    return _node(out, parents, backward)


def tanh(x: Tensor):
    out = np.tanh(x.data)

    def backward(g):
        _accumulate(x, g * (1.0 - out * out))

    return _node(out, (x,), backward)


def sigmoid(x: Tensor):
    out = 1.0 / (1.0 + np.exp(-x.data))

    def backward(g):
        _accumulate(x, g * out * (1.0 - out))

    return _node(out, (x,), backward)


def relu(x: Tensor):
    mask = x.data > 0

    def backward(g):
        _accumulate(x, g * mask)

    return _node(x.data * mask, (x,), backward)


def log(x: Tensor):
    def backward(g):
        _accumulate(x, g / x.data)

    return _node(np.log(x.data), (x,), backward)


def clip(x: Tensor, lo: float, hi: float):
    """Clamp values; gradient passes only where values were inside."""
    inside = (x.data > lo) & (x.data < hi)

    def backward(g):
        _accumulate(x, g * inside)

    return _node(np.clip(x.data, lo, hi), (x,), backward)


def take(x: Tensor, key):
    """Indexing/gather; backward scatter-adds into the source."""
    out = x.data[key]

    def backward(g):
        full = np.zeros_like(x.data)
        np.add.at(full, key, g)
        _accumulate(x, full)

    return _node(out, (x,), backward)


def concat(tensors: list, axis: int = -1):
    datas = [_raw(t) for t in tensors]
    out = np.concatenate(datas, axis=axis)
    sizes = [d.shape[axis] for d in datas]
    offsets = np.cumsum([0] + sizes)
    tracked = [(i, t) for i, t in enumerate(tensors) if isinstance(t, Tensor)]

    def backward(g):
        for i, t in tracked:
            index = [slice(None)] * g.ndim
            index[axis] = slice(offsets[i], offsets[i + 1])
            _accumulate(t, g[tuple(index)])

    return _node(out, tuple(t for _, t in tracked), backward)


def stack(tensors: list, axis: int = 0):
    datas = [_raw(t) for t in tensors]
    out = np.stack(datas, axis=axis)
    tracked = [(i, t) for i, t in enumerate(tensors) if isinstance(t, Tensor)]

    def backward(g):
        moved = np.moveaxis(g, axis, 0)
        for i, t in tracked:
            _accumulate(t, moved[i])

    return _node(out, tuple(t for _, t in tracked), backward)


def reshape(x: Tensor, shape):
    def backward(g):
        _accumulate(x, g.reshape(x.data.shape))

    return _node(x.data.reshape(shape), (x,), backward)


def sum_(x: Tensor, axis=None, keepdims: bool = False):
    out = x.data.sum(axis=axis, keepdims=keepdims)

    def backward(g):
        if axis is None:
            _accumulate(x, np.broadcast_to(g, x.data.shape).copy())
            return
        if not keepdims:
            g = np.expand_dims(g, axis)
        _accumulate(x, np.broadcast_to(g, x.data.shape).copy())

    return _node(out, (x,), backward)


def mean(x: Tensor, axis=None, keepdims: bool = False):
    n = x.data.size if axis is None else x.data.shape[axis]
    return mul(sum_(x, axis=axis, keepdims=keepdims), 1.0 / n)


def max_(x: Tensor, axis: int):
    """Max along one axis; subgradient routes to the first argmax."""
    idx = np.argmax(x.data, axis=axis)
    out = np.take_along_axis(x.data, np.expand_dims(idx, axis), axis=axis).squeeze(axis)

    def backward(g):
        full = np.zeros_like(x.data)
        np.put_along_axis(
            full, np.expand_dims(idx, axis), np.expand_dims(g, axis), axis=axis
        )
        _accumulate(x, full)

    return _node(out, (x,), backward)


def dropout(x: Tensor, p: float, rng: np.random.Generator):
    """Inverted dropout; draws one mask per call from ``rng``."""
    if p <= 0.0:
        return x
    keep = (rng.random(x.data.shape) >= p).astype(x.data.dtype) / (1.0 - p)
    return mul(x, keep)
