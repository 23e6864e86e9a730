"""A small reverse-mode autodiff engine over dense numpy arrays.

Only the operations the diffusion networks need are provided. Every op
records a closure that pushes its output gradient to its inputs; ``backward``
replays them in reverse topological order.
"""

from __future__ import annotations

import numpy as np

from ..exceptions import NumericError


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "name")

    def __init__(self, data, requires_grad=False, name=None, _parents=(), _backward=None):
        self.data = np.asarray(data)
        self.grad = None
        self.requires_grad = requires_grad or any(p.requires_grad for p in _parents)
        self._parents = _parents
        self._backward = _backward
        self.name = name

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    def numpy(self):
        return self.data

    def zero_grad(self):
        self.grad = None

    def _accum(self, g):
        if not self.requires_grad:
            return
        if self.grad is None:
            self.grad = np.array(g, dtype=self.data.dtype, copy=True)
        else:
            self.grad += g

    def backward(self, grad=None):
        if grad is None:
            if self.data.size != 1:
                raise ValueError("backward() without a gradient needs a scalar output")
            grad = np.ones_like(self.data)
        order = []
        seen = set()
        stack = [(self, False)]
        while stack:
            node, done = stack.pop()
            if done:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if p.requires_grad and id(p) not in seen:
                    stack.append((p, False))
        grads = {id(self): np.asarray(grad, dtype=self.data.dtype)}
        for node in reversed(order):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node._backward is None:
                node._accum(g)
                continue
            for parent, pg in zip(node._parents, node._backward(g)):
                if pg is None or not parent.requires_grad:
                    continue
                key = id(parent)
                if key in grads:
                    grads[key] = grads[key] + pg
                else:
                    grads[key] = pg

    # operator sugar
    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return add(self, scale(other, -1.0))

    def __mul__(self, other):
        return mul(self, other)

    def __matmul__(self, other):
        return matmul(self, other)


def as_tensor(x, dtype=None):
    if isinstance(x, Tensor):
        return x
    return Tensor(np.asarray(x, dtype=dtype))


def _unbroadcast(g, shape):
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for i, n in enumerate(shape):
        if n == 1 and g.shape[i] != 1:
            g = g.sum(axis=i, keepdims=True)
    return g


def check_finite(t: Tensor, where: str) -> Tensor:
    if not np.all(np.isfinite(t.data)):
        raise NumericError(f"non-finite values after {where}")
    return t


def add(a, b):
    a, b = as_tensor(a), as_tensor(b)
    sa, sb = a.shape, b.shape
    return Tensor(a.data + b.data, _parents=(a, b),
                  _backward=lambda g: (_unbroadcast(g, sa), _unbroadcast(g, sb)))


def mul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    ad, bd = a.data, b.data
    return Tensor(ad * bd, _parents=(a, b),
                  _backward=lambda g: (_unbroadcast(g * bd, ad.shape), _unbroadcast(g * ad, bd.shape)))


def scale(a, c: float):
    a = as_tensor(a)
    return Tensor(a.data * c, _parents=(a,), _backward=lambda g: (g * c,))


def matmul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    ad, bd = a.data, b.data
    return Tensor(ad @ bd, _parents=(a, b), _backward=lambda g: (g @ bd.T, ad.T @ g))


def relu(a):
    a = as_tensor(a)
    mask = a.data > 0
    return Tensor(np.where(mask, a.data, 0.0).astype(a.dtype), _parents=(a,),
                  _backward=lambda g: (g * mask,))


def concat(tensors, axis=1):
    tensors = [as_tensor(t) for t in tensors]
    sizes = [t.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]
    return Tensor(np.concatenate([t.data for t in tensors], axis=axis), _parents=tuple(tensors),
                  _backward=lambda g: tuple(np.split(g, splits, axis=axis)))


def gather_rows(a, index):
    """``a[index]`` for an integer row index."""
    a = as_tensor(a)
    n = a.shape[0]
    index = np.asarray(index)

    def back(g):
        out = np.zeros((n,) + g.shape[1:], dtype=g.dtype)
        np.add.at(out, index, g)
        return (out,)

    return Tensor(a.data[index], _parents=(a,), _backward=back)


def sparse_matmul(mat, a):
    """``mat @ a`` for a constant scipy sparse matrix (segment sums)."""
    a = as_tensor(a)
    mat_t = mat.T.tocsr()
    return Tensor(np.asarray(mat @ a.data, dtype=a.dtype), _parents=(a,),
                  _backward=lambda g: (np.asarray(mat_t @ g, dtype=g.dtype),))


def layer_norm(a, gamma, beta, eps=1e-5):
    """Row-wise layer normalisation with affine scale and shift."""
    a, gamma, beta = as_tensor(a), as_tensor(gamma), as_tensor(beta)
    x = a.data
    mu = x.mean(axis=-1, keepdims=True)
    xc = x - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv
    out = xhat * gamma.data + beta.data
    n = x.shape[-1]

    def back(g):
        dxhat = g * gamma.data
        dx = inv / n * (n * dxhat - dxhat.sum(-1, keepdims=True)
                        - xhat * (dxhat * xhat).sum(-1, keepdims=True))
        return dx, _unbroadcast(g * xhat, gamma.shape), _unbroadcast(g, beta.shape)

    return Tensor(out, _parents=(a, gamma, beta), _backward=back)


def dropout(a, rate, rng, train=True):
    """Inverted dropout: scales kept units by ``1/(1 - rate)``; identity in eval."""
    a = as_tensor(a)
    if not train or rate <= 0:
        return a
    keep = (rng.random(a.shape) >= rate).astype(a.dtype) / (1.0 - rate)
    return Tensor(a.data * keep, _parents=(a,), _backward=lambda g: (g * keep,))


def mean(a):
    a = as_tensor(a)
    n = a.data.size
    return Tensor(np.asarray(a.data.mean()), _parents=(a,),
                  _backward=lambda g: (np.full(a.shape, g / n, dtype=a.dtype),))


def sum_all(a):
    a = as_tensor(a)
    return Tensor(np.asarray(a.data.sum()), _parents=(a,),
                  _backward=lambda g: (np.full(a.shape, g, dtype=a.dtype),))
