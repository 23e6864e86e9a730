"""Training losses returning a scalar tensor with a fused backward."""

import numpy as np

from ..exceptions import ValidationError
from .tensor import Tensor, as_tensor


def softmax(logits):
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def cross_entropy(logits, labels, mask=None):
    """Mean softmax cross-entropy over the masked rows.

    Returns the loss tensor; its gradient is zero outside ``mask``.
    """
    logits = as_tensor(logits)
    labels = np.asarray(labels, dtype=np.int64)
    n, c = logits.shape
    mask = np.ones(n, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    rows = np.flatnonzero(mask)
    if rows.size == 0:
        raise ValidationError("cross_entropy needs a non-empty mask")
    if labels[rows].min() < 0 or labels[rows].max() >= c:
        raise ValidationError(f"labels must lie in [0, {c})")
    x = logits.data[rows]
    z = x - x.max(axis=1, keepdims=True)
    logsum = np.log(np.exp(z).sum(axis=1))
    loss = float(np.mean(logsum - z[np.arange(rows.size), labels[rows]]))
    probs = softmax(x)

    def back(g):
        d = probs.copy()
        d[np.arange(rows.size), labels[rows]] -= 1.0
        out = np.zeros_like(logits.data)
        out[rows] = d * (g / rows.size)
        return (out,)

    return Tensor(np.asarray(loss, dtype=logits.dtype), _parents=(logits,), _backward=back)


def cross_entropy_loss(logits, labels, mask=None):
    """Functional form: ``(loss, d loss / d logits)`` as numpy values."""
    t = Tensor(np.asarray(logits, dtype=float), requires_grad=True)
    loss = cross_entropy(t, labels, mask)
    loss.backward()
    return float(loss.data), t.grad


def mean_absolute_error(pred, target):
    pred = as_tensor(pred)
    target = np.asarray(target, dtype=pred.dtype)
    diff = pred.data - target
    n = diff.size
    sign = np.sign(diff)
    return Tensor(np.asarray(np.abs(diff).mean(), dtype=pred.dtype), _parents=(pred,),
                  _backward=lambda g: (sign * (g / n),))


def mean_squared_error(pred, target):
    pred = as_tensor(pred)
    diff = pred.data - np.asarray(target, dtype=pred.dtype)
    n = diff.size
    return Tensor(np.asarray((diff * diff).mean(), dtype=pred.dtype), _parents=(pred,),
                  _backward=lambda g: (2.0 * diff * (g / n),))
