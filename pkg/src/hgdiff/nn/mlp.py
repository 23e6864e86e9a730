"""Multi-layer perceptrons with optional LayerNorm, ReLU and inverted dropout."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..exceptions import StaleCacheError, ValidationError
from .rng import make_rng
from .tensor import Tensor, add, dropout, layer_norm, matmul, relu

LN_EPS = 1e-5


@dataclass
class MlpParams:
    """Weights of an MLP with ``len(weights)`` affine layers (0 = identity).

    Hidden layers run affine, LayerNorm (if enabled), ReLU and dropout; the
    last layer is affine only.
    """

    weights: list = field(default_factory=list)
    biases: list = field(default_factory=list)
    ln_scale: list = field(default_factory=list)
    ln_shift: list = field(default_factory=list)
    layer_norm: bool = True
    version: int = 0

    @classmethod
    def init(cls, in_dim, hidden_dim, out_dim, num_layers, rng, layer_norm=True, dtype=np.float64):
        """Glorot-uniform weights, zero biases, unit LayerNorm scales."""
        rng = make_rng(rng)
        if num_layers < 0:
            raise ValidationError("num_layers must be >= 0")
        if num_layers == 0 and in_dim != out_dim:
            raise ValidationError(f"an identity MLP needs in_dim == out_dim ({in_dim} != {out_dim})")
        dims = [in_dim] + [hidden_dim] * (num_layers - 1) + [out_dim] if num_layers else [in_dim]
        p = cls(layer_norm=layer_norm)
        for i in range(num_layers):
            fan_in, fan_out = dims[i], dims[i + 1]
            bound = np.sqrt(6.0 / (fan_in + fan_out))
            p.weights.append(Tensor(rng.uniform(-bound, bound, (fan_in, fan_out)).astype(dtype), requires_grad=True))
            p.biases.append(Tensor(np.zeros(fan_out, dtype=dtype), requires_grad=True))
            if layer_norm and i < num_layers - 1:
                p.ln_scale.append(Tensor(np.ones(fan_out, dtype=dtype), requires_grad=True))
                p.ln_shift.append(Tensor(np.zeros(fan_out, dtype=dtype), requires_grad=True))
        return p

    @property
    def num_layers(self):
        return len(self.weights)

    @property
    def in_dim(self):
        return self.weights[0].shape[0] if self.weights else None

    @property
    def out_dim(self):
        return self.weights[-1].shape[1] if self.weights else None

    def parameters(self):
        return [*self.weights, *self.biases, *self.ln_scale, *self.ln_shift]

    def num_parameters(self):
        return int(sum(p.data.size for p in self.parameters()))


def mlp_apply(params: MlpParams, x, train=False, dropout_rate=0.0, rng=None) -> Tensor:
    """Forward pass on tensors, recording the autodiff graph."""
    n = params.num_layers
    for i in range(n):
        w = params.weights[i]
        if x.shape[-1] != w.shape[0]:
            raise ValidationError(f"layer {i}: input width {x.shape[-1]} does not match weight rows {w.shape[0]}")
        x = add(matmul(x, w), params.biases[i])
        if i < n - 1:
            if params.layer_norm:
                x = layer_norm(x, params.ln_scale[i], params.ln_shift[i], LN_EPS)
            x = relu(x)
            if train and dropout_rate > 0:
                x = dropout(x, dropout_rate, rng)
    return x


@dataclass
class MlpCache:
    inputs: Tensor
    output: Tensor
    version: int


def mlp_forward(params: MlpParams, x, train_mode=False, dropout_rate=0.0, seed=0):
    """Run the MLP on a numpy input; returns ``(output, cache)``."""
    inp = Tensor(np.asarray(x), requires_grad=True)
    out = mlp_apply(params, inp, train_mode, dropout_rate, make_rng(seed))
    return out.data, MlpCache(inp, out, params.version)


def mlp_backward(params: MlpParams, cache: MlpCache, output_grad):
    """Gradients w.r.t. the input and every parameter for a forward cache.

    Returns ``(input_grad, param_grads)`` with ``param_grads`` ordered as
    :meth:`MlpParams.parameters`.
    """
    if cache.version != params.version:
        raise StaleCacheError("parameters changed since this forward pass")
    for p in params.parameters():
        p.zero_grad()
    cache.inputs.zero_grad()
    if params.num_layers == 0:
        return np.array(output_grad, copy=True), []
    cache.output.backward(np.asarray(output_grad, dtype=cache.output.dtype))
    grads = [p.grad if p.grad is not None else np.zeros_like(p.data) for p in params.parameters()]
    return cache.inputs.grad, grads
