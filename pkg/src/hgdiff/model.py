"""Equivariant diffusion hypergraph networks.

One layer of :func:`propagate` is a V -> E -> V message-passing round on the
star expansion:

1. node-to-edge messages ``m_{u->e} = phi(h_u)`` (``phi(m_prev, h_u)`` for
   the ``ed_hnn_ii`` variant),
2. hyperedge sums ``m_e``,
3. edge-to-node messages ``m_{e->v} = rho(h_v, m_e)`` (``rho(m_e)`` for the
   invariant baseline),
4. node update ``h_v = update(h_v, sum_e m_{e->v}, x_v, d_v)``.

The same three maps are applied at every layer, so the parameter count does
not depend on depth.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np

from .exceptions import ValidationError
from .hypergraph import Hypergraph
from .nn import tensor as T
from .nn.checkpoint import load_arrays, save_arrays
from .nn.mlp import MlpParams, mlp_apply
from .nn.rng import make_rng

VARIANTS = ("ed_hnn", "ed_hnn_ii", "invariant_baseline")


@dataclass
class EdHnnConfig:
    """Architecture and regularisation settings.

    ``out_dim`` is the number of classes for classification. With
    ``task="regression"`` there is no classifier head and, unless
    ``input_encoder`` is set, node states keep the input width so the node
    update emits the prediction directly.
    """

    in_dim: int = 1
    out_dim: int = 2
    num_layers: int = 2
    hidden_dim: int = 64
    phi_layers: int = 2
    rho_layers: int = 2
    update_layers: int = 2
    cls_layers: int = 2
    cls_hidden: int = 64
    variant: str = "ed_hnn"
    task: str = "classification"
    input_encoder: Optional[bool] = None
    input_dropout: float = 0.2
    dropout: float = 0.3
    layer_norm: bool = True
    dtype: str = "float64"

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValidationError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.task not in ("classification", "regression"):
            raise ValidationError(f"task must be classification or regression, got {self.task!r}")
        if self.num_layers < 1:
            raise ValidationError("num_layers must be at least 1")
        for name in ("phi_layers", "rho_layers", "update_layers", "cls_layers"):
            if getattr(self, name) < 0:
                raise ValidationError(f"{name} must be >= 0")
        if self.input_encoder is None:
            self.input_encoder = self.task == "classification"
        if self.task == "classification" and self.cls_layers < 1:
            raise ValidationError("classification needs at least one classifier layer")

    @property
    def state_dim(self) -> int:
        return self.hidden_dim if self.input_encoder else self.in_dim

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, doc: dict) -> "EdHnnConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(doc) - known
        if unknown:
            raise ValidationError(f"unknown model config keys {sorted(unknown)}")
        return cls(**doc)


class GraphOps:
    """Sparse gather/scatter operators of a hypergraph's star expansion."""

    def __init__(self, h: Hypergraph):
        exp = h.expansion
        self.num_nodes = h.num_nodes
        self.num_pairs = exp.num_pairs
        self.node_to_pair = exp.node_sum_matrix.T.tocsr()   # P x N gather
        self.pair_to_node = exp.node_sum_matrix              # N x P sum
        self.pair_to_edge = exp.edge_sum_matrix              # M x P sum
        self.edge_to_pair = exp.edge_sum_matrix.T.tocsr()    # P x M broadcast
        self.edge_to_node = h.incidence_matrix               # N x M sum over incident edges
        self.degrees = h.node_degrees.astype(np.float64)[:, None]

    @classmethod
    def of(cls, h: Hypergraph) -> "GraphOps":
        ops = h.__dict__.get("_graph_ops")
        if ops is None:
            ops = cls(h)
            h.__dict__["_graph_ops"] = ops
        return ops


@dataclass
class MessageBuffers:
    """Messages of the most recent layer, kept for inspection."""

    node_to_edge: Optional[np.ndarray] = None
    edge_sums: Optional[np.ndarray] = None
    edge_to_node: Optional[np.ndarray] = None
    history: list = field(default_factory=list)


def propagate(h: Hypergraph, H, X, phi: Callable, rho: Callable, update: Callable,
              num_layers: int, variant: str = "ed_hnn", initial_message=None,
              buffers: Optional[MessageBuffers] = None):
    """Run ``num_layers`` shared-weight V -> E -> V rounds.

    ``H`` and ``X`` are node-row tensors. ``phi`` maps pair rows (for
    ``ed_hnn_ii`` it receives ``(previous_message, h_u)``), ``rho`` receives
    ``(h_v, m_e)`` on pair rows or ``m_e`` on hyperedge rows for the
    invariant baseline, and ``update`` receives ``(h, aggregated, x, degree)``.
    """
    ops = GraphOps.of(h)
    H = T.as_tensor(H)
    X = T.as_tensor(X)
    deg = T.Tensor(ops.degrees.astype(H.dtype))
    prev = None
    if variant == "ed_hnn_ii":
        if initial_message is None:
            raise ValidationError("ed_hnn_ii needs an initial incidence message")
        ones = T.Tensor(np.ones((ops.num_pairs, 1), dtype=H.dtype))
        prev = T.mul(ones, initial_message)
    for _ in range(num_layers):
        h_pairs = T.sparse_matmul(ops.node_to_pair, H)
        if variant == "ed_hnn_ii":
            m_pair = phi(prev, h_pairs)
            prev = m_pair
        else:
            m_pair = phi(h_pairs)
        m_edge = T.sparse_matmul(ops.pair_to_edge, m_pair)
        if variant == "invariant_baseline":
            m_out = rho(m_edge)
            agg = T.sparse_matmul(ops.edge_to_node, m_out)
        else:
            m_out = rho(h_pairs, T.sparse_matmul(ops.edge_to_pair, m_edge))
            agg = T.sparse_matmul(ops.pair_to_node, m_out)
        H = update(H, agg, X, deg)
        if buffers is not None:
            buffers.node_to_edge = m_pair.data
            buffers.edge_sums = m_edge.data
            buffers.edge_to_node = m_out.data
            buffers.history.append(H.data)
    return H


def analytic_ce_operators(eta: float):
    """Exact ``(phi, rho, update)`` reproducing one CE gradient step.

    ``phi(h) = (h, 1)`` so hyperedge sums carry ``(S, |e|)``;
    ``rho(h, (S, n)) = 4 (n h - S)`` is the CE gradient for member ``h``;
    the update is ``h - eta (2 (h - x) + sum rho)`` for a quadratic node
    potential. Inputs are single-channel.
    """

    def phi(hp):
        ones = T.Tensor(np.ones_like(hp.data))
        return T.concat([hp, ones], axis=1)

    def rho(hv, me):
        s = T.Tensor(me.data[:, :1])
        n = T.Tensor(me.data[:, 1:2])
        return T.scale(T.add(T.mul(n, hv), T.scale(s, -1.0)), 4.0)

    def update(hv, agg, x, _deg):
        grad = T.add(T.scale(T.add(hv, T.scale(x, -1.0)), 2.0), agg)
        return T.add(hv, T.scale(grad, -eta))

    return phi, rho, update


class EDHNN:
    """Parameter container and forward pass for all three variants."""

    def __init__(self, config: EdHnnConfig, seed=0):
        self.config = config
        self.dtype = np.dtype(config.dtype)
        rng = make_rng(seed)
        c = config
        s, hd = c.state_dim, c.hidden_dim
        ln = c.layer_norm
        self.mlps: dict[str, MlpParams] = {}
        if c.input_encoder:
            self.mlps["encoder"] = MlpParams.init(c.in_dim, hd, hd, 1, rng, ln, self.dtype)
        phi_in = s + hd if c.variant == "ed_hnn_ii" else s
        if c.phi_layers == 0 and phi_in != hd:
            raise ValidationError("an identity phi needs matching state and hidden widths")
        self.mlps["phi"] = MlpParams.init(phi_in, hd, hd, c.phi_layers, rng, ln, self.dtype)
        rho_in = hd if c.variant == "invariant_baseline" else s + hd
        self.mlps["rho"] = MlpParams.init(rho_in, hd, hd, c.rho_layers, rng, ln, self.dtype) \
            if c.rho_layers else MlpParams()
        if c.update_layers == 0 and s != hd:
            raise ValidationError("an identity node update needs matching state and hidden widths")
        self.mlps["update"] = MlpParams.init(2 * s + hd + 1, hd, s, c.update_layers, rng, ln, self.dtype) \
            if c.update_layers else MlpParams()
        if c.task == "classification":
            self.mlps["classifier"] = MlpParams.init(s, c.cls_hidden, c.out_dim, c.cls_layers, rng, ln, self.dtype)
        self.extra: dict[str, T.Tensor] = {}
        if c.variant == "ed_hnn_ii":
            self.extra["initial_message"] = T.Tensor(np.zeros((1, hd), dtype=self.dtype), requires_grad=True)

    # -- parameters --------------------------------------------------------

    def parameters(self):
        out = []
        for name in sorted(self.mlps):
            out.extend(self.mlps[name].parameters())
        out.extend(self.extra[k] for k in sorted(self.extra))
        return out

    def num_parameters(self) -> int:
        return int(sum(p.data.size for p in self.parameters()))

    def state_dict(self) -> dict:
        out = {}
        for name in sorted(self.mlps):
            m = self.mlps[name]
            for group in ("weights", "biases", "ln_scale", "ln_shift"):
                for i, p in enumerate(getattr(m, group)):
                    out[f"{name}.{group}.{i}"] = p.data
        for k in sorted(self.extra):
            out[k] = self.extra[k].data
        return out

    def load_state_dict(self, arrays: dict):
        current = self.state_dict()
        if set(current) != set(arrays):
            raise ValidationError("checkpoint parameter names do not match the model")
        for name in sorted(self.mlps):
            m = self.mlps[name]
            for group in ("weights", "biases", "ln_scale", "ln_shift"):
                for i, p in enumerate(getattr(m, group)):
                    a = np.asarray(arrays[f"{name}.{group}.{i}"], dtype=self.dtype)
                    if a.shape != p.data.shape:
                        raise ValidationError(f"shape mismatch for {name}.{group}.{i}")
                    p.data = a.copy()
        for k in self.extra:
            self.extra[k].data = np.asarray(arrays[k], dtype=self.dtype).copy()

    def save(self, path):
        save_arrays(self.state_dict(), path, extra={"config": self.config.to_dict()})

    @classmethod
    def load(cls, path) -> "EDHNN":
        arrays, extra = load_arrays(path)
        model = cls(EdHnnConfig.from_dict(extra["config"]))
        model.load_state_dict(arrays)
        return model

    # -- forward -----------------------------------------------------------

    def operators(self, train=False, rng=None):
        """The ``(phi, rho, update)`` callables built from this model's MLPs."""
        c = self.config
        rate = c.dropout if train else 0.0

        def run(name, x):
            m = self.mlps[name]
            return mlp_apply(m, x, train, rate, rng) if m.num_layers else x

        if c.variant == "ed_hnn_ii":
            def phi(prev, hp):
                return run("phi", T.concat([prev, hp], axis=1))
        else:
            def phi(hp):
                return run("phi", hp)

        if c.variant == "invariant_baseline":
            def rho(me):
                return run("rho", me)
        else:
            def rho(hv, me):
                if not self.mlps["rho"].num_layers:
                    return me
                return run("rho", T.concat([hv, me], axis=1))

        def update(hv, agg, x, deg):
            if not self.mlps["update"].num_layers:
                return agg
            return run("update", T.concat([hv, agg, x, deg], axis=1))

        return phi, rho, update

    def encode(self, X, train=False, rng=None):
        c = self.config
        X = T.as_tensor(np.asarray(X, dtype=self.dtype)) if not isinstance(X, T.Tensor) else X
        if train and c.input_dropout > 0:
            X = T.dropout(X, c.input_dropout, rng)
        if c.input_encoder:
            X = mlp_apply(self.mlps["encoder"], X, train, c.dropout, rng)
        return X

    def forward(self, h: Hypergraph, X, train=False, seed=0, operators=None,
                buffers: Optional[MessageBuffers] = None):
        """Node outputs (logits or regression values) as a tensor."""
        c = self.config
        if np.shape(X)[0] != h.num_nodes:
            raise ValidationError(f"X has {np.shape(X)[0]} rows, hypergraph has {h.num_nodes} nodes")
        if np.shape(X)[1] != c.in_dim:
            raise ValidationError(f"X has {np.shape(X)[1]} columns, model expects {c.in_dim}")
        rng = make_rng(seed)
        x0 = self.encode(X, train, rng)
        phi, rho, update = operators if operators is not None else self.operators(train, rng)
        H = propagate(h, x0, x0, phi, rho, update, c.num_layers, c.variant,
                      self.extra.get("initial_message"), buffers)
        if c.task == "classification":
            H = mlp_apply(self.mlps["classifier"], H, train, c.dropout if train else 0.0, rng)
        return T.check_finite(H, "forward pass")

    def predict_array(self, h: Hypergraph, X) -> np.ndarray:
        return self.forward(h, X, train=False).data


def edhnn_forward(config: EdHnnConfig, model: EDHNN, h: Hypergraph, X, train_mode=False, seed=0):
    """Functional entry point; returns ``(outputs, MessageBuffers)``."""
    if model.config is not config and model.config != config:
        raise ValidationError("model was built for a different config")
    buffers = MessageBuffers()
    out = model.forward(h, X, train_mode, seed, buffers=buffers)
    return out.data, buffers
