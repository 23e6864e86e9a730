"""Gradient-descent and ADMM hypergraph diffusion."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .exceptions import NumericError, ValidationError
from .hypergraph import Hypergraph
from .potentials import EdgePotential, NodePotential, objective_value
from .validation import check_features, check_hypergraph

MODES = ("gd", "admm", "admm_simplified")


@dataclass(frozen=True)
class DiffusionState:
    """Iterate of a diffusion solver.

    ``Q`` stacks the per-hyperedge auxiliary blocks in star-expansion pair
    order (hyperedge-major), so ``Q_e = Q[indptr[e]:indptr[e+1]]``.
    """

    H: np.ndarray
    X: np.ndarray
    Q: Optional[np.ndarray] = None
    t: int = 0

    @classmethod
    def initial(cls, h: Hypergraph, X, with_q=True) -> "DiffusionState":
        X = check_features(X, h.num_nodes)
        H = X.copy()
        return cls(H=H, X=X, Q=H[h.indices].copy() if with_q else None, t=0)

    def edge_block(self, h: Hypergraph, e: int) -> np.ndarray:
        return self.Q[h.indptr[e]:h.indptr[e + 1]]


@dataclass(frozen=True)
class SolverConfig:
    eta: float = 0.1
    max_iters: int = 1000
    stop_tol: float = 1e-8
    record_trajectory: bool = False

    def __post_init__(self):
        if not self.eta > 0:
            raise ValidationError(f"eta must be positive, got {self.eta}")
        if int(self.max_iters) < 1:
            raise ValidationError(f"max_iters must be at least 1, got {self.max_iters}")


def _pair_positions(h, ids, k):
    return h.indptr[ids][:, None] + np.arange(k)[None, :]


def edge_operator_pairs(h: Hypergraph, H_pairs: np.ndarray, potential: EdgePotential, op: str, eta=None):
    """Apply ``grad``/``prox`` of ``potential`` to every hyperedge block.

    ``H_pairs`` holds member features in pair order, shape ``(P, F)``; the
    result has the same layout.
    """
    out = np.empty_like(H_pairs)
    deg = h.node_degrees.astype(float)
    for ids, members in h.size_buckets:
        k = members.shape[1]
        pos = _pair_positions(h, ids, k)
        block = np.moveaxis(H_pairs[pos], 2, 1)  # (n_b, F, k)
        d = np.broadcast_to(deg[members][:, None, :], block.shape) if potential.needs_degrees else None
        res = potential.grad(block, d) if op == "grad" else potential.prox(block, eta, d)
        out[pos] = np.moveaxis(res, 1, 2)
    return out


def _node_sum(h: Hypergraph, pairs: np.ndarray) -> np.ndarray:
    # CSR row order is pair order, so each node accumulates in incidence order
    return np.asarray(h.expansion.node_sum_matrix @ pairs)


def _check_finite(H, where):
    bad = ~np.isfinite(H)
    if bad.any():
        node = int(np.argwhere(bad)[0][0])
        raise NumericError(f"{where} produced a non-finite value at node {node}")


def gd_step(state: DiffusionState, h: Hypergraph, node_potential: NodePotential,
            edge_potential: EdgePotential, eta: float) -> DiffusionState:
    H = state.H
    edge_grad = edge_operator_pairs(h, H[h.indices], edge_potential, "grad")
    total = node_potential.grad(H, state.X) + _node_sum(h, edge_grad)
    H_new = H - eta * total
    _check_finite(H_new, "gradient step")
    return replace(state, H=H_new, t=state.t + 1)


def admm_step(state: DiffusionState, h: Hypergraph, node_potential: NodePotential,
              edge_potential: EdgePotential, eta: float, simplified: bool = False) -> DiffusionState:
    """One ADMM sweep: hyperedge proxes, then node proxes of averaged messages.

    With ``simplified`` the auxiliary blocks are pinned to ``Q_e = H_e`` so the
    hyperedge update reduces to ``prox(H_e)``. Isolated nodes average over an
    empty set; they use their own value with a unit degree, which makes them
    take proximal-point steps on ``f`` alone.
    """
    H_pairs = state.H[h.indices]
    Q = H_pairs if simplified or state.Q is None else state.Q
    Q_new = edge_operator_pairs(h, 2.0 * H_pairs - Q, edge_potential, "prox", eta) - H_pairs + Q
    deg = h.node_degrees.astype(float)[:, None]
    summed = _node_sum(h, Q_new)
    isolated = deg[:, 0] == 0
    avg = np.where(isolated[:, None], state.H, summed / np.where(deg > 0, deg, 1.0))
    scale = eta / np.where(deg > 0, deg, 1.0)
    H_new = node_potential.prox(avg, state.X, scale)
    _check_finite(H_new, "ADMM step")
    return replace(state, H=H_new, Q=Q_new, t=state.t + 1)


@dataclass
class DiffusionResult:
    state: DiffusionState
    objectives: list = field(default_factory=list)
    max_changes: list = field(default_factory=list)
    iterates: Optional[list] = None

    def trace_rows(self):
        return [
            (i, self.objectives[i], self.max_changes[i]) for i in range(len(self.objectives))
        ]


def run_diffusion(h: Hypergraph, X, node_potential: NodePotential, edge_potential: EdgePotential,
                  config: SolverConfig = SolverConfig(), mode: str = "gd",
                  initial: Optional[DiffusionState] = None) -> DiffusionResult:
    """Iterate ``gd_step``/``admm_step`` until ``max_iters`` or a small change.

    Row 0 of the trace is the initial state (``max_change`` is NaN there).
    """
    if mode not in MODES:
        raise ValidationError(f"mode must be one of {MODES}, got {mode!r}")
    state = initial if initial is not None else DiffusionState.initial(h, X, with_q=mode == "admm")

    def obj(s):
        return objective_value(h, s.H, s.X, node_potential, edge_potential)

    result = DiffusionResult(state, [obj(state)], [math.nan],
                             [state.H.copy()] if config.record_trajectory else None)
    for _ in range(int(config.max_iters)):
        if mode == "gd":
            new = gd_step(state, h, node_potential, edge_potential, config.eta)
        else:
            new = admm_step(state, h, node_potential, edge_potential, config.eta,
                            simplified=mode == "admm_simplified")
        change = float(np.max(np.abs(new.H - state.H))) if state.H.size else 0.0
        state = new
        result.objectives.append(obj(state))
        result.max_changes.append(change)
        if result.iterates is not None:
            result.iterates.append(state.H.copy())
        if change < config.stop_tol:
            break
    result.state = state
    return result


def _fmt(x):
    return repr(float(x))


def write_trajectory_csv(result: DiffusionResult, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iter", "objective", "max_change"])
        for i, o, c in result.trace_rows():
            w.writerow([i, _fmt(o), _fmt(c)])


class HypergraphDiffusion(TransformerMixin, BaseEstimator):
    """Hypergraph diffusion as a transformer.

    ``fit(X, hypergraph=h)`` runs the solver from ``H = X`` and stores the
    result in ``embedding_`` along with ``objective_trace_``;
    ``transform(X, hypergraph=h)`` reruns the solver on new attributes.

    Parameters
    ----------
    edge_potential : dict or EdgePotential
        E.g. ``{"kind": "tv", "p": 2}``.
    node_potential : {"quadratic", "linear"}
    mode : {"gd", "admm", "admm_simplified"}
    """

    def __init__(self, edge_potential=None, node_potential="quadratic", mode="gd", eta=0.1,
                 max_iters=1000, stop_tol=1e-8):
        self.edge_potential = edge_potential
        self.node_potential = node_potential
        self.mode = mode
        self.eta = eta
        self.max_iters = max_iters
        self.stop_tol = stop_tol

    def _potentials(self):
        ep = self.edge_potential
        if ep is None:
            ep = EdgePotential("ce")
        elif isinstance(ep, dict):
            ep = EdgePotential.from_config(ep)
        np_ = self.node_potential
        if not isinstance(np_, NodePotential):
            np_ = NodePotential.from_config(np_)
        return np_, ep

    def _solve(self, X, hypergraph):
        h = check_hypergraph(hypergraph)
        node_pot, edge_pot = self._potentials()
        cfg = SolverConfig(eta=self.eta, max_iters=self.max_iters, stop_tol=self.stop_tol)
        return run_diffusion(h, X, node_pot, edge_pot, cfg, self.mode)

    def fit(self, X, y=None, hypergraph=None):
        res = self._solve(X, hypergraph)
        self.embedding_ = res.state.H
        self.objective_trace_ = np.asarray(res.objectives)
        self.n_iter_ = res.state.t
        self.n_features_in_ = res.state.H.shape[1]
        return self

    def transform(self, X, hypergraph=None):
        if not hasattr(self, "embedding_"):
            from sklearn.exceptions import NotFittedError

            raise NotFittedError("HypergraphDiffusion is not fitted yet")
        return self._solve(X, hypergraph).state.H

    def fit_transform(self, X, y=None, hypergraph=None):
        return self.fit(X, y, hypergraph=hypergraph).embedding_
