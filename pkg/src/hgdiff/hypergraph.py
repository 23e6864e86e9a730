"""Hypergraph containers, star expansion and homophily measurement."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .exceptions import UndefinedScoreError, ValidationError


def _frozen(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


class Hypergraph:
    """Canonical node/hyperedge incidence structure.

    Hyperedges are stored CSR-style: the members of hyperedge ``e`` are
    ``indices[indptr[e]:indptr[e + 1]]``, strictly increasing. Instances are
    immutable; build them with :func:`build_hypergraph`.
    """

    def __init__(self, num_nodes: int, indptr: np.ndarray, indices: np.ndarray):
        self.num_nodes = int(num_nodes)
        self.indptr = _frozen(np.asarray(indptr, dtype=np.int64))
        self.indices = _frozen(np.asarray(indices, dtype=np.int64))

    @property
    def num_edges(self) -> int:
        return len(self.indptr) - 1

    @cached_property
    def edge_sizes(self) -> np.ndarray:
        return _frozen(np.diff(self.indptr))

    @cached_property
    def node_degrees(self) -> np.ndarray:
        return _frozen(np.bincount(self.indices, minlength=self.num_nodes).astype(np.int64))

    @property
    def hyperedges(self) -> list[np.ndarray]:
        return [self.edge(e) for e in range(self.num_edges)]

    def edge(self, e: int) -> np.ndarray:
        return self.indices[self.indptr[e]:self.indptr[e + 1]]

    def to_lists(self) -> list[list[int]]:
        return [self.edge(e).tolist() for e in range(self.num_edges)]

    @cached_property
    def incidence_matrix(self) -> sp.csr_matrix:
        """N x M binary incidence matrix."""
        data = np.ones(len(self.indices))
        edge_ids = np.repeat(np.arange(self.num_edges), self.edge_sizes)
        return sp.csr_matrix(
            (data, (self.indices, edge_ids)), shape=(self.num_nodes, self.num_edges)
        )

    @cached_property
    def size_buckets(self) -> list[tuple[np.ndarray, np.ndarray]]:
        """Hyperedges grouped by size as ``(edge_ids, members)`` pairs.

        ``members`` has shape ``(len(edge_ids), k)``; buckets are ordered by
        ascending ``k`` and edge ids ascend within a bucket.
        """
        out = []
        sizes = self.edge_sizes
        for k in np.unique(sizes):
            ids = np.flatnonzero(sizes == k)
            starts = self.indptr[ids]
            members = self.indices[starts[:, None] + np.arange(k)[None, :]]
            out.append((_frozen(ids), _frozen(members)))
        return out

    @cached_property
    def expansion(self) -> "BipartiteExpansion":
        """Cached :func:`star_expansion` of this hypergraph."""
        return star_expansion(self)

    def relabel(self, perm: Sequence[int]) -> "Hypergraph":
        """Return the hypergraph with node ``v`` renamed to ``perm[v]``."""
        perm = np.asarray(perm, dtype=np.int64)
        return build_hypergraph([perm[m].tolist() for m in self.hyperedges], self.num_nodes)

    def __eq__(self, other):
        if not isinstance(other, Hypergraph):
            return NotImplemented
        return (
            self.num_nodes == other.num_nodes
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
        )

    def __hash__(self):
        return hash((self.num_nodes, self.indptr.tobytes(), self.indices.tobytes()))

    def __repr__(self):
        return f"Hypergraph(num_nodes={self.num_nodes}, num_edges={self.num_edges})"


def build_hypergraph(edges: Sequence[Sequence[int]], num_nodes: int) -> Hypergraph:
    """Build a canonical hypergraph.

    Member lists are sorted and deduplicated. Duplicate hyperedges across the
    list are kept.

    Raises
    ------
    ValidationError
        If a hyperedge is empty or references a node outside
        ``[0, num_nodes)``.
    """
    num_nodes = int(num_nodes)
    if num_nodes < 0:
        raise ValidationError(f"num_nodes must be non-negative, got {num_nodes}")
    indptr = [0]
    chunks = []
    for e, members in enumerate(edges):
        arr = np.unique(np.asarray(list(members), dtype=np.int64))
        if arr.size == 0:
            raise ValidationError(f"hyperedge {e} is empty")
        if arr[0] < 0 or arr[-1] >= num_nodes:
            bad = arr[(arr < 0) | (arr >= num_nodes)][0]
            raise ValidationError(
                f"hyperedge {e} contains node {bad} outside [0, {num_nodes})"
            )
        chunks.append(arr)
        indptr.append(indptr[-1] + arr.size)
    indices = np.concatenate(chunks) if chunks else np.zeros(0, dtype=np.int64)
    return Hypergraph(num_nodes, np.asarray(indptr), indices)


@dataclass(frozen=True, eq=False)
class BipartiteExpansion:
    """Star expansion: one pair per (node, hyperedge) incidence.

    Pairs are ordered hyperedge-major, members ascending within a hyperedge.
    ``edge_indptr`` slices pairs by hyperedge; ``node_order`` lists pair ids
    grouped by node (stable, so incidence order is preserved) and
    ``node_indptr`` slices it.
    """

    num_nodes: int
    num_edges: int
    pair_nodes: np.ndarray
    pair_edges: np.ndarray
    edge_indptr: np.ndarray
    node_indptr: np.ndarray
    node_order: np.ndarray
    _mats: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def num_pairs(self) -> int:
        return len(self.pair_nodes)

    @property
    def pairs(self) -> list[tuple[int, int]]:
        return list(zip(self.pair_nodes.tolist(), self.pair_edges.tolist()))

    def node_incidences(self, v: int) -> np.ndarray:
        """Hyperedge ids incident to node ``v``, in ascending order."""
        ids = self.node_order[self.node_indptr[v]:self.node_indptr[v + 1]]
        return self.pair_edges[ids]

    def edge_members(self, e: int) -> np.ndarray:
        return self.pair_nodes[self.edge_indptr[e]:self.edge_indptr[e + 1]]

    @property
    def edge_sum_matrix(self) -> sp.csr_matrix:
        """M x P matrix summing pair rows into their hyperedge."""
        if "edge" not in self._mats:
            self._mats["edge"] = sp.csr_matrix(
                (np.ones(self.num_pairs), (self.pair_edges, np.arange(self.num_pairs))),
                shape=(self.num_edges, self.num_pairs),
            )
        return self._mats["edge"]

    @property
    def node_sum_matrix(self) -> sp.csr_matrix:
        """N x P matrix summing pair rows into their node."""
        if "node" not in self._mats:
            self._mats["node"] = sp.csr_matrix(
                (np.ones(self.num_pairs), (self.pair_nodes, np.arange(self.num_pairs))),
                shape=(self.num_nodes, self.num_pairs),
            )
        return self._mats["node"]

    def to_hypergraph(self) -> Hypergraph:
        lists = [self.edge_members(e).tolist() for e in range(self.num_edges)]
        return build_hypergraph(lists, self.num_nodes)


def star_expansion(h: Hypergraph) -> BipartiteExpansion:
    pair_nodes = h.indices.copy()
    pair_edges = np.repeat(np.arange(h.num_edges, dtype=np.int64), h.edge_sizes)
    node_order = np.argsort(pair_nodes, kind="stable")
    node_indptr = np.concatenate([[0], np.cumsum(h.node_degrees)])
    return BipartiteExpansion(
        num_nodes=h.num_nodes,
        num_edges=h.num_edges,
        pair_nodes=_frozen(pair_nodes),
        pair_edges=_frozen(pair_edges),
        edge_indptr=_frozen(h.indptr.copy()),
        node_indptr=_frozen(node_indptr.astype(np.int64)),
        node_order=_frozen(node_order.astype(np.int64)),
    )


@dataclass(frozen=True, eq=False)
class LabeledHypergraph:
    """A hypergraph with optional labels, node features and split masks."""

    hypergraph: Hypergraph
    labels: Optional[np.ndarray] = None
    features: Optional[np.ndarray] = None
    train_mask: Optional[np.ndarray] = None
    val_mask: Optional[np.ndarray] = None
    test_mask: Optional[np.ndarray] = None

    def __post_init__(self):
        n = self.hypergraph.num_nodes
        if self.labels is not None:
            labels = np.asarray(self.labels, dtype=np.int64)
            if labels.shape != (n,):
                raise ValidationError(f"labels must have length {n}, got shape {labels.shape}")
            if labels.size and labels.min() < 0:
                raise ValidationError("labels must be non-negative class indices")
            object.__setattr__(self, "labels", _frozen(labels))
        if self.features is not None:
            feats = np.asarray(self.features, dtype=np.float64)
            if feats.ndim != 2 or feats.shape[0] != n:
                raise ValidationError(f"features must be a {n} x F matrix, got shape {feats.shape}")
            object.__setattr__(self, "features", _frozen(feats))
        masks = [self.train_mask, self.val_mask, self.test_mask]
        if any(m is not None for m in masks):
            if any(m is None for m in masks):
                raise ValidationError("train/val/test masks must be given together")
            masks = [np.asarray(m, dtype=bool) for m in masks]
            for m in masks:
                if m.shape != (n,):
                    raise ValidationError(f"masks must have length {n}")
            if (masks[0] & masks[1]).any() or (masks[0] & masks[2]).any() or (masks[1] & masks[2]).any():
                raise ValidationError("train/val/test masks must be pairwise disjoint")
            for name, m in zip(("train_mask", "val_mask", "test_mask"), masks):
                object.__setattr__(self, name, _frozen(m))

    @property
    def num_nodes(self) -> int:
        return self.hypergraph.num_nodes

    @property
    def has_masks(self) -> bool:
        return self.train_mask is not None

    @property
    def num_classes(self) -> int:
        return int(self.labels.max()) + 1 if self.labels is not None and self.labels.size else 0

    def with_masks(self, train, val, test) -> "LabeledHypergraph":
        return LabeledHypergraph(self.hypergraph, self.labels, self.features, train, val, test)

    def with_features(self, features) -> "LabeledHypergraph":
        return LabeledHypergraph(
            self.hypergraph, self.labels, features, self.train_mask, self.val_mask, self.test_mask
        )

    def equals(self, other: "LabeledHypergraph") -> bool:
        def same(a, b):
            if a is None or b is None:
                return a is None and b is None
            return a.shape == b.shape and np.array_equal(a, b)

        return (
            self.hypergraph == other.hypergraph
            and same(self.labels, other.labels)
            and same(self.features, other.features)
            and same(self.train_mask, other.train_mask)
            and same(self.val_mask, other.val_mask)
            and same(self.test_mask, other.test_mask)
        )


def clique_adjacency(h: Hypergraph) -> sp.csr_matrix:
    """Binary clique-expansion adjacency without self loops."""
    b = h.incidence_matrix
    a = (b @ b.T).tocsr()
    a.setdiag(0)
    a.eliminate_zeros()
    a.data[:] = 1.0
    return a


def ce_homophily(h: Hypergraph, labels) -> float:
    """Node-averaged label agreement on the clique expansion.

    Each node with at least one neighbour scores the fraction of its distinct
    neighbours that share its label; isolated nodes are skipped.
    """
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape != (h.num_nodes,):
        raise ValidationError(f"labels must have length {h.num_nodes}")
    a = clique_adjacency(h)
    deg = np.asarray(a.sum(axis=1)).ravel()
    has = deg > 0
    if not has.any():
        raise UndefinedScoreError("no node has a clique-expansion neighbour")
    classes = np.unique(labels, return_inverse=True)[1]
    onehot = sp.csr_matrix(
        (np.ones(h.num_nodes), (np.arange(h.num_nodes), classes)),
        shape=(h.num_nodes, classes.max() + 1),
    )
    counts = (a @ onehot).toarray()
    same = counts[np.arange(h.num_nodes), classes]
    return float(np.mean(same[has] / deg[has]))


def disjoint_union(h: Hypergraph, copies: int) -> Hypergraph:
    """``copies`` side-by-side copies of ``h``; copy ``c`` owns nodes ``c*N .. (c+1)*N - 1``."""
    if copies < 1:
        raise ValidationError("copies must be at least 1")
    n, p = h.num_nodes, len(h.indices)
    offsets = np.repeat(np.arange(copies, dtype=np.int64) * n, p)
    indices = np.tile(h.indices, copies) + offsets
    indptr = np.concatenate(
        [[0], (np.arange(copies, dtype=np.int64)[:, None] * p + h.indptr[None, 1:]).ravel()]
    )
    return Hypergraph(n * copies, indptr, indices)
