"""Input checks shared by the estimators and solvers."""

import numpy as np
from sklearn.utils.validation import check_array

from .exceptions import ValidationError
from .hypergraph import Hypergraph, LabeledHypergraph, build_hypergraph


def check_hypergraph(h, num_nodes=None) -> Hypergraph:
    """Accept a :class:`Hypergraph`, a labelled dataset or raw edge lists."""
    if isinstance(h, LabeledHypergraph):
        h = h.hypergraph
    elif h is None:
        raise ValidationError("a hypergraph is required")
    elif not isinstance(h, Hypergraph):
        if num_nodes is None:
            raise ValidationError("num_nodes is needed to build a hypergraph from edge lists")
        h = build_hypergraph(h, num_nodes)
    if num_nodes is not None and h.num_nodes != num_nodes:
        raise ValidationError(f"hypergraph has {h.num_nodes} nodes, features have {num_nodes} rows")
    return h


def check_features(X, num_nodes=None, dtype=np.float64) -> np.ndarray:
    """Return ``X`` as a finite 2-D float array (1-D input becomes one column)."""
    X = np.asarray(X, dtype=dtype)
    if X.ndim == 1:
        X = X[:, None]
    X = check_array(X, dtype=dtype, ensure_min_samples=0, ensure_min_features=0, copy=True)
    if num_nodes is not None and X.shape[0] != num_nodes:
        raise ValidationError(f"expected {num_nodes} feature rows, got {X.shape[0]}")
    return X


def check_mask(mask, n, name="mask") -> np.ndarray:
    mask = np.asarray(mask)
    if mask.dtype != bool:
        idx = mask.astype(np.int64)
        mask = np.zeros(n, dtype=bool)
        mask[idx] = True
    if mask.shape != (n,):
        raise ValidationError(f"{name} must have length {n}")
    return mask
