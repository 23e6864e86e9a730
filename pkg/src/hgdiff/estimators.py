"""scikit-learn style wrappers around ED-HNN training."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, RegressorMixin
from sklearn.exceptions import NotFittedError
from sklearn.utils.multiclass import unique_labels

from .exceptions import ValidationError
from .model import EdHnnConfig
from .nn.rng import make_rng
from .nn.losses import softmax
from .training import _train_classifier, fit_operator, predict_operator
from .validation import check_features, check_hypergraph


class _EdHnnParams:
    def _config(self, **fixed) -> EdHnnConfig:
        return EdHnnConfig(
            num_layers=self.num_layers,
            hidden_dim=self.hidden_dim,
            phi_layers=self.mlp_layers,
            rho_layers=self.mlp_layers,
            update_layers=self.mlp_layers,
            variant=self.variant,
            dtype="float64",
            **fixed,
        )

    def _check_fitted(self):
        if not hasattr(self, "model_"):
            raise NotFittedError(f"{type(self).__name__} is not fitted yet")

    def _hypergraph(self, hypergraph):
        if hypergraph is None:
            self._check_fitted()
            return self.hypergraph_
        return check_hypergraph(hypergraph)


class EDHNNClassifier(_EdHnnParams, ClassifierMixin, BaseEstimator):
    """Transductive node classifier.

    ``fit(X, y, hypergraph=h)`` takes one feature row per node; nodes with
    ``y == -1`` are unlabelled. A ``validation_fraction`` of the labelled
    nodes is held out for best-epoch selection. ``predict`` returns a label
    for every node.
    """

    def __init__(self, num_layers=2, hidden_dim=64, mlp_layers=2, cls_layers=2, cls_hidden=64,
                 variant="ed_hnn", input_dropout=0.2, dropout=0.3, epochs=200, lr=1e-3,
                 weight_decay=0.0, validation_fraction=0.25, random_state=0):
        self.num_layers = num_layers
        self.hidden_dim = hidden_dim
        self.mlp_layers = mlp_layers
        self.cls_layers = cls_layers
        self.cls_hidden = cls_hidden
        self.variant = variant
        self.input_dropout = input_dropout
        self.dropout = dropout
        self.epochs = epochs
        self.lr = lr
        self.weight_decay = weight_decay
        self.validation_fraction = validation_fraction
        self.random_state = random_state

    def fit(self, X, y, hypergraph=None):
        if hypergraph is None:
            raise ValidationError("fit needs hypergraph=")
        h = check_hypergraph(hypergraph)
        X = check_features(X, h.num_nodes)
        y = np.asarray(y)
        if y.shape != (h.num_nodes,):
            raise ValidationError(f"y must have one entry per node ({h.num_nodes})")
        labelled = y != -1
        if not labelled.any():
            raise ValidationError("y has no labelled nodes")
        self.classes_ = unique_labels(y[labelled])
        codes = np.full(h.num_nodes, 0, dtype=np.int64)
        codes[labelled] = np.searchsorted(self.classes_, y[labelled])
        idx = np.flatnonzero(labelled)
        rng = make_rng(self.random_state)
        n_val = int(round(self.validation_fraction * idx.size))
        if n_val >= idx.size:
            raise ValidationError("validation_fraction leaves no training nodes")
        val_idx = rng.permutation(idx)[:n_val] if n_val else idx
        train = labelled.copy()
        val = np.zeros(h.num_nodes, dtype=bool)
        val[val_idx] = True
        if n_val:
            train[val_idx] = False
        cfg = self._config(in_dim=X.shape[1], out_dim=len(self.classes_), task="classification",
                           cls_layers=self.cls_layers, cls_hidden=self.cls_hidden,
                           input_dropout=self.input_dropout, dropout=self.dropout)
        res = _train_classifier(h, X, codes, (train, val, ~labelled), cfg, self.epochs,
                                self.random_state, self.lr, self.weight_decay)
        self.model_ = res.model
        self.history_ = res.history
        self.best_epoch_ = res.best_epoch
        self.hypergraph_ = h
        self.n_features_in_ = X.shape[1]
        return self

    def predict_proba(self, X, hypergraph=None):
        self._check_fitted()
        h = self._hypergraph(hypergraph)
        X = check_features(X, h.num_nodes)
        return softmax(self.model_.predict_array(h, X))

    def predict(self, X, hypergraph=None):
        self._check_fitted()
        return self.classes_[self.predict_proba(X, hypergraph).argmax(axis=1)]

    def score(self, X, y, hypergraph=None, sample_weight=None):
        y = np.asarray(y)
        pred = self.predict(X, hypergraph)
        keep = y != -1
        w = None if sample_weight is None else np.asarray(sample_weight)[keep]
        return float(np.average(pred[keep] == y[keep], weights=w))


class EDHNNRegressor(_EdHnnParams, RegressorMixin, BaseEstimator):
    """One-layer operator regressor: learns ``H0 -> H1`` on a fixed hypergraph.

    ``X`` and ``y`` have shape ``(n_samples, num_nodes)``: one node signal
    per sample.
    """

    num_layers = 1

    def __init__(self, hidden_dim=64, mlp_layers=2, variant="ed_hnn", epochs=100, lr=1e-3,
                 batch_size=16, weight_decay=0.0, random_state=0):
        self.hidden_dim = hidden_dim
        self.mlp_layers = mlp_layers
        self.variant = variant
        self.epochs = epochs
        self.lr = lr
        self.batch_size = batch_size
        self.weight_decay = weight_decay
        self.random_state = random_state

    def _signals(self, X, h):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != h.num_nodes:
            raise ValidationError(f"expected shape (n_samples, {h.num_nodes}), got {X.shape}")
        if not np.all(np.isfinite(X)):
            raise ValidationError("signals contain NaN or infinite values")
        return [row[:, None] for row in X]

    def fit(self, X, y, hypergraph=None):
        if hypergraph is None:
            raise ValidationError("fit needs hypergraph=")
        h = check_hypergraph(hypergraph)
        inputs, targets = self._signals(X, h), self._signals(y, h)
        if len(inputs) != len(targets):
            raise ValidationError("X and y have different numbers of samples")
        cfg = self._config(in_dim=1, out_dim=1, task="regression", input_encoder=False,
                           input_dropout=0.0, dropout=0.0, layer_norm=False)
        self.model_, self.scale_, self.loss_curve_ = fit_operator(
            inputs, targets, h, cfg, self.epochs, self.random_state, self.lr, self.batch_size,
            self.weight_decay)
        self.hypergraph_ = h
        self.n_features_in_ = h.num_nodes
        return self

    def predict(self, X, hypergraph=None):
        self._check_fitted()
        h = self._hypergraph(hypergraph)
        preds = predict_operator(self.model_, h, self._signals(X, h), self.scale_, self.batch_size)
        return np.stack([p[:, 0] for p in preds])
