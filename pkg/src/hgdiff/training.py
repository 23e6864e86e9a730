"""Full-batch training loops for node classification and operator regression."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ValidationError
from .hypergraph import Hypergraph, LabeledHypergraph, disjoint_union
from .model import EDHNN, EdHnnConfig
from .nn.losses import cross_entropy, mean_absolute_error
from .nn.optim import Adam
from .nn.rng import child_seeds, make_rng

METRIC_FIELDS = ("epoch", "train_acc", "val_acc", "test_acc", "loss")


@dataclass
class ClassificationResult:
    history: list
    best_epoch: int
    best_val_acc: float
    test_acc: float
    num_parameters: int
    model: EDHNN = field(repr=False)

    def summary(self) -> dict:
        return {
            "best_epoch": self.best_epoch,
            "best_val_acc": self.best_val_acc,
            "test_acc": self.test_acc,
            "num_parameters": self.num_parameters,
            "epochs": len(self.history),
        }


def _accuracy(pred, labels, mask):
    return float(np.mean(pred[mask] == labels[mask]))


def classification_config(dataset: LabeledHypergraph, **overrides) -> EdHnnConfig:
    """Config sized for ``dataset`` (input width and class count filled in)."""
    base = dict(in_dim=dataset.features.shape[1], out_dim=dataset.num_classes, task="classification")
    base.update(overrides)
    return EdHnnConfig(**base)


def train_node_classification(dataset: LabeledHypergraph, config: EdHnnConfig, epochs: int = 500,
                              seed: int = 0, lr: float = 1e-3, weight_decay: float = 0.0,
                              callback=None) -> ClassificationResult:
    """Train on the train mask with Adam; report test accuracy at the best validation epoch.

    Ties in validation accuracy keep the earliest epoch.
    """
    if not dataset.has_masks:
        raise ValidationError("dataset needs train/val/test masks")
    if dataset.features is None or dataset.labels is None:
        raise ValidationError("dataset needs features and labels")
    for name in ("train_mask", "val_mask", "test_mask"):
        if not getattr(dataset, name).any():
            raise ValidationError(f"{name} is empty")
    if config.task != "classification":
        raise ValidationError("config.task must be classification")
    if epochs < 1:
        raise ValidationError("epochs must be at least 1")
    return _train_classifier(dataset.hypergraph, dataset.features, dataset.labels,
                             (dataset.train_mask, dataset.val_mask, dataset.test_mask),
                             config, epochs, seed, lr, weight_decay, callback)


def _train_classifier(h, features, labels, masks, config, epochs, seed, lr, weight_decay, callback=None):
    init_seed, drop_seed = child_seeds(seed, 2)
    model = EDHNN(config, seed=init_seed)
    opt = Adam(model.parameters(), lr=lr, weight_decay=weight_decay)
    X = np.asarray(features, dtype=model.dtype)
    y = np.asarray(labels, dtype=np.int64)
    tr, va, te = masks
    has_test = te is not None and te.any()
    drop_rng = make_rng(drop_seed)
    history = []
    best = (-1.0, 0, float("nan"))
    best_state = None
    for epoch in range(epochs):
        opt.zero_grad()
        out = model.forward(h, X, train=True, seed=int(drop_rng.integers(2**62)))
        loss = cross_entropy(out, y, tr)
        loss.backward()
        opt.step()
        pred = model.forward(h, X, train=False).data.argmax(axis=1)
        row = {
            "epoch": epoch,
            "train_acc": _accuracy(pred, y, tr),
            "val_acc": _accuracy(pred, y, va),
            "test_acc": _accuracy(pred, y, te) if has_test else float("nan"),
            "loss": float(loss.data),
        }
        history.append(row)
        if row["val_acc"] > best[0]:
            best = (row["val_acc"], epoch, row["test_acc"])
            best_state = {k: v.copy() for k, v in model.state_dict().items()}
        if callback is not None:
            callback(row)
    model.load_state_dict(best_state)
    return ClassificationResult(history, best[1], best[0], best[2], model.num_parameters(), model)


def write_metrics_csv(history, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(METRIC_FIELDS)
        for row in history:
            w.writerow([row["epoch"]] + [repr(float(row[k])) for k in METRIC_FIELDS[1:]])


# -- diffusion-operator regression ---------------------------------------------


@dataclass
class RegressionResult:
    mae: float
    identity_mae: float
    train_index: np.ndarray
    test_index: np.ndarray
    losses: list
    num_parameters: int
    scale: float
    model: EDHNN = field(repr=False)

    def summary(self) -> dict:
        return {
            "mae": self.mae,
            "identity_mae": self.identity_mae,
            "num_parameters": self.num_parameters,
            "num_train_pairs": int(self.train_index.size),
            "num_test_pairs": int(self.test_index.size),
        }


def regression_config(**overrides) -> EdHnnConfig:
    """One-layer, single-channel regression config without dropout or LayerNorm."""
    base = dict(in_dim=1, out_dim=1, num_layers=1, task="regression", input_encoder=False,
                input_dropout=0.0, dropout=0.0, layer_norm=False)
    base.update(overrides)
    return EdHnnConfig(**base)


def split_pairs(n: int, seed: int):
    """80/20 split of pair indices, both parts non-empty."""
    if n < 2:
        raise ValidationError("regression needs at least 2 pairs")
    perm = make_rng(seed).permutation(n)
    n_test = min(max(1, int(round(0.2 * n))), n - 1)
    return np.sort(perm[n_test:]), np.sort(perm[:n_test])


def _union_cache(h):
    cache = {}

    def get(k):
        if k not in cache:
            cache[k] = disjoint_union(h, k)
        return cache[k]

    return get


def fit_operator(inputs, targets, h: Hypergraph, config: EdHnnConfig, epochs: int, seed: int,
                 lr: float = 1e-3, batch_size: int = 16, weight_decay: float = 0.0):
    """Fit ``model(H0) ~ H1`` by MAE; returns ``(model, scale, epoch_losses)``.

    ``inputs``/``targets`` are lists of ``(N, C)`` arrays. Both are divided
    by one scalar (the standard deviation of the inputs) before training.
    """
    init_seed, order_seed = child_seeds(seed, 2)
    model = EDHNN(config, seed=init_seed)
    dtype = model.dtype
    scale = float(np.std(np.concatenate(inputs))) or 1.0
    opt = Adam(model.parameters(), lr=lr, weight_decay=weight_decay)
    order_rng = make_rng(order_seed)
    n = len(inputs)
    bs = max(1, min(batch_size, n))
    union = _union_cache(h)
    losses = []
    for _ in range(epochs):
        perm = order_rng.permutation(n)
        total = 0.0
        for start in range(0, n, bs):
            idx = perm[start:start + bs]
            x0 = (np.concatenate([inputs[i] for i in idx]) / scale).astype(dtype)
            x1 = (np.concatenate([targets[i] for i in idx]) / scale).astype(dtype)
            opt.zero_grad()
            loss = mean_absolute_error(model.forward(union(idx.size), x0), x1)
            loss.backward()
            opt.step()
            total += float(loss.data) * idx.size
        losses.append(total / n)
    return model, scale, losses


def predict_operator(model: EDHNN, h: Hypergraph, inputs, scale: float, batch_size: int = 16):
    """Apply a fitted operator model to each ``(N, C)`` input."""
    union = _union_cache(h)
    out = []
    for start in range(0, len(inputs), batch_size):
        chunk = inputs[start:start + batch_size]
        x0 = (np.concatenate(chunk) / scale).astype(model.dtype)
        pred = model.forward(union(len(chunk)), x0).data * scale
        out.extend(np.split(pred, len(chunk)))
    return out


def train_diffusion_regression(pairs, h: Hypergraph, config: EdHnnConfig, epochs: int = 200,
                               seed: int = 0, lr: float = 1e-3, batch_size: int = 16,
                               weight_decay: float = 0.0) -> RegressionResult:
    """Fit the model to map ``H0`` to ``H1`` on 80% of the pairs; returns held-out MAE.

    Errors are reported in the original units. Each mini-batch is a disjoint
    union of whole pairs.
    """
    if len(pairs) < 2:
        raise ValidationError("regression needs at least 2 pairs")
    if config.task != "regression":
        raise ValidationError("config.task must be regression")
    if config.num_layers != 1:
        raise ValidationError("operator regression uses a one-layer model (num_layers=1)")
    for i, (a, b) in enumerate(pairs):
        if a.shape != (h.num_nodes, config.in_dim) or b.shape != a.shape:
            raise ValidationError(f"pair {i} has shape {a.shape}/{b.shape}, expected ({h.num_nodes}, {config.in_dim})")
    split_seed, fit_seed = child_seeds(seed, 2)
    train_idx, test_idx = split_pairs(len(pairs), split_seed)
    model, scale, losses = fit_operator([pairs[i][0] for i in train_idx], [pairs[i][1] for i in train_idx],
                                        h, config, epochs, fit_seed, lr, batch_size, weight_decay)
    held_in = [pairs[i][0] for i in test_idx]
    held_out = [pairs[i][1] for i in test_idx]
    preds = predict_operator(model, h, held_in, scale, batch_size)
    mae = float(np.mean(np.abs(np.concatenate(preds) - np.concatenate(held_out))))
    identity = float(np.mean(np.abs(np.concatenate(held_in) - np.concatenate(held_out))))
    return RegressionResult(mae, identity, train_idx, test_idx, losses, model.num_parameters(), scale, model)
