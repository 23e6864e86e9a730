"""Synthetic hypergraphs, features and diffusion-pair datasets."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np
from sklearn.linear_model import LogisticRegression

from .exceptions import DatasetFormatError, ValidationError
from .hypergraph import Hypergraph, LabeledHypergraph, build_hypergraph
from .nn.rng import make_rng
from .potentials import EdgePotential, NodePotential
from .solvers import DiffusionState, admm_step, gd_step

DEFAULT_ETA = {"gd": {"ce": 0.5, "tv": 0.02, "lec": 0.1}, "admm": 0.5}


@dataclass
class CsbmConfig:
    nodes_per_class: int = 2500
    num_hyperedges: int = 1000
    edge_size: int = 15
    alpha: int = 1
    num_classes: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.num_classes != 2:
            raise ValidationError("only two classes are supported")
        if not 1 <= self.alpha <= self.edge_size / 2:
            raise ValidationError(f"alpha must lie in [1, edge_size/2], got {self.alpha}")
        if self.edge_size > self.nodes_per_class:
            raise ValidationError("edge_size cannot exceed nodes_per_class")
        if self.num_hyperedges < 0:
            raise ValidationError("num_hyperedges must be non-negative")


def gen_csbm(config: CsbmConfig) -> LabeledHypergraph:
    """Two-class hypergraph block model.

    Nodes ``0..n-1`` form class 0 and ``n..2n-1`` class 1. Every hyperedge
    takes ``alpha`` nodes from one class and ``edge_size - alpha`` from the
    other; which class supplies the minority is a fair coin per hyperedge.
    """
    c = config
    rng = make_rng(c.seed)
    n = c.nodes_per_class
    labels = np.repeat(np.arange(2), n)
    edges = []
    for _ in range(c.num_hyperedges):
        minority = int(rng.integers(2))
        a = rng.choice(n, size=c.alpha, replace=False) + minority * n
        b = rng.choice(n, size=c.edge_size - c.alpha, replace=False) + (1 - minority) * n
        edges.append(np.concatenate([a, b]).tolist())
    return LabeledHypergraph(build_hypergraph(edges, 2 * n), labels=labels)


def gen_gaussian_features(labels, dim: int = 100, seed=0, class_separation: float = 1.0) -> np.ndarray:
    """Class mean ``class_separation * mu_c`` (unit ``mu_c``) plus N(0, 1) noise."""
    if dim < 1:
        raise ValidationError("dim must be at least 1")
    labels = np.asarray(labels, dtype=np.int64)
    rng = make_rng(seed)
    k = int(labels.max()) + 1 if labels.size else 0
    mu = rng.standard_normal((k, dim))
    mu /= np.linalg.norm(mu, axis=1, keepdims=True)
    noise = rng.standard_normal((labels.size, dim))
    return class_separation * mu[labels] + noise


def linear_probe_accuracy(features, labels, seed=0, train_fraction=0.5) -> float:
    """Held-out accuracy of a logistic-regression probe on a random split."""
    features = np.asarray(features, dtype=float)
    labels = np.asarray(labels)
    rng = make_rng(seed)
    perm = rng.permutation(labels.size)
    cut = int(round(train_fraction * labels.size))
    tr, te = perm[:cut], perm[cut:]
    clf = LogisticRegression(max_iter=2000)
    clf.fit(features[tr], labels[tr])
    return float(clf.score(features[te], labels[te]))


def gen_uniform_hypergraph(num_nodes: int, num_hyperedges: int, edge_size: int, seed=0) -> Hypergraph:
    if edge_size > num_nodes or edge_size < 1:
        raise ValidationError(f"edge_size must lie in [1, num_nodes], got {edge_size}")
    rng = make_rng(seed)
    edges = [rng.choice(num_nodes, size=edge_size, replace=False).tolist() for _ in range(num_hyperedges)]
    return build_hypergraph(edges, num_nodes)


def split_dataset(d: LabeledHypergraph, fractions=(0.5, 0.25, 0.25), seed=0) -> LabeledHypergraph:
    """Uniform random disjoint train/val/test split by node."""
    fr = np.asarray(fractions, dtype=float)
    if fr.shape != (3,) or (fr < 0).any() or abs(fr.sum() - 1.0) > 1e-9:
        raise ValidationError(f"fractions must be three non-negative numbers summing to 1, got {fractions}")
    n = d.num_nodes
    n_train = int(round(fr[0] * n))
    n_val = int(round(fr[1] * n))
    n_test = n - n_train - n_val
    for name, size in (("train", n_train), ("val", n_val), ("test", n_test)):
        if size <= 0:
            raise ValidationError(f"{name} mask would be empty for fractions {tuple(fractions)}")
    perm = make_rng(seed).permutation(n)
    masks = [np.zeros(n, dtype=bool) for _ in range(3)]
    masks[0][perm[:n_train]] = True
    masks[1][perm[n_train:n_train + n_val]] = True
    masks[2][perm[n_train + n_val:]] = True
    return d.with_masks(*masks)


def make_csbm_dataset(config: CsbmConfig, feature_dim=100, class_separation=1.0,
                      fractions=(0.5, 0.25, 0.25)) -> LabeledHypergraph:
    """CSBM structure, Gaussian features and a random split from one seed."""
    d = gen_csbm(config)
    feats = gen_gaussian_features(d.labels, feature_dim, config.seed + 1, class_separation)
    return split_dataset(d.with_features(feats), fractions, config.seed + 2)


# -- diffusion pairs ------------------------------------------------------------


def _as_potential(spec) -> EdgePotential:
    if isinstance(spec, EdgePotential):
        return spec
    if isinstance(spec, str):
        spec = {"kind": spec}
    spec = dict(spec)
    # the pair experiments use squared TV and LEC with the cardinality weights
    if spec.get("kind") in ("tv", "lec"):
        spec.setdefault("p", 2)
    if spec.get("kind") == "lec":
        spec.setdefault("y", "cardinality")
    return EdgePotential.from_config(spec)


@dataclass
class DiffusionPairConfig:
    num_pairs: int = 1000
    sigma_range: tuple = (1.0, 10.0)
    mode: str = "gd"
    potential: Union[dict, str] = field(default_factory=lambda: {"kind": "ce"})
    eta: Optional[float] = None
    seed: int = 0

    def __post_init__(self):
        if self.num_pairs < 1:
            raise ValidationError("num_pairs must be at least 1")
        if self.mode not in ("gd", "admm"):
            raise ValidationError(f"mode must be gd or admm, got {self.mode!r}")
        lo, hi = self.sigma_range
        if not 0 < lo <= hi:
            raise ValidationError(f"sigma_range must satisfy 0 < low <= high, got {self.sigma_range}")
        self.sigma_range = (float(lo), float(hi))
        if self.eta is not None and not self.eta > 0:
            raise ValidationError(f"eta must be positive, got {self.eta}")

    @property
    def edge_potential(self) -> EdgePotential:
        return _as_potential(self.potential)

    @property
    def resolved_eta(self) -> float:
        if self.eta is not None:
            return float(self.eta)
        if self.mode == "admm":
            return DEFAULT_ETA["admm"]
        return DEFAULT_ETA["gd"].get(self.edge_potential.kind, 0.1)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["sigma_range"] = list(self.sigma_range)
        d["potential"] = self.edge_potential.to_config()
        d["eta"] = self.resolved_eta
        return d


def gen_diffusion_pairs(h: Hypergraph, config: DiffusionPairConfig):
    """``(H0, H1)`` pairs, each ``(N, 1)``, from one diffusion step on ``H0``.

    The node potential is ``(h - x)^2`` with ``x = H0``.
    """
    rng = make_rng(config.seed)
    pot = config.edge_potential
    node = NodePotential("quadratic")
    eta = config.resolved_eta
    lo, hi = config.sigma_range
    pairs = []
    for _ in range(config.num_pairs):
        sigma = rng.uniform(lo, hi)
        H0 = rng.normal(0.0, sigma, size=(h.num_nodes, 1))
        if config.mode == "gd":
            state = DiffusionState(H=H0, X=H0)
            H1 = gd_step(state, h, node, pot, eta).H
        else:
            state = DiffusionState(H=H0, X=H0, Q=H0[h.indices].copy())
            H1 = admm_step(state, h, node, pot, eta).H
        pairs.append((H0, H1))
    return pairs


PAIRS_FORMAT_VERSION = 1


def save_pairs(pairs, path, hypergraph_ref: str, config: dict) -> None:
    doc = {
        "hypergraph_ref": str(hypergraph_ref),
        "pairs": [{"h0": a[:, 0].tolist(), "h1": b[:, 0].tolist()} for a, b in pairs],
        "config": config,
        "format_version": PAIRS_FORMAT_VERSION,
    }
    Path(path).write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")


def load_pairs(path):
    """Returns ``(pairs, hypergraph_ref, config)``; the ref is resolved against the file's folder."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DatasetFormatError(exc.msg, f"line {exc.lineno} column {exc.colno}") from None
    if doc.get("format_version") != PAIRS_FORMAT_VERSION:
        raise DatasetFormatError(f"unsupported version {doc.get('format_version')!r}", "format_version")
    for key in ("hypergraph_ref", "pairs", "config"):
        if key not in doc:
            raise DatasetFormatError("missing key", key)
    pairs = []
    for i, p in enumerate(doc["pairs"]):
        try:
            a = np.asarray(p["h0"], dtype=float)[:, None]
            b = np.asarray(p["h1"], dtype=float)[:, None]
        except (KeyError, TypeError, ValueError):
            raise DatasetFormatError("expected numeric h0 and h1 lists", f"pairs[{i}]") from None
        if a.shape != b.shape:
            raise DatasetFormatError("h0 and h1 lengths differ", f"pairs[{i}]")
        pairs.append((a, b))
    ref = Path(doc["hypergraph_ref"])
    if not ref.is_absolute():
        ref = path.parent / ref
    return pairs, ref, doc["config"]


def pairs_checksum(pairs) -> str:
    sha = hashlib.sha256()
    for a, b in pairs:
        sha.update(np.ascontiguousarray(a, dtype="<f8").tobytes())
        sha.update(np.ascontiguousarray(b, dtype="<f8").tobytes())
    return sha.hexdigest()

