"""JSON dataset files for labelled hypergraphs.

Layout::

    {"num_nodes": int, "hyperedges": [[int, ...], ...],
     "labels": [int, ...] | null, "features": [[float, ...], ...] | null,
     "masks": {"train": [...], "val": [...], "test": [...]} | null,
     "format_version": 1}

Masks are stored as sorted node-index lists. Floats are written with
``repr`` precision so a save/load round trip is exact.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .exceptions import DatasetFormatError, ValidationError
from .hypergraph import LabeledHypergraph, build_hypergraph

FORMAT_VERSION = 1


def dataset_to_dict(d: LabeledHypergraph) -> dict:
    h = d.hypergraph
    masks = None
    if d.has_masks:
        masks = {
            "train": np.flatnonzero(d.train_mask).tolist(),
            "val": np.flatnonzero(d.val_mask).tolist(),
            "test": np.flatnonzero(d.test_mask).tolist(),
        }
    return {
        "num_nodes": h.num_nodes,
        "hyperedges": h.to_lists(),
        "labels": None if d.labels is None else d.labels.tolist(),
        "features": None if d.features is None else d.features.tolist(),
        "masks": masks,
        "format_version": FORMAT_VERSION,
    }


def save_dataset(d: LabeledHypergraph, path) -> None:
    text = json.dumps(dataset_to_dict(d), separators=(",", ":"))
    Path(path).write_text(text + "\n", encoding="utf-8")


def _int_list(value, where, num_nodes=None):
    if not isinstance(value, list):
        raise DatasetFormatError("expected a list of integers", where)
    out = []
    for i, item in enumerate(value):
        if isinstance(item, bool) or not isinstance(item, int):
            raise DatasetFormatError(f"expected an integer, got {item!r}", f"{where}[{i}]")
        if num_nodes is not None and not 0 <= item < num_nodes:
            raise DatasetFormatError(
                f"node index {item} outside [0, {num_nodes})", f"{where}[{i}]"
            )
        out.append(item)
    return out


def dataset_from_dict(doc: dict) -> LabeledHypergraph:
    if not isinstance(doc, dict):
        raise DatasetFormatError("top level must be an object", "$")
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise DatasetFormatError(
            f"unsupported format_version {version!r} (expected {FORMAT_VERSION})",
            "format_version",
        )
    num_nodes = doc.get("num_nodes")
    if isinstance(num_nodes, bool) or not isinstance(num_nodes, int) or num_nodes < 0:
        raise DatasetFormatError("must be a non-negative integer", "num_nodes")
    raw_edges = doc.get("hyperedges")
    if not isinstance(raw_edges, list):
        raise DatasetFormatError("must be a list of lists", "hyperedges")
    edges = []
    for e, members in enumerate(raw_edges):
        where = f"hyperedges[{e}]"
        members = _int_list(members, where, num_nodes)
        if not members:
            raise DatasetFormatError("hyperedge is empty", where)
        edges.append(members)
    h = build_hypergraph(edges, num_nodes)

    labels = doc.get("labels")
    if labels is not None:
        labels = _int_list(labels, "labels")
        if len(labels) != num_nodes:
            raise DatasetFormatError(f"expected {num_nodes} labels, got {len(labels)}", "labels")

    features = doc.get("features")
    if features is not None:
        if not isinstance(features, list) or len(features) != num_nodes:
            raise DatasetFormatError(f"expected {num_nodes} feature rows", "features")
        width = None
        for i, row in enumerate(features):
            where = f"features[{i}]"
            if not isinstance(row, list):
                raise DatasetFormatError("feature row must be a list", where)
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise DatasetFormatError(f"row has {len(row)} entries, expected {width}", where)
            for j, x in enumerate(row):
                if isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x):
                    raise DatasetFormatError(f"non-numeric or non-finite value {x!r}", f"{where}[{j}]")
        features = np.asarray(features, dtype=np.float64).reshape(num_nodes, width or 0)

    masks = doc.get("masks")
    train = val = test = None
    if masks is not None:
        if not isinstance(masks, dict):
            raise DatasetFormatError("must be an object with train/val/test", "masks")
        built = []
        for key in ("train", "val", "test"):
            if key not in masks:
                raise DatasetFormatError("missing mask", f"masks.{key}")
            idx = _int_list(masks[key], f"masks.{key}", num_nodes)
            m = np.zeros(num_nodes, dtype=bool)
            m[idx] = True
            built.append(m)
        train, val, test = built

    try:
        return LabeledHypergraph(h, labels, features, train, val, test)
    except ValidationError as exc:
        raise DatasetFormatError(str(exc), "$") from exc


def load_dataset(path) -> LabeledHypergraph:
    """Read a dataset file; raises :class:`DatasetFormatError` on bad input."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DatasetFormatError(exc.msg, f"line {exc.lineno} column {exc.colno}") from exc
    return dataset_from_dict(doc)
