"""Versioned JSON checkpoints of named parameter arrays."""

import json
from pathlib import Path

import numpy as np

from ..exceptions import DatasetFormatError

FORMAT_VERSION = 1


def save_arrays(arrays: dict, path, extra=None) -> None:
    doc = {
        "format_version": FORMAT_VERSION,
        "arrays": {
            name: {"shape": list(a.shape), "dtype": str(a.dtype), "values": a.ravel().tolist()}
            for name, a in arrays.items()
        },
        "extra": extra or {},
    }
    Path(path).write_text(json.dumps(doc, separators=(",", ":")) + "\n", encoding="utf-8")


def load_arrays(path):
    """Inverse of :func:`save_arrays`; returns ``(arrays, extra)``."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("format_version") != FORMAT_VERSION:
        raise DatasetFormatError(f"unsupported checkpoint version {doc.get('format_version')!r}", "format_version")
    arrays = {}
    for name, spec in doc["arrays"].items():
        a = np.asarray(spec["values"], dtype=spec["dtype"])
        arrays[name] = a.reshape(spec["shape"])
    return arrays, doc.get("extra", {})
