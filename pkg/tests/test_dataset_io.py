import json

import numpy as np
import pytest

from hgdiff import LabeledHypergraph, build_hypergraph, load_dataset, save_dataset
from hgdiff.dataset_io import dataset_from_dict, dataset_to_dict
from hgdiff.exceptions import DatasetFormatError


def _dataset():
    h = build_hypergraph([[0, 1, 2], [2, 3]], 4)
    feats = np.array([[0.1, 1 / 3], [2.5, -1e-300], [np.pi, 0.0], [1e10, -7.25]])
    return LabeledHypergraph(h, [0, 1, 1, 0], feats, [True, True, False, False],
                             [False, False, True, False], [False, False, False, True])


def test_round_trip_is_exact(tmp_path):
    d = _dataset()
    save_dataset(d, tmp_path / "d.json")
    back = load_dataset(tmp_path / "d.json")
    assert back.equals(d)
    assert back.features.tobytes() == d.features.tobytes()


def test_structure_only_round_trip(tmp_path):
    d = LabeledHypergraph(build_hypergraph([[0, 1]], 3))
    save_dataset(d, tmp_path / "d.json")
    back = load_dataset(tmp_path / "d.json")
    assert back.equals(d) and back.labels is None and not back.has_masks


@pytest.mark.parametrize("mutate, location", [
    (lambda d: d.update(format_version=2), "format_version"),
    (lambda d: d["hyperedges"][1].__setitem__(1, 9), "hyperedges[1][1]"),
    (lambda d: d["hyperedges"].__setitem__(0, []), "hyperedges[0]"),
    (lambda d: d["hyperedges"][0].__setitem__(0, "a"), "hyperedges[0][0]"),
    (lambda d: d["features"][2].__setitem__(1, "x"), "features[2][1]"),
    (lambda d: d["features"][1].pop(), "features[1]"),
    (lambda d: d["labels"].pop(), "labels"),
    (lambda d: d["masks"].pop("val"), "masks.val"),
    (lambda d: d.update(num_nodes=-1), "num_nodes"),
])
def test_errors_name_the_location(mutate, location):
    doc = json.loads(json.dumps(dataset_to_dict(_dataset())))
    mutate(doc)
    with pytest.raises(DatasetFormatError) as err:
        dataset_from_dict(doc)
    assert err.value.location == location


def test_overlapping_masks_rejected():
    doc = dataset_to_dict(_dataset())
    doc["masks"]["val"] = [0]
    with pytest.raises(DatasetFormatError, match="disjoint"):
        dataset_from_dict(doc)


def test_malformed_json_reports_position(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"num_nodes": 2,\n "hyperedges": [[0, 1]')
    with pytest.raises(DatasetFormatError, match="line 2"):
        load_dataset(p)
