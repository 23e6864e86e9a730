import csv
import json

import numpy as np
import pytest

from hgdiff.cli import main


def _write(path, doc):
    path.write_text(json.dumps(doc))
    return str(path)


def _rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


@pytest.fixture(scope="module")
def csbm_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("gen")
    cfg = _write(root / "gen.json", {"kind": "csbm", "seed": 3,
                                      "csbm": {"nodes_per_class": 60, "num_hyperedges": 30, "edge_size": 6},
                                      "features": {"dim": 4, "class_separation": 2.0}})
    assert main(["generate", "--config", cfg, "--out", str(root / "g")]) == 0
    return root / "g"


def test_generate_writes_dataset_and_manifest(csbm_dir):
    manifest = json.loads((csbm_dir / "manifest.json").read_text())
    assert manifest["command"] == "generate"
    assert manifest["outputs"] == ["dataset.json", "summary.json"]
    assert manifest["config"]["csbm"]["alpha"] == 1
    assert json.loads((csbm_dir / "summary.json").read_text()) == {"num_nodes": 120, "num_hyperedges": 30}


def test_generate_is_byte_identical(tmp_path, csbm_dir):
    cfg = _write(tmp_path / "gen.json", {"kind": "csbm", "seed": 3,
                                          "csbm": {"nodes_per_class": 60, "num_hyperedges": 30, "edge_size": 6},
                                          "features": {"dim": 4, "class_separation": 2.0}})
    assert main(["generate", "--config", cfg, "--out", str(tmp_path / "again")]) == 0
    for name in ("dataset.json", "manifest.json", "summary.json"):
        assert (tmp_path / "again" / name).read_bytes() == (csbm_dir / name).read_bytes()


def test_uniform_summary(tmp_path):
    cfg = _write(tmp_path / "u.json", {"kind": "uniform",
                                        "hypergraph": {"num_nodes": 1000, "num_hyperedges": 1000, "edge_size": 20}})
    assert main(["generate", "--config", cfg, "--out", str(tmp_path / "u")]) == 0
    assert json.loads((tmp_path / "u" / "summary.json").read_text())["total_degree"] == 20000


def test_diffuse_single_iteration(tmp_path, csbm_dir):
    cfg = _write(tmp_path / "d.json", {"dataset": str(csbm_dir / "dataset.json"),
                                        "solver": {"eta": 0.001, "max_iters": 1}})
    assert main(["diffuse", "--config", cfg, "--out", str(tmp_path / "d")]) == 0
    rows = _rows(tmp_path / "d" / "trajectory.csv")
    assert [r["iter"] for r in rows] == ["0", "1"]
    assert rows[0]["max_change"] == "nan"


def test_diffuse_objective_decreases_and_modes_agree(tmp_path, csbm_dir):
    finals = {}
    for mode, eta in (("gd", 0.002), ("admm", 0.5)):
        cfg = _write(tmp_path / f"{mode}.json", {"dataset": str(csbm_dir / "dataset.json"), "mode": mode,
                                                  "solver": {"eta": eta, "max_iters": 4000, "stop_tol": 1e-12}})
        assert main(["diffuse", "--config", cfg, "--out", str(tmp_path / mode)]) == 0
        objs = [float(r["objective"]) for r in _rows(tmp_path / mode / "trajectory.csv")]
        if mode == "gd":
            assert all(b <= a + 1e-9 for a, b in zip(objs, objs[1:]))
        finals[mode] = json.loads((tmp_path / mode / "final.json").read_text())["features"]
    assert np.max(np.abs(np.array(finals["gd"]) - np.array(finals["admm"]))) < 1e-4


def test_train_depth_sweep_and_rerun(tmp_path, csbm_dir):
    doc = {"dataset": str(csbm_dir / "dataset.json"), "epochs": 5,
           "model": {"hidden_dim": 8, "cls_hidden": 8}, "depth_sweep": [1, 3]}
    cfg = _write(tmp_path / "t.json", doc)
    for out in ("a", "b"):
        assert main(["train", "--config", cfg, "--out", str(tmp_path / out)]) == 0
    summary = json.loads((tmp_path / "a" / "summary.json").read_text())
    assert summary["parameter_count_constant"] is True
    assert [r["num_layers"] for r in summary["runs"]] == [1, 3]
    for name in ("metrics_L1.csv", "metrics_L3.csv", "checkpoint_L3.json", "summary.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert len(_rows(tmp_path / "a" / "metrics_L1.csv")) == 5


def test_pairs_and_regression(tmp_path):
    gen = _write(tmp_path / "p.json", {"kind": "diffusion_pairs",
                                        "hypergraph": {"num_nodes": 30, "num_hyperedges": 12, "edge_size": 4},
                                        "pairs": {"num_pairs": 10, "potential": {"kind": "tv"}}})
    assert main(["generate", "--config", gen, "--out", str(tmp_path / "p")]) == 0
    assert (tmp_path / "p" / "hypergraph.json").exists()
    reg = _write(tmp_path / "r.json", {"task": "regression", "pairs": "p/pairs.json", "epochs": 2,
                                        "hidden_sweep": [4, 8], "variants": ["ed_hnn", "invariant_baseline"]})
    assert main(["train", "--config", reg, "--out", str(tmp_path / "r")]) == 0
    rows = _rows(tmp_path / "r" / "mae.csv")
    assert [(r["variant"], r["hidden_dim"]) for r in rows] == [
        ("ed_hnn", "4"), ("ed_hnn", "8"), ("invariant_baseline", "4"), ("invariant_baseline", "8")]


@pytest.mark.parametrize("doc, needle", [
    ({"kind": "csbm", "bogus": 1}, "config.bogus"),
    ({"kind": "csbm", "csbm": {"alpha": 9}}, "alpha"),
    ({"kind": "csbm", "csbm": {"edges": 9}}, "config.csbm.edges"),
    ({"kind": "torus"}, "config.kind"),
    ({"kind": "csbm", "seed": -1}, "config.seed"),
])
def test_config_errors_exit_2(tmp_path, capsys, doc, needle):
    cfg = _write(tmp_path / "bad.json", doc)
    assert main(["generate", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert needle in capsys.readouterr().err


def test_missing_and_malformed_config(tmp_path, capsys):
    assert main(["generate", "--config", str(tmp_path / "nope.json")]) == 2
    (tmp_path / "m.json").write_text("{oops")
    assert main(["generate", "--config", str(tmp_path / "m.json")]) == 2
    assert "line 1" in capsys.readouterr().err


def test_train_unknown_model_key(tmp_path, csbm_dir):
    cfg = _write(tmp_path / "t.json", {"dataset": str(csbm_dir / "dataset.json"), "model": {"width": 3}})
    assert main(["train", "--config", cfg, "--out", str(tmp_path / "o")]) == 2


def test_check_passes_and_fault_fails(tmp_path, capsys):
    ok = _write(tmp_path / "ok.json", {"suites": ["worked_example", "potential_gradcheck"]})
    assert main(["check", "--config", ok, "--out", str(tmp_path / "ok")]) == 0
    assert "PASS worked_example:" in capsys.readouterr().out
    bad = _write(tmp_path / "bad.json", {"suites": ["potential_gradcheck"], "fault": "tv_grad_sign"})
    assert main(["check", "--config", bad, "--out", str(tmp_path / "bad")]) == 1
    report = json.loads((tmp_path / "bad" / "report.json").read_text())
    assert report["passed"] is False
    # the fault does not leak into later runs
    assert main(["check", "--config", ok, "--out", str(tmp_path / "ok2")]) == 0
