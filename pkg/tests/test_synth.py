import numpy as np
import pytest

from hgdiff import ce_homophily
from hgdiff.exceptions import DatasetFormatError, ValidationError
from hgdiff.synth import (
    CsbmConfig,
    DiffusionPairConfig,
    gen_csbm,
    gen_diffusion_pairs,
    gen_gaussian_features,
    gen_uniform_hypergraph,
    linear_probe_accuracy,
    load_pairs,
    make_csbm_dataset,
    pairs_checksum,
    save_pairs,
    split_dataset,
)


@pytest.mark.parametrize("alpha", [1, 3, 7])
def test_csbm_edge_composition(alpha):
    d = gen_csbm(CsbmConfig(nodes_per_class=100, num_hyperedges=200, alpha=alpha, seed=alpha))
    assert d.num_nodes == 200
    for e in d.hypergraph.hyperedges:
        counts = np.bincount(d.labels[e], minlength=2)
        assert sorted(counts.tolist()) == sorted([alpha, 15 - alpha])


def test_csbm_minority_side_varies():
    d = gen_csbm(CsbmConfig(nodes_per_class=100, num_hyperedges=200, alpha=2))
    minority_is_zero = [np.sum(d.labels[e] == 0) == 2 for e in d.hypergraph.hyperedges]
    assert 0 < np.mean(minority_is_zero) < 1


def test_csbm_homophily_falls_with_alpha():
    hs = [ce_homophily(gen_csbm(CsbmConfig(nodes_per_class=300, num_hyperedges=120, alpha=a)).hypergraph,
                       np.repeat([0, 1], 300)) for a in (1, 3, 6)]
    assert hs[0] > hs[1] > hs[2]


def test_csbm_is_deterministic():
    cfg = CsbmConfig(nodes_per_class=50, num_hyperedges=30, seed=9)
    assert gen_csbm(cfg).equals(gen_csbm(cfg))
    other = gen_csbm(CsbmConfig(nodes_per_class=50, num_hyperedges=30, seed=10))
    assert not gen_csbm(cfg).equals(other)


def test_csbm_config_checks():
    with pytest.raises(ValidationError, match="alpha"):
        CsbmConfig(alpha=8)
    with pytest.raises(ValidationError):
        CsbmConfig(num_classes=3)


def test_uniform_hypergraph_degree_total():
    h = gen_uniform_hypergraph(1000, 1000, 20, seed=0)
    assert h.num_edges == 1000
    assert int(h.node_degrees.sum()) == 20000
    assert all(len(set(e.tolist())) == 20 for e in h.hyperedges)


def test_feature_separation_controls_probe_accuracy():
    labels = np.repeat([0, 1], 200)
    weak = linear_probe_accuracy(gen_gaussian_features(labels, 20, 0, 0.0), labels)
    strong = linear_probe_accuracy(gen_gaussian_features(labels, 20, 0, 8.0), labels)
    assert weak < 0.65
    assert strong > 0.95


def test_split_sizes_and_disjointness():
    d = split_dataset(gen_csbm(CsbmConfig(nodes_per_class=50, num_hyperedges=10)), seed=1)
    sizes = [int(m.sum()) for m in (d.train_mask, d.val_mask, d.test_mask)]
    assert sizes == [50, 25, 25]
    assert not np.any(d.train_mask & d.val_mask) and not np.any(d.val_mask & d.test_mask)


@pytest.mark.parametrize("fractions", [(0.5, 0.5), (0.6, 0.3, 0.3), (1.0, 0.0, 0.0), (-0.1, 0.6, 0.5)])
def test_bad_fractions(fractions):
    d = gen_csbm(CsbmConfig(nodes_per_class=50, num_hyperedges=10))
    with pytest.raises(ValidationError):
        split_dataset(d, fractions)


def test_dataset_bundle():
    d = make_csbm_dataset(CsbmConfig(nodes_per_class=40, num_hyperedges=20, seed=3), feature_dim=5)
    assert d.features.shape == (80, 5)
    assert d.has_masks


def _ce_step_by_loops(h, H0, eta):
    grad = np.zeros_like(H0)
    for e in h.hyperedges:
        k, s = len(e), H0[e].sum(axis=0)
        for v in e:
            grad[v] += 4.0 * (k * H0[v] - s)
    return H0 - eta * grad


def test_gd_pairs_match_hand_computed_step():
    h = gen_uniform_hypergraph(30, 12, 4, seed=2)
    pairs = gen_diffusion_pairs(h, DiffusionPairConfig(num_pairs=5, eta=0.05, seed=4))
    for H0, H1 in pairs:
        assert H0.shape == (30, 1)
        assert np.max(np.abs(H1 - _ce_step_by_loops(h, H0, 0.05))) < 1e-12


def test_zero_lec_weights_leave_signal_unchanged():
    h = gen_uniform_hypergraph(20, 8, 5, seed=1)
    cfg = DiffusionPairConfig(num_pairs=3, potential={"kind": "lec", "p": 2, "y": [0.0] * 5}, seed=0)
    for H0, H1 in gen_diffusion_pairs(h, cfg):
        assert np.array_equal(H0, H1)


def test_sigma_range_sets_the_scale():
    h = gen_uniform_hypergraph(400, 10, 5, seed=1)
    low = gen_diffusion_pairs(h, DiffusionPairConfig(num_pairs=3, sigma_range=(1, 1)))
    high = gen_diffusion_pairs(h, DiffusionPairConfig(num_pairs=3, sigma_range=(10, 10)))
    assert 0.85 < np.std(low[0][0]) < 1.15
    assert 8.5 < np.std(high[0][0]) < 11.5


def test_admm_pairs_and_defaults():
    h = gen_uniform_hypergraph(15, 6, 3, seed=0)
    cfg = DiffusionPairConfig(num_pairs=2, mode="admm", potential="tv")
    assert cfg.resolved_eta == 0.5
    assert cfg.edge_potential.p == 2.0
    pairs = gen_diffusion_pairs(h, cfg)
    assert not np.allclose(pairs[0][0], pairs[0][1])
    assert DiffusionPairConfig(potential="lec").edge_potential.y == "cardinality"


def test_pair_config_checks():
    for kw in ({"num_pairs": 0}, {"mode": "sgd"}, {"sigma_range": (3, 1)}, {"eta": -1}):
        with pytest.raises(ValidationError):
            DiffusionPairConfig(**kw)


def test_pairs_round_trip(tmp_path):
    h = gen_uniform_hypergraph(10, 4, 3, seed=0)
    cfg = DiffusionPairConfig(num_pairs=4, seed=5)
    pairs = gen_diffusion_pairs(h, cfg)
    save_pairs(pairs, tmp_path / "p.json", "hg.json", cfg.to_dict())
    back, ref, doc = load_pairs(tmp_path / "p.json")
    assert ref == tmp_path / "hg.json"
    assert doc == cfg.to_dict()
    assert pairs_checksum(back) == pairs_checksum(pairs)
    assert pairs_checksum(gen_diffusion_pairs(h, cfg)) == pairs_checksum(pairs)


def test_pairs_file_errors(tmp_path):
    p = tmp_path / "p.json"
    p.write_text('{"format_version": 1, "hypergraph_ref": "x", "config": {}, "pairs": [{"h0": [1], "h1": [1, 2]}]}')
    with pytest.raises(DatasetFormatError, match=r"pairs\[0\]"):
        load_pairs(p)
    p.write_text('{"format_version": 2}')
    with pytest.raises(DatasetFormatError, match="format_version"):
        load_pairs(p)
