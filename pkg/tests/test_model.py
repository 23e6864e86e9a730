import numpy as np
import pytest

from hgdiff import EDHNN, EdHnnConfig, EdgePotential, NodePotential, build_hypergraph
from hgdiff.exceptions import ValidationError
from hgdiff.model import MessageBuffers, analytic_ce_operators, edhnn_forward, propagate
from hgdiff.nn import tensor as T
from hgdiff.solvers import DiffusionState, gd_step
from hgdiff.synth import gen_uniform_hypergraph

VARIANTS = ["ed_hnn", "ed_hnn_ii", "invariant_baseline"]


def _cfg(variant="ed_hnn", **kw):
    base = dict(in_dim=3, out_dim=2, hidden_dim=8, cls_hidden=8, variant=variant)
    base.update(kw)
    return EdHnnConfig(**base)


@pytest.fixture
def graph():
    return gen_uniform_hypergraph(12, 7, 4, seed=5)


def test_analytic_operators_reproduce_a_gradient_step(graph, rng):
    H0 = rng.normal(size=(12, 1))
    X = rng.normal(size=(12, 1))
    phi, rho, update = analytic_ce_operators(0.05)
    got = propagate(graph, H0, X, phi, rho, update, 1).data
    want = gd_step(DiffusionState(H=H0, X=X), graph, NodePotential("quadratic"), EdgePotential("ce"), 0.05).H
    assert np.allclose(got, want, atol=1e-12)


def test_analytic_operators_two_node_example():
    h = build_hypergraph([[0, 1]], 2)
    phi, rho, update = analytic_ce_operators(0.1)
    out = propagate(h, np.array([[1.0], [0.0]]), np.zeros((2, 1)), phi, rho, update, 1)
    assert np.allclose(out.data.ravel(), [0.4, 0.4])


def test_second_variant_reduces_when_phi_ignores_message(graph, rng):
    model = EDHNN(_cfg(), seed=1)
    phi, rho, update = model.operators()
    X = rng.normal(size=(12, 8))
    a = propagate(graph, X, X, phi, rho, update, 3).data
    b = propagate(graph, X, X, lambda prev, hp: phi(hp), rho, update, 3, "ed_hnn_ii",
                  initial_message=T.Tensor(np.zeros((1, 8)))).data
    assert np.array_equal(a, b)


@pytest.mark.parametrize("variant", VARIANTS)
def test_parameter_count_does_not_grow_with_depth(variant):
    counts = {EDHNN(_cfg(variant, num_layers=L)).num_parameters() for L in (1, 2, 8)}
    assert len(counts) == 1


def test_baseline_rho_is_narrower():
    full = EDHNN(_cfg()).num_parameters()
    base = EDHNN(_cfg("invariant_baseline")).num_parameters()
    # rho drops the node-state half of its input
    assert full - base == 8 * 8


@pytest.mark.parametrize("variant", VARIANTS)
def test_node_and_edge_relabelling_permutes_outputs(graph, rng, variant):
    model = EDHNN(_cfg(variant), seed=2)
    X = rng.normal(size=(12, 3))
    out = model.predict_array(graph, X)
    perm = rng.permutation(12)
    inv = np.argsort(perm)
    edges = [inv[e].tolist() for e in graph.to_lists()]
    edges = [edges[i] for i in rng.permutation(len(edges))]
    g2 = build_hypergraph(edges, 12)
    out2 = model.predict_array(g2, X[perm])
    assert np.allclose(out2, out[perm], atol=1e-10)


@pytest.mark.parametrize("variant", VARIANTS)
def test_twins_get_identical_outputs(variant):
    # nodes 0 and 1 share features and memberships
    h = build_hypergraph([[0, 1, 2], [0, 1, 3], [2, 3, 4]], 5)
    X = np.random.default_rng(0).normal(size=(5, 3))
    X[1] = X[0]
    out = EDHNN(_cfg(variant), seed=3).predict_array(h, X)
    assert np.allclose(out[0], out[1], atol=1e-12)


def test_equivariant_messages_depend_on_receiver(graph, rng):
    X = rng.normal(size=(12, 3))
    full = edhnn_forward(_cfg(), EDHNN(_cfg()), graph, X)[1]
    cfg_b = _cfg("invariant_baseline")
    base = edhnn_forward(cfg_b, EDHNN(cfg_b), graph, X)[1]
    assert full.edge_to_node.shape[0] == graph.expansion.num_pairs
    assert base.edge_to_node.shape[0] == graph.num_edges
    # within one hyperedge the equivariant messages differ across members
    e0 = full.edge_to_node[graph.indptr[0]:graph.indptr[1]]
    assert np.ptp(e0, axis=0).max() > 1e-6
    assert len(full.history) == 2


def test_depth_changes_outputs(graph, rng):
    X = rng.normal(size=(12, 3))
    one = EDHNN(_cfg(num_layers=1), seed=4).predict_array(graph, X)
    two = EDHNN(_cfg(num_layers=2), seed=4).predict_array(graph, X)
    assert not np.allclose(one, two)


def test_dropout_only_in_training(graph, rng):
    model = EDHNN(_cfg(), seed=0)
    X = rng.normal(size=(12, 3))
    a = model.forward(graph, X, train=True, seed=1).data
    b = model.forward(graph, X, train=True, seed=1).data
    c = model.forward(graph, X, train=True, seed=2).data
    assert np.array_equal(a, b)
    assert not np.allclose(a, c)
    assert np.array_equal(model.predict_array(graph, X), model.predict_array(graph, X))


@pytest.mark.parametrize("variant", VARIANTS)
def test_checkpoint_round_trip(tmp_path, graph, rng, variant):
    model = EDHNN(_cfg(variant), seed=7)
    if variant == "ed_hnn_ii":
        model.extra["initial_message"].data = np.full((1, 8), 0.25)
    X = rng.normal(size=(12, 3))
    model.save(tmp_path / "m.json")
    back = EDHNN.load(tmp_path / "m.json")
    assert back.config == model.config
    assert np.array_equal(back.predict_array(graph, X), model.predict_array(graph, X))


def test_load_state_dict_rejects_mismatch():
    a = EDHNN(_cfg())
    b = EDHNN(_cfg(hidden_dim=4))
    with pytest.raises(ValidationError, match="shape"):
        a.load_state_dict(b.state_dict())
    with pytest.raises(ValidationError, match="names"):
        a.load_state_dict({})


def test_shape_errors_name_the_problem(graph):
    model = EDHNN(_cfg())
    with pytest.raises(ValidationError, match="rows"):
        model.predict_array(graph, np.zeros((11, 3)))
    with pytest.raises(ValidationError, match="columns"):
        model.predict_array(graph, np.zeros((12, 4)))


def test_config_validation():
    with pytest.raises(ValidationError):
        _cfg("gcn")
    with pytest.raises(ValidationError):
        _cfg(num_layers=0)
    with pytest.raises(ValidationError, match="unknown"):
        EdHnnConfig.from_dict({"in_dim": 3, "widths": 2})
    cfg = _cfg(task="regression", in_dim=1, out_dim=1)
    assert cfg.input_encoder is False and cfg.state_dim == 1
    assert EdHnnConfig.from_dict(cfg.to_dict()) == cfg


def test_zero_layer_maps_pass_through(graph, rng):
    cfg = _cfg(rho_layers=0, update_layers=0, in_dim=8)
    model = EDHNN(cfg)
    assert model.mlps["rho"].num_layers == 0
    buf = MessageBuffers()
    model.forward(graph, rng.normal(size=(12, 8)), buffers=buf)
    assert buf.edge_to_node.shape == (graph.expansion.num_pairs, 8)
