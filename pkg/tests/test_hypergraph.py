import numpy as np
import pytest

from hgdiff import LabeledHypergraph, build_hypergraph, ce_homophily, star_expansion
from hgdiff.exceptions import UndefinedScoreError, ValidationError
from hgdiff.hypergraph import clique_adjacency, disjoint_union


def test_members_are_sorted_and_deduplicated():
    h = build_hypergraph([[3, 1, 1, 2], [0]], 4)
    assert h.to_lists() == [[1, 2, 3], [0]]
    assert h.edge_sizes.tolist() == [3, 1]


def test_duplicate_hyperedges_are_kept():
    h = build_hypergraph([[0, 1], [1, 0]], 2)
    assert h.num_edges == 2
    assert h.node_degrees.tolist() == [2, 2]


def test_empty_hyperedge_is_named():
    with pytest.raises(ValidationError, match="hyperedge 1 is empty"):
        build_hypergraph([[0], []], 2)


def test_out_of_range_node_is_named():
    with pytest.raises(ValidationError, match="hyperedge 0 contains node 7"):
        build_hypergraph([[0, 7]], 3)


def test_arrays_are_read_only(small_hypergraph):
    with pytest.raises(ValueError):
        small_hypergraph.indices[0] = 3


def test_degrees_and_incidence(small_hypergraph):
    h = small_hypergraph
    assert h.node_degrees.tolist() == [1, 2, 2, 2, 2, 0]
    b = h.incidence_matrix.toarray()
    assert b.shape == (6, 4)
    assert b.sum() == len(h.indices)
    assert np.array_equal(b.sum(axis=0), h.edge_sizes)


def test_size_buckets_cover_every_edge(small_hypergraph):
    seen = []
    for ids, members in small_hypergraph.size_buckets:
        for e, row in zip(ids, members):
            assert row.tolist() == small_hypergraph.edge(e).tolist()
            seen.append(int(e))
    assert sorted(seen) == list(range(small_hypergraph.num_edges))


def test_star_expansion_layout(small_hypergraph):
    exp = star_expansion(small_hypergraph)
    assert exp.num_pairs == 9
    assert exp.pairs[:3] == [(0, 0), (1, 0), (2, 0)]
    assert exp.node_incidences(2).tolist() == [0, 1]
    assert exp.node_incidences(5).tolist() == []
    assert exp.edge_members(2).tolist() == [1, 3, 4]
    assert exp.to_hypergraph() == small_hypergraph


def test_sum_matrices(small_hypergraph):
    exp = small_hypergraph.expansion
    vals = np.arange(exp.num_pairs, dtype=float)
    assert (exp.edge_sum_matrix @ vals).tolist() == [3.0, 7.0, 18.0, 8.0]
    node = exp.node_sum_matrix @ vals
    assert node[2] == 2.0 + 3.0 and node[5] == 0.0


def test_relabel_round_trip(small_hypergraph, rng):
    perm = rng.permutation(6)
    inv = np.argsort(perm)
    assert small_hypergraph.relabel(perm).relabel(inv) == small_hypergraph


def test_equality_and_hash():
    a = build_hypergraph([[0, 1]], 2)
    b = build_hypergraph([[1, 0]], 2)
    assert a == b and hash(a) == hash(b)
    assert a != build_hypergraph([[0, 1]], 3)


def test_disjoint_union():
    h = build_hypergraph([[0, 1], [1, 2]], 3)
    u = disjoint_union(h, 3)
    assert u.num_nodes == 9
    assert u.to_lists() == [[0, 1], [1, 2], [3, 4], [4, 5], [6, 7], [7, 8]]


def test_clique_adjacency_has_no_self_loops(small_hypergraph):
    a = clique_adjacency(small_hypergraph).toarray()
    assert np.all(np.diag(a) == 0)
    assert a[0, 1] == 1 and a[0, 3] == 0
    assert np.array_equal(a, a.T)


def test_homophily_values():
    h = build_hypergraph([[0, 1, 2], [2, 3]], 5)
    # node 4 is isolated and skipped
    labels = [0, 0, 1, 1, 0]
    # node 0: {1,2} -> 1/2; node 1: {0,2} -> 1/2; node 2: {0,1,3} -> 1/3; node 3: {2} -> 1
    assert ce_homophily(h, labels) == pytest.approx((0.5 + 0.5 + 1 / 3 + 1.0) / 4)


def test_homophily_undefined_without_neighbours():
    h = build_hypergraph([[0], [1]], 2)
    with pytest.raises(UndefinedScoreError):
        ce_homophily(h, [0, 1])


def test_labelled_masks_must_be_disjoint(small_hypergraph):
    m = np.zeros(6, dtype=bool)
    m[0] = True
    with pytest.raises(ValidationError, match="disjoint"):
        LabeledHypergraph(small_hypergraph, train_mask=m, val_mask=m, test_mask=~m)
    with pytest.raises(ValidationError, match="together"):
        LabeledHypergraph(small_hypergraph, train_mask=m)


def test_labelled_shapes_checked(small_hypergraph):
    with pytest.raises(ValidationError):
        LabeledHypergraph(small_hypergraph, labels=[0, 1])
    with pytest.raises(ValidationError):
        LabeledHypergraph(small_hypergraph, features=np.zeros((5, 2)))
