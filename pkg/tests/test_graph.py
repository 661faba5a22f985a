import numpy as np
import pytest

from pairalign.graph import (GraphFormatError, LabeledGraph, canonical_edges, neighbors,
                             read_graph, validate, write_graph)


def make(n, edges, labels, k=3, **kw):
    return LabeledGraph(n, k, np.asarray(edges, dtype=np.int64).reshape(-1, 2),
                        np.zeros((n, 2)), labels, **kw)


def test_self_loop_rejected():
    with pytest.raises(GraphFormatError, match="self-loop"):
        make(4, [[3, 3]], [0, 0, 0, 0])


def test_empty_edges_ok():
    g = make(5, [], [0, 1, 2, 0, 1])
    assert validate(g) is None
    assert g.num_edges == 0


def test_label_out_of_range():
    with pytest.raises(GraphFormatError, match="label out of range"):
        make(3, [[0, 1]], [0, 4, 1])


@pytest.mark.parametrize("edges,msg", [
    ([[0, 7]], "endpoint out of range"),
    ([[0, 1], [1, 0]], "duplicate"),
])
def test_other_violations(edges, msg):
    with pytest.raises(GraphFormatError, match=msg):
        make(3, edges, [0, 1, 2])


def test_masks_must_be_disjoint():
    g = make(4, [[0, 1]], [0, 1, 2, 0])
    with pytest.raises(GraphFormatError, match="disjoint"):
        g.with_masks(train=[0, 1], val=[1, 2])


def test_neighbors_path_isolated_star():
    path = make(3, [[0, 1], [1, 2]], [0, 0, 0])
    assert neighbors(path, 1) == [0, 2]
    iso = make(3, [[0, 1]], [0, 0, 0])
    assert neighbors(iso, 2) == []
    star = make(5, [[0, 3], [0, 1], [4, 0], [2, 0]], [0] * 5)
    assert neighbors(star, 0) == [1, 2, 3, 4]
    with pytest.raises(IndexError):
        neighbors(star, 5)


def test_directed_orientations_and_weights():
    g = make(3, [[0, 1], [1, 2]], [0, 1, 2])
    u, v = g.directed
    assert list(zip(u, v)) == [(0, 1), (1, 2), (1, 0), (2, 1)]
    gw = g.with_edge_weights([1.0, 2.0, 3.0, 4.0])
    assert gw.edge_weight(0, 1) == 1.0
    assert gw.edge_weight(1, 0) == 3.0
    assert gw.edge_weight(2, 1) == 4.0
    with pytest.raises(KeyError):
        gw.edge_weight(0, 2)
    with pytest.raises(GraphFormatError):
        g.with_edge_weights([1.0, -1.0, 1.0, 1.0])
    with pytest.raises(GraphFormatError):
        g.with_edge_weights([1.0, 1.0])


def test_arrays_are_read_only():
    g = make(3, [[0, 1]], [0, 1, 2])
    with pytest.raises(ValueError):
        g.labels[0] = 2


def test_canonical_edges():
    out = canonical_edges([[3, 1], [0, 2], [1, 0]], 4)
    assert out.tolist() == [[0, 1], [0, 2], [1, 3]]


def test_roundtrip(tmp_path, rng):
    from conftest import random_graph
    g = random_graph(rng, 25, p=0.2)
    write_graph(g, tmp_path / "g.graph")
    h = read_graph(tmp_path / "g.graph")
    assert h.num_nodes == g.num_nodes and h.num_classes == g.num_classes
    np.testing.assert_array_equal(h.edges, g.edges)
    np.testing.assert_array_equal(h.labels, g.labels)
    np.testing.assert_array_equal(h.features, g.features)


def test_read_errors(tmp_path):
    with pytest.raises(GraphFormatError, match="cannot read"):
        read_graph(tmp_path / "missing.graph")
    bad = tmp_path / "bad.graph"
    bad.write_text("nodes=2 classes=2\n0 1\n1 1\n")
    with pytest.raises(GraphFormatError, match="bad header"):
        read_graph(bad)
