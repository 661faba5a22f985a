import numpy as np
import pytest

from pairalign import csbm
from pairalign.graph import LabeledGraph
from pairalign.stats import css_metric, ls_metric, shift_report, summarize, format_report


def tiny(n, k, edges, labels):
    return LabeledGraph(n, k, np.asarray(edges).reshape(-1, 2), np.zeros((n, 1)), labels)


def test_triangle_edge_types():
    s = summarize(tiny(3, 2, [[0, 1], [1, 2], [0, 2]], [0, 0, 1]))
    np.testing.assert_allclose(s.edge_type_dist, [[1 / 3, 1 / 3], [1 / 3, 0]])
    np.testing.assert_allclose(s.edge_endpoint_dist, [2 / 3, 1 / 3])
    np.testing.assert_allclose(s.neighbor_cond_dist, [[0.5, 0.5], [1.0, 0.0]])


def test_single_edge_same_class():
    s = summarize(tiny(2, 2, [[0, 1]], [0, 0]))
    np.testing.assert_allclose(s.edge_type_dist, [[1, 0], [0, 0]])
    assert not s.row_present[1]
    assert np.all(np.isnan(s.neighbor_cond_dist[1]))


def test_edgeless_and_unlabeled():
    s = summarize(tiny(3, 2, [], [0, 1, 1]))
    assert not s.has_edges and s.edge_type_dist is None
    g = tiny(3, 2, [[0, 1]], [0, 1, 1]).with_labeled([True, False, True])
    with pytest.raises(ValueError, match="labeled"):
        summarize(g)


def test_source_preset_neighbor_law():
    src, _ = csbm.preset(1)
    s = summarize(csbm.sample(src))
    expect = np.full((3, 3), 1 / 6) + np.eye(3) * 0.5
    np.testing.assert_allclose(s.neighbor_cond_dist, expect, atol=0.02)
    np.testing.assert_allclose(s.edge_type_dist, s.edge_type_dist.T)


def test_identical_summaries_zero():
    src, _ = csbm.preset(2, n=900)
    s = summarize(csbm.sample(src))
    assert tuple(css_metric(s, s)) == (0.0, 0.0, 0.0)
    assert ls_metric(s, s) == 0.0


@pytest.mark.parametrize("sid,key,reference,analytic", [
    (1, "css_both", 0.1655, 1 / 6),
    (2, "css_both", 0.3322, 1 / 3),
    (7, "ls", 0.1650, 1 / 6),
    (8, "ls", 0.2667, 4 / 15),
])
def test_preset_shift_metrics(sid, key, reference, analytic):
    src, tgt = csbm.preset(sid)
    rep = shift_report(csbm.sample(src), csbm.sample(tgt))
    assert rep[key] == pytest.approx(reference, abs=0.02)
    assert rep[key] == pytest.approx(analytic, abs=0.02)


def test_ls_analytic():
    a = tiny(6, 3, [[0, 1]], [0, 0, 1, 1, 2, 2])
    b = tiny(4, 3, [[0, 1]], [0, 0, 1, 2])
    assert ls_metric(summarize(a), summarize(b)) == pytest.approx(1 / 6)


def test_one_sided_row_counts_as_full_shift():
    a = tiny(3, 2, [[0, 1], [1, 2]], [0, 0, 1])
    b = tiny(3, 2, [[0, 1]], [0, 0, 1])      # class 1 has no edges in b
    css = css_metric(summarize(a), summarize(b))
    assert css.per_class_tv[1] == 1.0
    assert css.skipped == ()


def test_format_report_alignment():
    text = format_report({"css_src": 0.1, "css_tgt": 0.2, "css_both": 0.15, "ls": 0.0})
    lines = text.splitlines()
    assert len(lines) == 4
    assert len({ln.index("0.") for ln in lines}) == 1
