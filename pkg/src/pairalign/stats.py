"""Empirical label / edge-type distributions and CSS / LS shift metrics.

Every undirected edge is counted in both orientations, so the edge-type
matrix of an undirected graph is exactly symmetric.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graph import LabeledGraph


@dataclass(frozen=True)
class DistributionSummary:
    """Empirical P(Y), P(Y_u, Y_v | e), P(Y_u | e) and P(Y_v | Y_u, v in N_u).

    Edge quantities are ``None`` for an edgeless graph. Rows of
    ``neighbor_cond_dist`` whose endpoint mass is zero hold NaN and are
    marked False in ``row_present``.
    """

    label_dist: np.ndarray
    edge_type_dist: np.ndarray | None
    edge_endpoint_dist: np.ndarray | None
    neighbor_cond_dist: np.ndarray | None
    row_present: np.ndarray | None

    @property
    def num_classes(self) -> int:
        return int(self.label_dist.shape[0])

    @property
    def has_edges(self) -> bool:
        return self.edge_type_dist is not None


def label_distribution(labels, k: int) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.size == 0:
        raise ValueError("no nodes to summarize")
    return np.bincount(labels, minlength=k) / labels.size


def edge_type_counts(graph: LabeledGraph) -> np.ndarray:
    """k x k counts of directed orientations (u, v) by (y_u, y_v)."""
    k = graph.num_classes
    y = graph.labels
    a, b = y[graph.edges[:, 0]], y[graph.edges[:, 1]]
    counts = np.bincount(a * k + b, minlength=k * k).reshape(k, k)
    return counts + counts.T


def summarize(graph: LabeledGraph) -> DistributionSummary:
    if not np.all(graph.labeled):
        raise ValueError("summarize requires every node to be labeled")
    k = graph.num_classes
    label_dist = label_distribution(graph.labels, k)
    if graph.num_edges == 0:
        return DistributionSummary(label_dist, None, None, None, None)
    counts = edge_type_counts(graph).astype(np.float64)
    joint = counts / counts.sum()
    endpoint = joint.sum(axis=1)
    present = endpoint > 0
    cond = np.full((k, k), np.nan)
    cond[present] = joint[present] / endpoint[present, None]
    return DistributionSummary(label_dist, joint, endpoint, cond, present)


def total_variation(p, q) -> float:
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


@dataclass(frozen=True)
class CssMetric:
    """Conditional structure shift: TV of neighbor-label laws per center class,
    averaged with source (``src``) or target (``tgt``) endpoint weights."""

    src: float
    tgt: float
    both: float
    per_class_tv: np.ndarray = field(repr=False)
    skipped: tuple[int, ...] = ()

    def __iter__(self):
        return iter((self.src, self.tgt, self.both))


def css_metric(src: DistributionSummary, tgt: DistributionSummary) -> CssMetric:
    if not (src.has_edges and tgt.has_edges):
        raise ValueError("css_metric needs edge distributions in both domains")
    k = src.num_classes
    tv = np.zeros(k)
    skipped = []
    for i in range(k):
        ps, pt = src.row_present[i], tgt.row_present[i]
        if ps and pt:
            tv[i] = total_variation(src.neighbor_cond_dist[i], tgt.neighbor_cond_dist[i])
        elif ps or pt:
            # neighborhood law exists on one side only: maximal shift
            tv[i] = 1.0
        else:
            skipped.append(i)
    css_src = float(src.edge_endpoint_dist @ tv)
    css_tgt = float(tgt.edge_endpoint_dist @ tv)
    return CssMetric(css_src, css_tgt, 0.5 * (css_src + css_tgt), tv, tuple(skipped))


def ls_metric(src: DistributionSummary, tgt: DistributionSummary) -> float:
    return total_variation(src.label_dist, tgt.label_dist)


def shift_report(source: LabeledGraph, target: LabeledGraph) -> dict:
    """The four metrics as a flat dict (plus any skipped classes)."""
    s, t = summarize(source), summarize(target)
    css = css_metric(s, t)
    return {
        "css_src": css.src,
        "css_tgt": css.tgt,
        "css_both": css.both,
        "ls": ls_metric(s, t),
        "skipped_classes": list(css.skipped),
    }


def format_report(report: dict) -> str:
    keys = ("css_src", "css_tgt", "css_both", "ls")
    width = max(len(k) for k in keys)
    lines = [f"{k:<{width}}  {report[k]:.4f}" for k in keys]
    if report.get("skipped_classes"):
        lines.append(f"skipped classes: {report['skipped_classes']}")
    return "\n".join(lines)
