"""Immutable attributed graph with node labels and directed edge weights."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np


class GraphFormatError(ValueError):
    pass


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class LabeledGraph:
    """Undirected graph with features ``X``, labels ``Y`` and masks.

    ``edges`` holds each undirected edge once as a row ``(u, v)``. Directed
    orientations are numbered ``e`` for ``(u, v)`` and ``E + e`` for
    ``(v, u)``; ``edge_weights`` (if given) is indexed the same way.
    ``labeled`` marks nodes whose label may be shown to a learner; labels of
    unlabeled nodes are still stored for evaluation.
    """

    num_nodes: int
    num_classes: int
    edges: np.ndarray
    features: np.ndarray
    labels: np.ndarray
    labeled: np.ndarray | None = None
    edge_weights: np.ndarray | None = None
    train_idx: np.ndarray | None = None
    val_idx: np.ndarray | None = None
    test_idx: np.ndarray | None = None
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        object.__setattr__(self, "edges", _frozen(edges, np.int64))
        feats = np.asarray(self.features, dtype=np.float64)
        if feats.ndim == 1:
            feats = feats.reshape(-1, 1)
        object.__setattr__(self, "features", _frozen(feats, np.float64))
        object.__setattr__(self, "labels", _frozen(self.labels, np.int64))
        labeled = np.ones(self.num_nodes, bool) if self.labeled is None else self.labeled
        object.__setattr__(self, "labeled", _frozen(labeled, bool))
        if self.edge_weights is not None:
            object.__setattr__(self, "edge_weights", _frozen(self.edge_weights, np.float64))
        for name in ("train_idx", "val_idx", "test_idx"):
            val = getattr(self, name)
            if val is not None:
                object.__setattr__(self, name, _frozen(val, np.int64))
        if self.check:
            problem = validate(self)
            if problem is not None:
                raise GraphFormatError(problem)

    @property
    def num_edges(self) -> int:
        return int(self.edges.shape[0])

    @property
    def feature_dim(self) -> int:
        return int(self.features.shape[1])

    @cached_property
    def directed(self) -> tuple[np.ndarray, np.ndarray]:
        """(centers, neighbors) over both orientations, length 2E."""
        u, v = self.edges[:, 0], self.edges[:, 1]
        return np.concatenate([u, v]), np.concatenate([v, u])

    @cached_property
    def csr(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(indptr, neighbor, orientation id) sorted by center then neighbor."""
        centers, nbrs = self.directed
        order = np.lexsort((nbrs, centers))
        counts = np.bincount(centers, minlength=self.num_nodes)
        indptr = np.zeros(self.num_nodes + 1, dtype=np.int64)
        np.cumsum(counts, out=indptr[1:])
        return indptr, nbrs[order], order

    @cached_property
    def csr_transpose(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Same as ``csr`` keyed by the neighbor (message source) node."""
        centers, nbrs = self.directed
        order = np.lexsort((centers, nbrs))
        counts = np.bincount(nbrs, minlength=self.num_nodes)
        indptr = np.zeros(self.num_nodes + 1, dtype=np.int64)
        np.cumsum(counts, out=indptr[1:])
        return indptr, centers[order], order

    @cached_property
    def csr_rows(self) -> np.ndarray:
        """Center node of each ``csr`` entry."""
        indptr = self.csr[0]
        return np.repeat(np.arange(self.num_nodes), np.diff(indptr))

    def degrees(self) -> np.ndarray:
        return np.bincount(self.edges.ravel(), minlength=self.num_nodes)

    def directed_weights(self) -> np.ndarray:
        if self.edge_weights is None:
            return np.ones(2 * self.num_edges)
        return np.asarray(self.edge_weights)

    def edge_weight(self, u: int, v: int) -> float:
        """Weight of the orientation (u, v): message from v into u."""
        hits = np.flatnonzero((self.edges[:, 0] == u) & (self.edges[:, 1] == v))
        if hits.size:
            e = int(hits[0])
        else:
            hits = np.flatnonzero((self.edges[:, 0] == v) & (self.edges[:, 1] == u))
            if not hits.size:
                raise KeyError((u, v))
            e = self.num_edges + int(hits[0])
        return float(self.directed_weights()[e])

    def with_edge_weights(self, weights) -> "LabeledGraph":
        weights = np.asarray(weights, dtype=np.float64)
        if weights.shape != (2 * self.num_edges,):
            raise GraphFormatError("edge weights must cover both orientations of every edge")
        if not np.all(np.isfinite(weights)) or np.any(weights < 0):
            raise GraphFormatError("negative or non-finite edge weight")
        return self._replace(edge_weights=weights, check=False)

    def with_masks(self, train=None, val=None, test=None) -> "LabeledGraph":
        return self._replace(train_idx=train, val_idx=val, test_idx=test)

    def with_labeled(self, labeled) -> "LabeledGraph":
        return self._replace(labeled=labeled)

    def _replace(self, **changes) -> "LabeledGraph":
        kw = dict(
            num_nodes=self.num_nodes,
            num_classes=self.num_classes,
            edges=self.edges,
            features=self.features,
            labels=self.labels,
            labeled=self.labeled,
            edge_weights=self.edge_weights,
            train_idx=self.train_idx,
            val_idx=self.val_idx,
            test_idx=self.test_idx,
        )
        kw.update(changes)
        g = LabeledGraph(**kw)
        # the edge list is unchanged, so share the adjacency
        for name in ("directed", "csr", "csr_transpose", "csr_rows"):
            g.__dict__[name] = getattr(self, name)
        return g


def validate(graph: LabeledGraph) -> str | None:
    """Return a description of the first violated invariant, or None."""
    n = graph.num_nodes
    edges = np.asarray(graph.edges).reshape(-1, 2)
    if n < 0:
        return "negative node count"
    if graph.num_classes < 1:
        return "num_classes must be positive"
    if np.asarray(graph.features).shape[0] != n:
        return "features row count does not match num_nodes"
    labels = np.asarray(graph.labels)
    if labels.shape != (n,):
        return "labels length does not match num_nodes"
    if np.any(edges[:, 0] == edges[:, 1]):
        u = int(edges[edges[:, 0] == edges[:, 1]][0, 0])
        return f"self-loop at node {u}"
    if edges.size and (edges.min() < 0 or edges.max() >= n):
        return "edge endpoint out of range"
    if labels.size and (labels.min() < 0 or labels.max() >= graph.num_classes):
        return "label out of range"
    if edges.size:
        lo = np.minimum(edges[:, 0], edges[:, 1])
        hi = np.maximum(edges[:, 0], edges[:, 1])
        keys = lo * n + hi
        if np.unique(keys).size != keys.size:
            return "duplicate undirected edge"
    if graph.edge_weights is not None:
        w = np.asarray(graph.edge_weights)
        if w.shape != (2 * edges.shape[0],):
            return "edge weights must cover both orientations of every edge"
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            return "negative or non-finite edge weight"
    seen = np.zeros(n, dtype=bool)
    for name in ("train_idx", "val_idx", "test_idx"):
        idx = getattr(graph, name)
        if idx is None:
            continue
        idx = np.asarray(idx)
        if idx.size and (idx.min() < 0 or idx.max() >= n):
            return f"{name} out of range"
        if np.unique(idx).size != idx.size or np.any(seen[idx]):
            return "node masks are not disjoint"
        seen[idx] = True
    return None


def neighbors(graph: LabeledGraph, u: int) -> list[int]:
    """Neighbors of ``u`` in ascending index order."""
    if not 0 <= u < graph.num_nodes:
        raise IndexError(f"node {u} out of range [0, {graph.num_nodes})")
    indptr, nbrs, _ = graph.csr
    return [int(v) for v in nbrs[indptr[u]:indptr[u + 1]]]


def canonical_edges(edges, num_nodes: int) -> np.ndarray:
    """Sort undirected edges as (min, max) rows in lexicographic order."""
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    lo = np.minimum(edges[:, 0], edges[:, 1])
    hi = np.maximum(edges[:, 0], edges[:, 1])
    order = np.lexsort((hi, lo))
    return np.stack([lo[order], hi[order]], axis=1)


# ---------------------------------------------------------------------------
# text format
#   nodes=<n> classes=<k> dim=<d>
#   <label> <f_1> ... <f_d>     (n lines)
#   <u> <v>                     (one line per edge)
# ---------------------------------------------------------------------------

def write_graph(graph: LabeledGraph, path) -> None:
    path = Path(path)
    with path.open("w") as fh:
        fh.write(f"nodes={graph.num_nodes} classes={graph.num_classes} dim={graph.feature_dim}\n")
        for y, row in zip(graph.labels, graph.features):
            fh.write(f"{int(y)} " + " ".join(repr(float(x)) for x in row) + "\n")
        for u, v in graph.edges:
            fh.write(f"{int(u)} {int(v)}\n")


def read_graph(path) -> LabeledGraph:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise GraphFormatError(f"cannot read {path}: {exc}") from exc
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise GraphFormatError(f"{path}: empty file")
    header = {}
    for tok in lines[0].split():
        key, _, val = tok.partition("=")
        header[key] = val
    try:
        n = int(header["nodes"])
        k = int(header["classes"])
        d = int(header["dim"])
    except (KeyError, ValueError) as exc:
        raise GraphFormatError(f"{path}: bad header {lines[0]!r}") from exc
    if len(lines) < 1 + n:
        raise GraphFormatError(f"{path}: expected {n} node lines")
    labels = np.empty(n, dtype=np.int64)
    feats = np.empty((n, d))
    for i, ln in enumerate(lines[1:1 + n]):
        parts = ln.split()
        if len(parts) != d + 1:
            raise GraphFormatError(f"{path}: node line {i} has {len(parts)} fields, expected {d + 1}")
        labels[i] = int(parts[0])
        feats[i] = [float(x) for x in parts[1:]]
    edge_lines = lines[1 + n:]
    edges = np.empty((len(edge_lines), 2), dtype=np.int64)
    for i, ln in enumerate(edge_lines):
        parts = ln.split()
        if len(parts) != 2:
            raise GraphFormatError(f"{path}: bad edge line {ln!r}")
        edges[i] = int(parts[0]), int(parts[1])
    return LabeledGraph(n, k, edges, feats, labels)
