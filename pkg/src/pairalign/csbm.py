"""Contextual stochastic block model sampler and the synthetic shift presets.

Randomness comes from ``numpy.random.Generator`` over the PCG64 bit
generator seeded with ``params.seed``. Draw order is fixed: labels, then
features, then edges block pair by block pair (i <= j in row-major order).
For a given numpy release the output is identical across platforms.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graph import LabeledGraph


@dataclass(frozen=True)
class CsbmParams:
    n: int
    pi: np.ndarray
    B: np.ndarray
    means: np.ndarray
    sigma: float
    seed: int = 0
    k: int = field(init=False)

    def __post_init__(self):
        pi = np.asarray(self.pi, dtype=np.float64)
        B = np.asarray(self.B, dtype=np.float64)
        means = np.asarray(self.means, dtype=np.float64)
        object.__setattr__(self, "pi", pi)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "k", int(pi.shape[0]))
        if np.any(pi < 0) or abs(pi.sum() - 1.0) > 1e-12:
            raise ValueError("pi must be a probability vector")
        if B.shape != (self.k, self.k) or not np.array_equal(B, B.T):
            raise ValueError("B must be a symmetric k x k matrix")
        if np.any(B < 0) or np.any(B > 1):
            raise ValueError("B entries must lie in [0, 1]")
        if means.ndim != 2 or means.shape[0] != self.k:
            raise ValueError("means must be a k x d matrix")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")

    def with_seed(self, seed: int) -> "CsbmParams":
        return CsbmParams(self.n, self.pi, self.B, self.means, self.sigma, seed)

    def with_n(self, n: int) -> "CsbmParams":
        return CsbmParams(n, self.pi, self.B, self.means, self.sigma, self.seed)


def block_matrix(p: float, q: float, k: int = 3) -> np.ndarray:
    return np.full((k, k), q) + np.eye(k) * (p - q)


def _decode_upper(t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Map linear index t over pairs a < b (ordered by b, then a) to (a, b)."""
    t = t.astype(np.int64)
    b = ((1.0 + np.sqrt(1.0 + 8.0 * t.astype(np.float64))) / 2.0).astype(np.int64)
    # correct float rounding in either direction
    b -= (b * (b - 1) // 2) > t
    b += ((b + 1) * b // 2) <= t
    a = t - b * (b - 1) // 2
    return a, b


def sample(params: CsbmParams) -> LabeledGraph:
    """Draw one graph: i.i.d. labels, Gaussian features, independent edges."""
    if params.n <= 0:
        raise ValueError("empty graph request: n must be positive")
    rng = np.random.default_rng(params.seed)
    n, k = params.n, params.k
    labels = rng.choice(k, size=n, p=params.pi)
    d = params.means.shape[1]
    features = params.means[labels] + params.sigma * rng.standard_normal((n, d))

    members = [np.flatnonzero(labels == i) for i in range(k)]
    chunks = []
    for i in range(k):
        for j in range(i, k):
            p = params.B[i, j]
            ni, nj = members[i].size, members[j].size
            n_pairs = ni * (ni - 1) // 2 if i == j else ni * nj
            if n_pairs == 0 or p == 0.0:
                continue
            m = rng.binomial(n_pairs, p)
            if m == 0:
                continue
            # m distinct pairs uniformly from n_pairs == independent Bernoulli(p) per pair
            idx = rng.choice(n_pairs, size=m, replace=False)
            if i == j:
                a, b = _decode_upper(idx)
                u, v = members[i][a], members[i][b]
            else:
                a, b = np.divmod(idx, nj)
                u, v = members[i][a], members[j][b]
            chunks.append(np.stack([np.minimum(u, v), np.maximum(u, v)], axis=1))
    if chunks:
        edges = np.concatenate(chunks)
        edges = edges[np.lexsort((edges[:, 1], edges[:, 0]))]
    else:
        edges = np.empty((0, 2), dtype=np.int64)
    return LabeledGraph(n, k, edges, features, labels)


def expected_edge_count(params: CsbmParams) -> tuple[float, float]:
    """Mean and standard deviation of the undirected edge count given labels
    drawn in exact proportion ``n * pi`` (used as a closed-form oracle)."""
    counts = params.n * params.pi
    mean = 0.0
    var = 0.0
    for i in range(params.k):
        for j in range(i, params.k):
            pairs = counts[i] * (counts[i] - 1) / 2 if i == j else counts[i] * counts[j]
            p = params.B[i, j]
            mean += pairs * p
            var += pairs * p * (1 - p)
    return mean, float(np.sqrt(var))


SOURCE_P, SOURCE_Q = 0.02, 0.005
_UNIFORM = np.full(3, 1.0 / 3.0)

# setting id -> (p, q, pi) of the target graph
_TARGETS = {
    1: (0.015, 0.0075, _UNIFORM),
    2: (0.01, 0.01, _UNIFORM),
    3: (0.02 / 2, 0.005 / 2, _UNIFORM),
    4: (0.02 / 4, 0.005 / 4, _UNIFORM),
    5: (0.015 / 2, 0.0075 / 2, _UNIFORM),
    6: (0.01 / 2, 0.01 / 2, _UNIFORM),
    7: (0.015 / 2, 0.0075 / 2, np.array([0.5, 0.25, 0.25])),
    8: (0.015 / 2, 0.0075 / 2, np.array([0.1, 0.3, 0.6])),
}

PRESET_IDS = tuple(sorted(_TARGETS))


def preset(setting_id: int, n: int = 6000, sigma: float = 0.3,
           source_seed: int = 0, target_seed: int = 1) -> tuple[CsbmParams, CsbmParams]:
    """Source/target parameter pair for synthetic setting 1..8."""
    if setting_id not in _TARGETS:
        raise ValueError(f"unknown CSBM setting {setting_id}; valid settings are 1..8")
    means = np.eye(3)
    p, q, pi = _TARGETS[setting_id]
    source = CsbmParams(n, _UNIFORM.copy(), block_matrix(SOURCE_P, SOURCE_Q), means, sigma, source_seed)
    target = CsbmParams(n, np.array(pi, dtype=np.float64), block_matrix(p, q), means, sigma, target_seed)
    return source, target


def parse_preset_name(name: str) -> int:
    """``csbm-<id>`` -> id, with range checking."""
    prefix = "csbm-"
    if not name.startswith(prefix):
        raise ValueError(f"unknown preset {name!r}; expected csbm-1 .. csbm-8")
    try:
        sid = int(name[len(prefix):])
    except ValueError:
        raise ValueError(f"unknown preset {name!r}; expected csbm-1 .. csbm-8") from None
    if sid not in _TARGETS:
        raise ValueError(f"unknown preset {name!r}; valid range is csbm-1 .. csbm-8")
    return sid
