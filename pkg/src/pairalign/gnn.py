"""Weighted-mean message passing encoder with an MLP head, in float64 numpy.

Layer update: h_u <- relu(h_u W_self + m_u W_neigh + b), with
m_u = sum_v w_uv h_v / sum_v w_uv over the neighbors v of u (zero when u is
isolated). The head is relu(h W_0 + b_0) W_1 + b_1 followed by softmax.
Gradients are exact reverse mode through the cached forward pass.
"""

from __future__ import annotations

import json
import weakref
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .graph import LabeledGraph

CHECKPOINT_FORMAT = "pairalign-gnn"
CHECKPOINT_VERSION = 1
LOG_CLAMP = float(np.log(1e-12))


@dataclass
class GnnModel:
    params: dict[str, np.ndarray]
    in_dim: int
    hidden: int
    num_classes: int
    num_layers: int = 3

    def copy(self) -> "GnnModel":
        return GnnModel({k: v.copy() for k, v in self.params.items()},
                        self.in_dim, self.hidden, self.num_classes, self.num_layers)

    def num_parameters(self) -> int:
        return sum(p.size for p in self.params.values())


def init_model(in_dim: int, num_classes: int, hidden: int = 20, num_layers: int = 3,
               seed: int = 0) -> GnnModel:
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialization."""
    rng = np.random.default_rng(seed)

    def uni(fan_in, shape):
        bound = 1.0 / np.sqrt(fan_in)
        return rng.uniform(-bound, bound, size=shape)

    params = {}
    d = in_dim
    for layer in range(num_layers):
        params[f"conv{layer}.w_self"] = uni(d, (d, hidden))
        params[f"conv{layer}.w_neigh"] = uni(d, (d, hidden))
        params[f"conv{layer}.bias"] = uni(d, (hidden,))
        d = hidden
    params["head0.weight"] = uni(hidden, (hidden, hidden))
    params["head0.bias"] = uni(hidden, (hidden,))
    params["head1.weight"] = uni(hidden, (hidden, num_classes))
    params["head1.bias"] = uni(hidden, (num_classes,))
    return GnnModel(params, in_dim, hidden, num_classes, num_layers)


@dataclass
class _Aggregator:
    indptr: np.ndarray
    nbrs: np.ndarray
    coef: np.ndarray
    t_indptr: np.ndarray
    t_centers: np.ndarray
    t_coef: np.ndarray

    def forward(self, H):
        return kernels.segment_sum(self.indptr, self.nbrs, self.coef, H)

    def backward(self, dM):
        return kernels.segment_sum(self.t_indptr, self.t_centers, self.t_coef, dM)


_PLAIN_AGGREGATORS: "weakref.WeakKeyDictionary[LabeledGraph, _Aggregator]" = weakref.WeakKeyDictionary()


def _aggregator(graph: LabeledGraph, use_edge_weights: bool) -> _Aggregator:
    weighted = use_edge_weights and graph.edge_weights is not None
    if not weighted and graph in _PLAIN_AGGREGATORS:
        return _PLAIN_AGGREGATORS[graph]
    indptr, nbrs, order = graph.csr
    n = graph.num_nodes
    w = graph.directed_weights()[order] if weighted else np.ones(order.shape[0])
    rows = graph.csr_rows
    den = np.bincount(rows, weights=w, minlength=n)
    safe = np.where(den > 0, den, 1.0)
    coef = np.where(den[rows] > 0, w / safe[rows], 0.0)
    coef_by_id = np.empty_like(coef)
    coef_by_id[order] = coef
    t_indptr, t_centers, t_order = graph.csr_transpose
    agg = _Aggregator(indptr, nbrs, coef, t_indptr, t_centers, coef_by_id[t_order])
    if not weighted:
        _PLAIN_AGGREGATORS[graph] = agg
    return agg


@dataclass
class ForwardCache:
    agg: _Aggregator
    inputs: list = field(default_factory=list)     # H_{l-1} per conv layer
    messages: list = field(default_factory=list)   # M_l per conv layer
    pre: list = field(default_factory=list)        # pre-activations per conv layer
    h_top: np.ndarray | None = None
    z_head: np.ndarray | None = None
    h_head: np.ndarray | None = None
    log_probs: np.ndarray | None = None


def forward(model: GnnModel, graph: LabeledGraph, use_edge_weights: bool = True):
    """Soft predictions (num_nodes x k, row-stochastic) and the forward cache."""
    if graph.feature_dim != model.in_dim:
        raise ValueError(f"feature dim {graph.feature_dim} does not match model input {model.in_dim}")
    p = model.params
    agg = _aggregator(graph, use_edge_weights)
    cache = ForwardCache(agg)
    H = graph.features
    for layer in range(model.num_layers):
        M = agg.forward(H)
        Z = H @ p[f"conv{layer}.w_self"] + M @ p[f"conv{layer}.w_neigh"] + p[f"conv{layer}.bias"]
        cache.inputs.append(H)
        cache.messages.append(M)
        cache.pre.append(Z)
        H = np.maximum(Z, 0.0)
    cache.h_top = H
    cache.z_head = H @ p["head0.weight"] + p["head0.bias"]
    cache.h_head = np.maximum(cache.z_head, 0.0)
    logits = cache.h_head @ p["head1.weight"] + p["head1.bias"]
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    cache.log_probs = log_probs
    return np.exp(log_probs), cache


def predict(model: GnnModel, graph: LabeledGraph, use_edge_weights: bool = True) -> np.ndarray:
    return forward(model, graph, use_edge_weights)[0]


@dataclass
class LossInfo:
    loss: float
    clamped: int
    probs: np.ndarray


def loss_and_grad(model: GnnModel, graph: LabeledGraph, beta=None, train_mask=None,
                  use_edge_weights: bool = True):
    """beta-weighted mean cross-entropy over ``train_mask`` and its gradients.

    Returns ``(loss, grads, info)``. Probabilities below 1e-12 are clamped
    before the log; clamped nodes contribute no gradient and are counted in
    ``info.clamped``.
    """
    k = model.num_classes
    beta = np.ones(k) if beta is None else np.asarray(beta, dtype=np.float64)
    if np.any(beta < 0):
        raise ValueError("beta must be nonnegative")
    idx = np.arange(graph.num_nodes) if train_mask is None else np.asarray(train_mask)
    if idx.dtype == bool:
        idx = np.flatnonzero(idx)
    if idx.size == 0:
        raise ValueError("empty training mask")
    if not np.all(graph.labeled[idx]):
        raise ValueError("training mask contains unlabeled nodes")

    probs, cache = forward(model, graph, use_edge_weights)
    y = graph.labels[idx]
    lp = cache.log_probs[idx, y]
    clamped = lp < LOG_CLAMP
    lp_used = np.where(clamped, LOG_CLAMP, lp)
    scale = beta[y] / idx.size
    loss = float(-(scale * lp_used).sum())

    p = model.params
    grads = {}
    dlogits = np.zeros_like(probs)
    coef = np.where(clamped, 0.0, scale)
    dlogits[idx] = probs[idx] * coef[:, None]
    dlogits[idx, y] -= coef

    grads["head1.weight"] = cache.h_head.T @ dlogits
    grads["head1.bias"] = dlogits.sum(axis=0)
    dz = (dlogits @ p["head1.weight"].T) * (cache.z_head > 0)
    grads["head0.weight"] = cache.h_top.T @ dz
    grads["head0.bias"] = dz.sum(axis=0)
    dH = dz @ p["head0.weight"].T
    for layer in reversed(range(model.num_layers)):
        dZ = dH * (cache.pre[layer] > 0)
        H_in = cache.inputs[layer]
        grads[f"conv{layer}.w_self"] = H_in.T @ dZ
        grads[f"conv{layer}.w_neigh"] = cache.messages[layer].T @ dZ
        grads[f"conv{layer}.bias"] = dZ.sum(axis=0)
        if layer > 0:
            dM = dZ @ p[f"conv{layer}.w_neigh"].T
            dH = dZ @ p[f"conv{layer}.w_self"].T + cache.agg.backward(dM)
    grads = {name: grads[name] for name in p}
    return loss, grads, LossInfo(loss, int(clamped.sum()), probs)


@dataclass
class AdamState:
    lr: float = 0.003
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def sgd_step(model: GnnModel, grads: dict, state: AdamState, lr: float | None = None) -> GnnModel:
    """One bias-corrected adaptive-moment update, in place; returns ``model``."""
    lr = state.lr if lr is None else lr
    state.step += 1
    t = state.step
    for name, g in grads.items():
        param = model.params[name]
        if g.shape != param.shape:
            raise ValueError(f"gradient shape {g.shape} does not match {name} {param.shape}")
        m = state.m.get(name)
        if m is None:
            m = state.m[name] = np.zeros_like(param)
            state.v[name] = np.zeros_like(param)
        v = state.v[name]
        m *= state.beta1
        m += (1 - state.beta1) * g
        v *= state.beta2
        v += (1 - state.beta2) * g * g
        m_hat = m / (1 - state.beta1 ** t)
        v_hat = v / (1 - state.beta2 ** t)
        param -= lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return model


# ---------------------------------------------------------------------------
# checkpoints
# ---------------------------------------------------------------------------

def save_checkpoint(model: GnnModel, path) -> None:
    doc = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "in_dim": model.in_dim,
        "hidden": model.hidden,
        "num_classes": model.num_classes,
        "num_layers": model.num_layers,
        "params": {
            name: {"shape": list(arr.shape), "data": arr.ravel().tolist()}
            for name, arr in model.params.items()
        },
    }
    Path(path).write_text(json.dumps(doc))


def load_checkpoint(path) -> GnnModel:
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"{path}: not a {CHECKPOINT_FORMAT} checkpoint")
    if doc.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {doc.get('version')}")
    params = {
        name: np.asarray(entry["data"], dtype=np.float64).reshape(entry["shape"])
        for name, entry in doc["params"].items()
    }
    return GnnModel(params, doc["in_dim"], doc["hidden"], doc["num_classes"], doc["num_layers"])


# ---------------------------------------------------------------------------
# finite-difference check
# ---------------------------------------------------------------------------

def gradient_check(model: GnnModel, graph: LabeledGraph, beta=None, train_mask=None,
                   eps: float = 1e-5, use_edge_weights: bool = True) -> dict[str, float]:
    """Relative error ||g_analytic - g_fd|| / max(||g_analytic|| + ||g_fd||, 1e-12)
    per parameter tensor, with central differences over every entry."""
    _, grads, _ = loss_and_grad(model, graph, beta, train_mask, use_edge_weights)
    errors = {}
    for name, param in model.params.items():
        fd = np.zeros_like(param)
        flat = param.reshape(-1)
        fd_flat = fd.reshape(-1)
        for i in range(flat.size):
            old = flat[i]
            flat[i] = old + eps
            up = loss_and_grad(model, graph, beta, train_mask, use_edge_weights)[0]
            flat[i] = old - eps
            down = loss_and_grad(model, graph, beta, train_mask, use_edge_weights)[0]
            flat[i] = old
            fd_flat[i] = (up - down) / (2 * eps)
        g = grads[name]
        denom = max(np.linalg.norm(g) + np.linalg.norm(fd), 1e-12)
        errors[name] = float(np.linalg.norm(g - fd) / denom)
    return errors
