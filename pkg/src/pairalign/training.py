"""Training loop with periodic re-estimation of edge and label weights."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Callable

import numpy as np

from . import estimator as est
from .gnn import AdamState, GnnModel, init_model, loss_and_grad, predict, sgd_step
from .graph import LabeledGraph
from .stats import summarize


class Mode(str, Enum):
    ERM = "erm"
    PA_CSS = "pa-css"
    PA_LS = "pa-ls"
    PA_BOTH = "pa-both"
    STRURW = "strurw-ablation"

    @classmethod
    def parse(cls, value) -> "Mode":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "-")
        aliases = {"strurw": "strurw-ablation"}
        key = aliases.get(key, key)
        try:
            return cls(key)
        except ValueError:
            valid = ", ".join(m.value for m in cls)
            raise ValueError(f"unknown mode {value!r}; valid modes: {valid}") from None

    @property
    def reweights_edges(self) -> bool:
        return self in (Mode.PA_CSS, Mode.PA_BOTH, Mode.STRURW)

    @property
    def reweights_labels(self) -> bool:
        return self in (Mode.PA_LS, Mode.PA_BOTH)


@dataclass
class TrainConfig:
    epochs: int = 400
    period: int = 10
    lr: float = 0.003
    lambda_w: float = 0.01
    lambda_beta: float = 0.01
    delta: float = 1e-5
    seed: int = 0
    mode: Mode = Mode.PA_BOTH
    target_val_fraction: float = 0.2
    metric: str = "accuracy"
    hidden: int = 20
    symmetric_w: bool = True
    # encoder used for the source predictions that feed Sigma-hat and C-hat
    source_estimation: str = "weighted"

    def __post_init__(self):
        self.mode = Mode.parse(self.mode)
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.period < 1:
            raise ValueError("update period must be >= 1")
        if not 0.0 < self.target_val_fraction < 1.0:
            raise ValueError("target_val_fraction must lie in (0, 1)")
        if min(self.lambda_w, self.lambda_beta, self.delta) < 0:
            raise ValueError("lambda and delta must be nonnegative")
        if self.metric not in ("accuracy", "binary-f1"):
            raise ValueError(f"unknown metric {self.metric!r}")
        if self.source_estimation not in ("plain", "weighted"):
            raise ValueError("source_estimation must be 'plain' or 'weighted'")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["mode"] = self.mode.value
        return d


@dataclass
class WeightUpdate:
    epoch: int
    w: np.ndarray
    alpha: np.ndarray
    gamma: np.ndarray
    beta: np.ndarray


@dataclass
class RunResult:
    config: TrainConfig
    history: list[dict]
    best_epoch: int
    best_val: float
    test_score: float
    model: GnnModel
    weights: est.WeightEstimates
    updates: list[WeightUpdate] = field(default_factory=list)
    clamp_events: int = 0

    @property
    def final_test(self) -> float:
        return self.history[-1]["tgt_test"]

    def summary(self) -> dict:
        return {
            "mode": self.config.mode.value,
            "seed": self.config.seed,
            "best_epoch": self.best_epoch,
            "best_val": self.best_val,
            "test_score": self.test_score,
            "final_test": self.final_test,
            "num_weight_updates": len(self.updates),
            "clamp_events": self.clamp_events,
        }


class RunError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

def score(probs, labels, idx, metric: str = "accuracy") -> float:
    """Accuracy or binary F1 (class 1 positive) of argmax predictions on ``idx``."""
    idx = np.asarray(idx)
    if idx.dtype == bool:
        idx = np.flatnonzero(idx)
    if idx.size == 0:
        raise ValueError("cannot evaluate on an empty mask")
    pred = np.argmax(np.asarray(probs)[idx], axis=1)
    y = np.asarray(labels)[idx]
    if metric == "accuracy":
        return float(np.mean(pred == y))
    if metric == "binary-f1":
        tp = np.sum((pred == 1) & (y == 1))
        fp = np.sum((pred == 1) & (y != 1))
        fn = np.sum((pred != 1) & (y == 1))
        denom = 2 * tp + fp + fn
        return float(2 * tp / denom) if denom else 0.0
    raise ValueError(f"unknown metric {metric!r}")


def evaluate(model: GnnModel, graph: LabeledGraph, mask, metric: str = "accuracy",
             use_edge_weights: bool = False) -> float:
    return score(predict(model, graph, use_edge_weights), graph.labels, mask, metric)


def split_target(target: LabeledGraph, val_fraction: float = 0.2, seed: int = 0):
    """Seeded uniform (validation, test) split of all target nodes."""
    if not 0.0 < val_fraction < 1.0:
        raise ValueError("val_fraction must lie in (0, 1)")
    n = target.num_nodes
    perm = np.random.default_rng([seed, 1]).permutation(n)
    n_val = int(round(val_fraction * n))
    return np.sort(perm[:n_val]), np.sort(perm[n_val:])


# ---------------------------------------------------------------------------
# the alignment loop
# ---------------------------------------------------------------------------

def _estimate(mode, config, source, target, src_pred, tgt_pred, src_stats, current):
    k = source.num_classes
    w, alpha, gamma, beta = current.w, current.alpha, current.gamma, current.beta
    sigma = nu = c_hat = mu = None
    if mode.reweights_edges:
        sigma, nu = est.estimate_sigma_nu(source, src_pred, target, tgt_pred)
        w = est.solve_w(sigma, nu, src_stats.edge_type_dist, config.lambda_w, config.symmetric_w)
        alpha = est.compute_alpha(w, src_stats.edge_type_dist)
        gamma = est.compute_gamma(w, src_stats.edge_type_dist, config.delta)
    if mode.reweights_labels:
        c_hat, mu = est.estimate_confusion_mu(source.labels, src_pred, tgt_pred, k)
        beta = est.solve_beta(c_hat, mu, src_stats.label_dist, config.lambda_beta)
    return est.WeightEstimates(sigma, nu, c_hat, mu, w, alpha, gamma, beta)


def run(source: LabeledGraph, target: LabeledGraph, config: TrainConfig,
        log: Callable[[dict], None] | None = None,
        estimation_predictions: Callable | None = None) -> RunResult:
    """Train on the labeled source graph and score on the target graph.

    Target labels are read only for validation/test scoring. Weights are
    re-solved after every ``config.period``-th epoch (1-based) and used from
    the following epoch on. ``estimation_predictions(model, graph, role)``
    may replace the soft predictions fed to the estimators.
    """
    mode = config.mode
    k = source.num_classes
    if target.num_classes != k:
        raise ValueError("source and target have different class counts")
    if target.feature_dim != source.feature_dim:
        raise ValueError("source and target have different feature dimensions")
    if not np.all(source.labeled):
        raise ValueError("source graph must be fully labeled")

    if target.val_idx is not None and target.test_idx is not None:
        val_idx, test_idx = target.val_idx, target.test_idx
    else:
        val_idx, test_idx = split_target(target, config.target_val_fraction, config.seed)
    train_idx = source.train_idx if source.train_idx is not None else np.arange(source.num_nodes)

    src_stats = summarize(source)
    centers, nbrs = source.directed
    y_c, y_n = source.labels[centers], source.labels[nbrs]

    model = init_model(source.feature_dim, k, config.hidden, seed=config.seed)
    opt = AdamState(lr=config.lr)
    weights = est.WeightEstimates.identity(k)
    updates: list[WeightUpdate] = []
    history: list[dict] = []
    best_val, best_epoch, best_model, best_test = -np.inf, 0, model.copy(), 0.0
    clamps = 0
    ones = np.ones(k)

    for epoch in range(1, config.epochs + 1):
        if mode.reweights_edges:
            table = weights.w if mode is Mode.STRURW else weights.gamma
            train_graph = source.with_edge_weights(table[y_c, y_n])
        else:
            train_graph = source
        beta = weights.beta if mode.reweights_labels else ones
        loss, grads, info = loss_and_grad(model, train_graph, beta, train_idx,
                                          use_edge_weights=mode.reweights_edges)
        clamps += info.clamped
        src_acc = score(info.probs, source.labels, train_idx, config.metric)
        sgd_step(model, grads, opt, config.lr)

        tgt_pred = predict(model, target, use_edge_weights=False)
        val = score(tgt_pred, target.labels, val_idx, config.metric)
        test = score(tgt_pred, target.labels, test_idx, config.metric)
        record = {"epoch": epoch, "loss": loss, "src_acc": src_acc, "tgt_val": val, "tgt_test": test}
        history.append(record)
        if log is not None:
            log(record)
        if val > best_val:
            best_val, best_epoch, best_test = val, epoch, test
            best_model = model.copy()

        if mode is not Mode.ERM and epoch % config.period == 0:
            if estimation_predictions is not None:
                src_pred = estimation_predictions(model, source, "source")
                tgt_est = estimation_predictions(model, target, "target")
            else:
                if config.source_estimation == "weighted" and mode.reweights_edges:
                    src_pred = predict(model, train_graph, use_edge_weights=True)
                else:
                    src_pred = predict(model, source, use_edge_weights=False)
                tgt_est = tgt_pred
            try:
                weights = _estimate(mode, config, source, target, src_pred, tgt_est, src_stats, weights)
            except est.EstimationError as exc:
                raise RunError(f"weight estimation failed at epoch {epoch}: {exc}") from exc
            updates.append(WeightUpdate(epoch, weights.w.copy(), weights.alpha.copy(),
                                        weights.gamma.copy(), weights.beta.copy()))

    result = RunResult(config, history, best_epoch, float(best_val), float(best_test),
                       best_model, weights, updates, clamps)
    if log is not None:
        log({"summary": result.summary()})
    return result
