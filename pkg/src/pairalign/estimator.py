"""Alignment weights: edge-type ratio w, endpoint ratio alpha, neighbor
reweighting gamma and label ratio beta, estimated from soft predictions.

Flattened k x k quantities use row-major order, index ``i * k + j``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .graph import LabeledGraph


class EstimationError(RuntimeError):
    pass


class UnsupportedEdgeType(EstimationError):
    pass


class DegenerateEndpointClass(EstimationError):
    pass


@dataclass
class WeightEstimates:
    sigma_hat: np.ndarray | None
    nu_hat: np.ndarray | None
    c_hat: np.ndarray | None
    mu_hat: np.ndarray | None
    w: np.ndarray
    alpha: np.ndarray
    gamma: np.ndarray
    beta: np.ndarray

    @classmethod
    def identity(cls, k: int) -> "WeightEstimates":
        return cls(None, None, None, None, np.ones((k, k)), np.ones(k), np.ones((k, k)), np.ones(k))


def check_soft_predictions(P, num_nodes=None, tol=1e-6) -> np.ndarray:
    P = np.asarray(P, dtype=np.float64)
    if P.ndim != 2:
        raise ValueError("soft predictions must be a num_nodes x k matrix")
    if num_nodes is not None and P.shape[0] != num_nodes:
        raise ValueError("soft predictions do not match the node count")
    if np.any(P < 0) or np.any(np.abs(P.sum(axis=1) - 1.0) > tol):
        raise ValueError("soft predictions must be row-stochastic")
    return P


# ---------------------------------------------------------------------------
# edge-level estimation
# ---------------------------------------------------------------------------

def estimate_sigma_nu(src: LabeledGraph, src_preds, tgt: LabeledGraph, tgt_preds):
    """Sigma-hat (k^2 x k^2; column = true type) and nu-hat (k^2)."""
    k = src.num_classes
    Ps = check_soft_predictions(src_preds, src.num_nodes)
    Pt = check_soft_predictions(tgt_preds, tgt.num_nodes)
    if src.num_edges == 0 or tgt.num_edges == 0:
        raise EstimationError("no edges for pairwise estimation")
    if not np.all(src.labeled):
        raise ValueError("source graph must be fully labeled")
    u, v = src.directed
    y = src.labels
    types = y[u] * k + y[v]
    sigma = kernels.pair_accumulate(u, v, types, Ps, k * k) / u.shape[0]
    ut, vt = tgt.directed
    nu = kernels.pair_accumulate(ut, vt, np.zeros(ut.shape[0], np.int64), Pt, 1)[:, 0] / ut.shape[0]
    return sigma, nu


# ---------------------------------------------------------------------------
# constrained least squares
# ---------------------------------------------------------------------------

def simplex_ls_objective(A, b, x, lam, reg_weight=None):
    r = A @ x - b
    d = x - 1.0
    if reg_weight is None:
        return float(r @ r + lam * (d @ d))
    return float(r @ r + lam * (reg_weight * d) @ d)


def solve_simplex_ls(A, b, c, lam=0.0, reg_weight=None):
    """min ||Ax - b||^2 + lam * sum_i r_i (x_i - 1)^2  s.t.  x >= 0, c.x = 1.

    Accelerated projected gradient onto the weighted simplex, followed by an
    exact solve of the KKT system on the support it identifies (kept only if
    it stays feasible and does not increase the objective).
    """
    A = np.asarray(A, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    m = c.shape[0]
    if np.any(~(c > 0)):
        raise ValueError("constraint weights c must be strictly positive")
    if abs(c.sum() - 1.0) > 1e-9:
        raise ValueError("constraint weights c must sum to 1")
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    r = np.ones(m) if reg_weight is None else np.asarray(reg_weight, dtype=np.float64)

    Q = 2.0 * (A.T @ A + lam * np.diag(r))
    q = 2.0 * (A.T @ b + lam * r)
    L = float(np.linalg.eigvalsh(Q)[-1])
    x0 = np.ones(m)
    if L <= 0.0:
        return x0
    x, _ = kernels.pgd_simplex_ls(Q, q, c, x0, L)
    best = simplex_ls_objective(A, b, x, lam, r)

    support = np.flatnonzero(x > 1e-12)
    if support.size:
        Qs = Q[np.ix_(support, support)]
        cs = c[support]
        kkt = np.zeros((support.size + 1, support.size + 1))
        kkt[:-1, :-1] = Qs
        kkt[:-1, -1] = cs
        kkt[-1, :-1] = cs
        rhs = np.concatenate([q[support], [1.0]])
        sol = np.linalg.lstsq(kkt, rhs, rcond=None)[0]
        xs = sol[:-1]
        if np.all(xs >= 0) and abs(cs @ xs - 1.0) <= 1e-12:
            cand = np.zeros(m)
            cand[support] = xs
            val = simplex_ls_objective(A, b, cand, lam, r)
            if val <= best + 1e-15 * max(1.0, abs(best)):
                x, best = cand, val
    x = np.maximum(x, 0.0)
    return x


# ---------------------------------------------------------------------------
# w, alpha, gamma
# ---------------------------------------------------------------------------

def _unordered_pairs(k):
    return [(i, j) for i in range(k) for j in range(i, k)]


def solve_w(sigma_hat, nu_hat, src_edge_type_dist, lambda_w=0.0, symmetric=True):
    """Edge-type ratio w (k x k) from Sigma-hat w = nu-hat on the constraint set.

    Source edge types with zero mass are excluded from the solve and set to 1.
    """
    P = np.asarray(src_edge_type_dist, dtype=np.float64)
    k = P.shape[0]
    sigma_hat = np.asarray(sigma_hat, dtype=np.float64)
    nu_hat = np.asarray(nu_hat, dtype=np.float64)
    c_full = P.ravel()

    if symmetric:
        pairs = [(i, j) for i, j in _unordered_pairs(k) if P[i, j] + P[j, i] > 0]
        expand = np.zeros((k * k, len(pairs)))
        for col, (i, j) in enumerate(pairs):
            expand[i * k + j, col] = 1.0
            expand[j * k + i, col] = 1.0
        reg = expand.sum(axis=0)
    else:
        cols = np.flatnonzero(c_full > 0)
        expand = np.zeros((k * k, cols.size))
        expand[cols, np.arange(cols.size)] = 1.0
        reg = np.ones(cols.size)
    if expand.shape[1] == 0:
        raise EstimationError("source graph has no edge types")
    A = sigma_hat @ expand
    c = expand.T @ c_full
    c = c / c.sum()

    unexplained = np.all(A == 0.0, axis=1) & (nu_hat > 1e-12)
    if np.any(unexplained):
        t = int(np.flatnonzero(unexplained)[0])
        raise UnsupportedEdgeType(f"unsupported edge type ({t // k}, {t % k}): target mass with no source support")

    z = solve_simplex_ls(A, nu_hat, c, lambda_w, reg)
    w = np.ones(k * k)
    covered = expand.sum(axis=1) > 0
    w[covered] = (expand @ z)[covered]
    return w.reshape(k, k)


def compute_alpha(w, src_edge_type_dist):
    """alpha_i = sum_j w_ij P_S(i, j | e) / P_S(i | e); NaN where P_S(i | e) = 0."""
    w = np.asarray(w, dtype=np.float64)
    P = np.asarray(src_edge_type_dist, dtype=np.float64)
    endpoint = P.sum(axis=1)
    alpha = np.full(P.shape[0], np.nan)
    ok = endpoint > 0
    alpha[ok] = (w * P).sum(axis=1)[ok] / endpoint[ok]
    return alpha


def alpha_matrix(src_edge_type_dist):
    """K with alpha = K @ w.ravel()."""
    P = np.asarray(src_edge_type_dist, dtype=np.float64)
    k = P.shape[0]
    endpoint = P.sum(axis=1)
    K = np.zeros((k, k * k))
    for i in range(k):
        if endpoint[i] > 0:
            K[i, i * k:(i + 1) * k] = P[i] / endpoint[i]
    return K


def smooth_w(w, src_edge_type_dist, delta):
    """w' = (w P + delta) / (P + delta); zero-mass types keep w when delta = 0."""
    w = np.asarray(w, dtype=np.float64)
    P = np.asarray(src_edge_type_dist, dtype=np.float64)
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    if delta == 0:
        return w.copy()
    return (w * P + delta) / (P + delta)


def compute_gamma(w, src_edge_type_dist, delta=0.0, alpha=None):
    """gamma = diag(alpha')^-1 w' with w' the delta-smoothed w.

    alpha' is recomputed from w'; a supplied ``alpha`` is used only when
    delta is 0. Rows of classes without source endpoint mass are set to 1.
    """
    P = np.asarray(src_edge_type_dist, dtype=np.float64)
    w_s = smooth_w(w, P, delta)
    if alpha is None or delta != 0:
        alpha = compute_alpha(w_s, P)
    alpha = np.asarray(alpha, dtype=np.float64)
    k = P.shape[0]
    gamma = np.ones((k, k))
    for i in range(k):
        if np.isnan(alpha[i]):
            continue
        if alpha[i] <= 0:
            raise DegenerateEndpointClass(f"degenerate endpoint class {i}: alpha = {alpha[i]}")
        gamma[i] = w_s[i] / alpha[i]
    return gamma


# ---------------------------------------------------------------------------
# label shift
# ---------------------------------------------------------------------------

def estimate_confusion_mu(src_labels, src_preds, tgt_preds, k=None):
    """C-hat[i, i'] = mean over source nodes of pred[i] * [y = i'];
    mu-hat[i] = mean over target nodes of pred[i]."""
    Ps = check_soft_predictions(src_preds)
    Pt = check_soft_predictions(tgt_preds)
    y = np.asarray(src_labels, dtype=np.int64)
    if Ps.shape[0] == 0 or Pt.shape[0] == 0:
        raise EstimationError("empty node set for label-shift estimation")
    if y.shape[0] != Ps.shape[0]:
        raise ValueError("labels and predictions differ in length")
    k = Ps.shape[1] if k is None else k
    onehot = np.zeros((y.shape[0], k))
    onehot[np.arange(y.shape[0]), y] = 1.0
    c_hat = Ps.T @ onehot / y.shape[0]
    mu_hat = Pt.mean(axis=0)
    return c_hat, mu_hat


def solve_beta(c_hat, mu_hat, src_label_dist, lambda_beta=0.0):
    pi = np.asarray(src_label_dist, dtype=np.float64)
    c_hat = np.asarray(c_hat, dtype=np.float64)
    mu_hat = np.asarray(mu_hat, dtype=np.float64)
    cols = np.flatnonzero(pi > 0)
    A = c_hat[:, cols]
    unexplained = np.all(A == 0.0, axis=1) & (mu_hat > 1e-12)
    if np.any(unexplained):
        i = int(np.flatnonzero(unexplained)[0])
        raise EstimationError(f"class {i} predicted in target but has no source support")
    z = solve_simplex_ls(A, mu_hat, pi[cols] / pi[cols].sum(), lambda_beta)
    beta = np.ones(pi.shape[0])
    beta[cols] = z
    return beta
