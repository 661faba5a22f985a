"""Hot numeric kernels with a numba path and a vectorized numpy path.

The numba path is used when numba imports cleanly and ``PAIRALIGN_NUMBA``
is not set to ``0``. Both paths compute the same quantities; results agree
to floating point reassociation (~1e-12 relative), not bit-for-bit.
"""

import os

import numpy as np

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False

USE_NUMBA = _HAVE_NUMBA and os.environ.get("PAIRALIGN_NUMBA", "1") != "0"


# ---------------------------------------------------------------------------
# segment_sum: out[r] = sum_{e in row r} coef[e] * X[cols[e]]
# ---------------------------------------------------------------------------

def _segment_sum_np(indptr, cols, coef, X):
    n_rows = indptr.shape[0] - 1
    out = np.zeros((n_rows, X.shape[1]), dtype=np.float64)
    if cols.shape[0] == 0:
        return out
    vals = coef[:, None] * X[cols]
    starts = indptr[:-1]
    nonempty = indptr[1:] > starts
    out[nonempty] = np.add.reduceat(vals, starts[nonempty], axis=0)
    return out


def _segment_sum_py(indptr, cols, coef, X):
    n_rows = indptr.shape[0] - 1
    d = X.shape[1]
    out = np.zeros((n_rows, d), dtype=np.float64)
    for r in range(n_rows):
        for e in range(indptr[r], indptr[r + 1]):
            c = coef[e]
            src = cols[e]
            for f in range(d):
                out[r, f] += c * X[src, f]
    return out


# ---------------------------------------------------------------------------
# pair_accumulate: Sigma-hat style accumulation over directed edges
#   out[i*k + j, t_e] += P[u_e, i] * P[v_e, j]
# ---------------------------------------------------------------------------

def _pair_accumulate_np(u, v, types, P, n_types):
    k = P.shape[1]
    if u.shape[0] == 0:
        return np.zeros((k * k, n_types))
    outer = (P[u][:, :, None] * P[v][:, None, :]).reshape(u.shape[0], k * k)
    onehot = np.zeros((u.shape[0], n_types))
    onehot[np.arange(u.shape[0]), types] = 1.0
    return outer.T @ onehot


def _pair_accumulate_py(u, v, types, P, n_types):
    k = P.shape[1]
    out = np.zeros((k * k, n_types))
    for e in range(u.shape[0]):
        a = u[e]
        b = v[e]
        t = types[e]
        for i in range(k):
            pa = P[a, i]
            for j in range(k):
                out[i * k + j, t] += pa * P[b, j]
    return out


# ---------------------------------------------------------------------------
# weighted simplex projection and the projected-gradient least squares loop
# ---------------------------------------------------------------------------

def _project_weighted_simplex_py(v, c, tol, max_iter):
    """Euclidean projection of ``v`` onto {x >= 0, c.x = 1} for c > 0.

    Bisection on the multiplier tau of x_i = max(0, v_i - tau*c_i), followed
    by a closed-form tau on the identified support so that c.x = 1 holds to
    rounding.
    """
    m = v.shape[0]
    # g(tau) = sum c_i max(0, v_i - tau c_i) is nonincreasing in tau.
    lo = np.inf
    hi = -np.inf
    for i in range(m):
        r = v[i] / c[i]
        if r < lo:
            lo = r
        if r > hi:
            hi = r
    csq = 0.0
    for i in range(m):
        csq += c[i] * c[i]
    lo = lo - 1.0 / csq  # g(lo) >= 1
    x = np.empty(m)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        g = 0.0
        for i in range(m):
            t = v[i] - mid * c[i]
            if t > 0.0:
                g += c[i] * t
        if abs(g - 1.0) <= tol:
            lo = mid
            hi = mid
            break
        if g > 1.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * max(1.0, abs(mid)):
            break
    tau = 0.5 * (lo + hi)
    num = 0.0
    den = 0.0
    for i in range(m):
        if v[i] - tau * c[i] > 0.0:
            num += c[i] * v[i]
            den += c[i] * c[i]
    if den > 0.0:
        tau = (num - 1.0) / den
    for i in range(m):
        t = v[i] - tau * c[i]
        x[i] = t if t > 0.0 else 0.0
    return x


def _pgd_simplex_ls_py(Q, q, c, x0, lipschitz, max_iter, tol, proj_tol, proj_iter):
    """Accelerated projected gradient for 0.5 x'Qx - q'x on {x>=0, c.x=1}.

    Nesterov momentum with function-value restart. Stops when the projected
    step changes x by less than ``tol`` in the max norm.
    """
    m = x0.shape[0]
    step = 1.0 / lipschitz
    x = _project_weighted_simplex(x0, c, proj_tol, proj_iter)
    y = x.copy()
    t = 1.0
    fx = 0.5 * (x @ (Q @ x)) - q @ x
    n_iter = 0
    for it in range(max_iter):
        n_iter = it + 1
        grad = Q @ y - q
        x_new = _project_weighted_simplex(y - step * grad, c, proj_tol, proj_iter)
        f_new = 0.5 * (x_new @ (Q @ x_new)) - q @ x_new
        diff = 0.0
        for i in range(m):
            d = abs(x_new[i] - x[i])
            if d > diff:
                diff = d
        if f_new > fx:
            # restart momentum from the last accepted point
            t = 1.0
            y = x.copy()
            continue
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        y = x_new + ((t - 1.0) / t_new) * (x_new - x)
        x = x_new
        fx = f_new
        t = t_new
        if diff < tol:
            break
    return x, n_iter


def _project_weighted_simplex_np(v, c, tol, max_iter):
    """Sort-based exact projection; ``tol``/``max_iter`` unused."""
    r = v / c
    order = np.argsort(-r)
    cv = np.cumsum(c[order] * v[order])
    cc = np.cumsum(c[order] ** 2)
    tau = (cv - 1.0) / cc
    # largest support whose multiplier stays below its smallest breakpoint
    k = np.flatnonzero(tau < r[order])[-1]
    return np.maximum(v - tau[k] * c, 0.0)


def _pgd_simplex_ls_np(Q, q, c, x0, lipschitz, max_iter, tol, proj_tol, proj_iter):
    step = 1.0 / lipschitz
    x = _project_weighted_simplex_np(x0, c, proj_tol, proj_iter)
    y = x.copy()
    t = 1.0
    fx = 0.5 * (x @ (Q @ x)) - q @ x
    n_iter = 0
    for it in range(max_iter):
        n_iter = it + 1
        x_new = _project_weighted_simplex_np(y - step * (Q @ y - q), c, proj_tol, proj_iter)
        f_new = 0.5 * (x_new @ (Q @ x_new)) - q @ x_new
        if f_new > fx:
            t = 1.0
            y = x.copy()
            continue
        diff = np.max(np.abs(x_new - x))
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        y = x_new + ((t - 1.0) / t_new) * (x_new - x)
        x, fx, t = x_new, f_new, t_new
        if diff < tol:
            break
    return x, n_iter


if USE_NUMBA:
    _segment_sum = njit(cache=True)(_segment_sum_py)
    _pair_accumulate = njit(cache=True)(_pair_accumulate_py)
    _project_weighted_simplex = njit(cache=True)(_project_weighted_simplex_py)
    _pgd_simplex_ls = njit(cache=True)(_pgd_simplex_ls_py)
else:
    _segment_sum = _segment_sum_np
    _pair_accumulate = _pair_accumulate_np
    _project_weighted_simplex = _project_weighted_simplex_np
    _pgd_simplex_ls = _pgd_simplex_ls_np


def segment_sum(indptr, cols, coef, X):
    """Row-segmented weighted gather-sum over a CSR pattern."""
    return _segment_sum(
        np.ascontiguousarray(indptr, dtype=np.int64),
        np.ascontiguousarray(cols, dtype=np.int64),
        np.ascontiguousarray(coef, dtype=np.float64),
        np.ascontiguousarray(X, dtype=np.float64),
    )


def pair_accumulate(u, v, types, P, n_types):
    """Sum of outer products P[u] (x) P[v], bucketed by integer edge type."""
    return _pair_accumulate(
        np.ascontiguousarray(u, dtype=np.int64),
        np.ascontiguousarray(v, dtype=np.int64),
        np.ascontiguousarray(types, dtype=np.int64),
        np.ascontiguousarray(P, dtype=np.float64),
        int(n_types),
    )


def project_weighted_simplex(v, c, tol=1e-12, max_iter=200):
    return _project_weighted_simplex(
        np.ascontiguousarray(v, dtype=np.float64),
        np.ascontiguousarray(c, dtype=np.float64),
        float(tol),
        int(max_iter),
    )


def pgd_simplex_ls(Q, q, c, x0, lipschitz, max_iter=20000, tol=1e-13,
                   proj_tol=1e-12, proj_iter=200):
    return _pgd_simplex_ls(
        np.ascontiguousarray(Q, dtype=np.float64),
        np.ascontiguousarray(q, dtype=np.float64),
        np.ascontiguousarray(c, dtype=np.float64),
        np.ascontiguousarray(x0, dtype=np.float64),
        float(lipschitz),
        int(max_iter),
        float(tol),
        float(proj_tol),
        int(proj_iter),
    )


def backend():
    return "numba" if USE_NUMBA else "numpy"
