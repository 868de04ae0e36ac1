"""Pure numpy implementations of the numerical kernels.

Every function here has a twin in the compiled ``_core`` extension with the
same signature and semantics; :mod:`predscore._backend` picks one at import.
"""

import numpy as np

NAME = "python"


def softplus(eta):
    return np.maximum(eta, 0.0) + np.log1p(np.exp(-np.abs(eta)))


def expit(eta):
    out = np.empty_like(eta)
    pos = eta >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-eta[pos]))
    e = np.exp(eta[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def auc_from_order(scores, labels, order):
    """ROC AUC from an ascending sort order, ties counted as one half.

    Works on integer pair counts so the result equals brute-force pair
    counting exactly.
    """
    s = scores[order]
    lab = labels[order]
    n = s.shape[0]
    # block boundaries of tied scores
    starts = np.flatnonzero(np.r_[True, s[1:] != s[:-1]])
    pos_cum = np.r_[0, np.cumsum(lab, dtype=np.int64)]
    ends = np.r_[starts[1:], n]
    pos_block = pos_cum[ends] - pos_cum[starts]
    neg_block = (ends - starts) - pos_block
    neg_below = np.r_[0, np.cumsum(neg_block)[:-1]]
    n_pos = int(pos_cum[-1])
    n_neg = n - n_pos
    twice = int(np.sum(2 * pos_block * neg_below + pos_block * neg_block))
    return twice / (2.0 * n_pos * n_neg)


def pr_auc_from_order(scores, labels, order):
    """Step-wise area under the precision-recall curve.

    ``order`` sorts scores ascending; the sweep walks it from the top and
    treats each block of tied scores as a single operating point.
    """
    s = scores[order][::-1]
    lab = labels[order][::-1].astype(np.int64)
    n = s.shape[0]
    ends = np.r_[np.flatnonzero(s[1:] != s[:-1]) + 1, n]
    tp = np.cumsum(lab)[ends - 1]
    fp = ends - tp
    n_pos = tp[-1]
    area = 0.0
    prev_tp = 0
    for k in range(ends.shape[0]):
        if tp[k] != prev_tp:
            area += (tp[k] - prev_tp) / n_pos * (tp[k] / (tp[k] + fp[k]))
            prev_tp = tp[k]
    return float(area)


def ks_sorted(a, b):
    """Two-sample KS distance for ascending-sorted inputs."""
    pooled = np.concatenate([a, b])
    ia = np.searchsorted(a, pooled, side="right")
    ib = np.searchsorted(b, pooled, side="right")
    return float(np.max(np.abs(ia / a.shape[0] - ib / b.shape[0])))


def _centered(x):
    d = np.abs(x[:, None] - x[None, :])
    row = d.mean(axis=1)
    return d - row[:, None] - row[None, :] + row.mean()


def dcov_sq(x, y):
    """Squared sample distance covariance (V-statistic, double centering)."""
    return float(np.mean(_centered(x) * _centered(y)))


def loglik(X, y, w, beta):
    eta = X @ beta
    return float(np.sum(w * (y * eta - softplus(eta))))


def irls(X, y, w, beta0, max_iter, tol, cap):
    """Weighted Newton-Raphson for the logistic log-likelihood.

    Returns ``(beta, information, converged, separated, iterations, trace)``
    where ``information`` is X'WX at the returned coefficients and ``trace``
    holds the log-likelihood before the first step and after every step.
    Convergence is declared when the max-norm of the gradient divided by the
    total weight falls to ``tol``.
    """
    beta = np.array(beta0, dtype=np.float64, copy=True)
    total = float(np.sum(w))
    eta = X @ beta
    ll = float(np.sum(w * (y * eta - softplus(eta))))
    trace = [ll]
    converged = False
    separated = False
    iterations = 0
    while True:
        p = expit(eta)
        grad = X.T @ (w * (y - p))
        info = (X * (w * p * (1.0 - p))[:, None]).T @ X
        if np.max(np.abs(grad)) / total <= tol:
            converged = True
            break
        if iterations >= max_iter:
            break
        try:
            step = np.linalg.solve(info, grad)
        except np.linalg.LinAlgError:
            break
        scale = 1.0
        moved = False
        for _ in range(31):
            cand = beta + scale * step
            cand_eta = X @ cand
            cand_ll = float(np.sum(w * (y * cand_eta - softplus(cand_eta))))
            if cand_ll >= ll:
                moved = True
                break
            scale *= 0.5
        if not moved:
            break
        beta, eta, ll = cand, cand_eta, cand_ll
        iterations += 1
        trace.append(ll)
        if np.sqrt(np.sum(beta * beta)) > cap:
            separated = True
            p = expit(eta)
            info = (X * (w * p * (1.0 - p))[:, None]).T @ X
            break
    return beta, info, converged, separated, iterations, np.array(trace)
