"""Loss statistics for binary predictions and the two-sample KS distance.

Set-level losses (ROC and precision-recall AUC) summarise a whole scored
fold; pointwise losses give one value per observation.
"""

import warnings

import numpy as np

from ._backend import kernels
from .errors import DataError

SET_LOSSES = ("roc_auc", "pr_auc")
POINTWISE_LOSSES = ("log_score", "brier", "quadratic")
LOSSES = SET_LOSSES + POINTWISE_LOSSES
CLAMP = 1e-12


class ClampWarning(RuntimeWarning):
    """Probabilities at exactly 0 or 1 were clamped before taking logs."""


def check_loss(name):
    if name not in LOSSES:
        raise DataError(f"unknown loss {name!r}; choose from {', '.join(LOSSES)}")
    return name


def _prepare(scores, labels):
    s = np.ascontiguousarray(scores, dtype=np.float64)
    lab = np.asarray(labels)
    if s.ndim != 1 or s.shape != lab.shape:
        raise DataError("scores and labels must be 1-d vectors of equal length")
    if not np.all((lab == 0) | (lab == 1)):
        raise DataError("labels must be 0 or 1")
    if not np.all(np.isfinite(s)):
        raise DataError("scores must be finite")
    return s, np.ascontiguousarray(lab, dtype=np.int8)


def roc_auc(scores, labels) -> float:
    """Probability that a random positive outscores a random negative.

    Ties count one half (the Mann-Whitney form with average ranks).
    """
    s, lab = _prepare(scores, labels)
    n_pos = int(lab.sum())
    if s.shape[0] < 2 or n_pos == 0 or n_pos == s.shape[0]:
        raise DataError("ROC AUC needs at least one positive and one negative label")
    return kernels.auc_from_order(s, lab, np.argsort(s, kind="stable"))


def pr_auc(scores, labels) -> float:
    """Area under the step precision-recall curve (average precision).

    Tied scores enter as one operating point; no interpolation between
    points.
    """
    s, lab = _prepare(scores, labels)
    if lab.sum() == 0:
        raise DataError("precision-recall AUC needs at least one positive label")
    return kernels.pr_auc_from_order(s, lab, np.argsort(s, kind="stable"))


def _blocks_descending(scores, labels):
    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    lab = labels[order].astype(np.int64)
    ends = np.r_[np.flatnonzero(s[1:] != s[:-1]) + 1, s.shape[0]]
    tp = np.cumsum(lab)[ends - 1]
    fp = ends - tp
    return tp, fp


def roc_curve(scores, labels):
    """ROC operating points (false positive rate, true positive rate)."""
    s, lab = _prepare(scores, labels)
    tp, fp = _blocks_descending(s, lab)
    if tp[-1] == 0 or fp[-1] == 0:
        raise DataError("ROC curve needs both classes")
    fpr = np.r_[0.0, fp / fp[-1]]
    tpr = np.r_[0.0, tp / tp[-1]]
    return np.column_stack([fpr, tpr])


def pr_curve(scores, labels):
    """Precision-recall operating points (recall, precision), recall > 0."""
    s, lab = _prepare(scores, labels)
    tp, fp = _blocks_descending(s, lab)
    if tp[-1] == 0:
        raise DataError("precision-recall curve needs a positive label")
    keep = tp > 0
    return np.column_stack([tp[keep] / tp[-1], tp[keep] / (tp[keep] + fp[keep])])


def pointwise_losses(probs, labels, kind) -> np.ndarray:
    """Per-observation log score (negative log probability) or Brier loss."""
    p, lab = _prepare(probs, labels)
    if np.any((p < 0) | (p > 1)):
        raise DataError("probabilities must lie in [0, 1]")
    y = lab.astype(np.float64)
    if kind in ("brier", "quadratic"):
        return (y - p) ** 2
    if kind == "log_score":
        if np.any((p <= 0) | (p >= 1)):
            warnings.warn("probabilities of exactly 0 or 1 clamped for the log score", ClampWarning, stacklevel=2)
            p = np.clip(p, CLAMP, 1.0 - CLAMP)
        return -np.where(y == 1, np.log(p), np.log1p(-p))
    raise DataError(f"unknown pointwise loss {kind!r}")


def ks_statistic(a, b) -> float:
    """Largest gap between the two right-continuous empirical CDFs."""
    a = np.sort(np.asarray(a, dtype=np.float64).ravel())
    b = np.sort(np.asarray(b, dtype=np.float64).ravel())
    if a.size == 0 or b.size == 0:
        raise DataError("KS statistic needs two nonempty samples")
    return kernels.ks_sorted(a, b)


def set_loss(name, scores, labels) -> float:
    return roc_auc(scores, labels) if name == "roc_auc" else pr_auc(scores, labels)
