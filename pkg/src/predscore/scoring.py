"""Cross-validation and validation loss pipelines sharing fold-trained models.

``cross_validate`` fits one model per fold of tau and scores the held-out
fold. ``validate`` scores the folds of tau' with those *same* models. The
prediction score compares the two loss samples.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from . import _rng
from .data import Dataset, FoldAssignment, assign_folds
from .errors import BaselineRateError, DataError, NumericalError
from .losses import (
    SET_LOSSES,
    check_loss,
    ks_statistic,
    pointwise_losses,
    pr_curve,
    roc_curve,
    set_loss,
)
from .models import N_DRAWS, FittedModel, ModelSpec, fit_logistic, forecast_from_draws, with_bootstrap

CROSS_VALIDATION = "cross_validation"
VALIDATION = "validation"
RATE_TOLERANCE = 0.02


@dataclass(frozen=True, eq=False)
class LossSample:
    """Loss statistics from one side of the comparison.

    ``ids`` holds the fold number of each value (per_fold) or the scored
    row index (per_observation).
    """

    values: np.ndarray
    granularity: str
    loss_name: str
    side: str
    ids: np.ndarray

    def __post_init__(self):
        if not np.all(np.isfinite(self.values)):
            raise NumericalError(f"non-finite {self.loss_name} values on the {self.side} side")

    def __len__(self):
        return len(self.values)

    @property
    def mean(self):
        return float(np.mean(self.values))


@dataclass(frozen=True, eq=False)
class Curve:
    points: np.ndarray
    kind: str
    fold_id: int
    side: str


@dataclass(frozen=True, eq=False)
class PredictionScoreReport:
    cv: LossSample
    val: LossSample
    ks: float
    mean_difference: float
    curves: List[Curve]
    model_name: str
    loss_name: str
    fold_diagnostics: List[dict]
    h: str = "both"
    settings: dict = field(default_factory=dict)

    @property
    def score(self):
        """The headline score selected by ``h`` (KS unless h='mean_diff')."""
        return self.mean_difference if self.h == "mean_diff" else self.ks

    def to_dict(self):
        return {
            "model": self.model_name,
            "loss": self.loss_name,
            "h": self.h,
            "ks": self.ks,
            "mean_difference": self.mean_difference,
            "cv": _sample_dict(self.cv),
            "val": _sample_dict(self.val),
            "fold_diagnostics": self.fold_diagnostics,
            "settings": self.settings,
        }

    def to_json(self, indent=2):
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True)

    def curves_csv(self) -> str:
        """Long-format curve table: kind, side, fold, x, y."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["kind", "side", "fold", "x", "y"])
        for c in self.curves:
            for x, y in c.points:
                w.writerow([c.kind, c.side, c.fold_id, repr(float(x)), repr(float(y))])
        return buf.getvalue()

    def losses_csv(self) -> str:
        """Loss-sample table: side, fold_or_row, value."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["side", "fold_or_row", "value"])
        for sample in (self.cv, self.val):
            for i, v in zip(sample.ids, sample.values):
                w.writerow([sample.side, int(i), repr(float(v))])
        return buf.getvalue()


def _sample_dict(s: LossSample):
    return {
        "side": s.side,
        "granularity": s.granularity,
        "values": [float(v) for v in s.values],
        "ids": [int(i) for i in s.ids],
    }


def training_rows(tau: Dataset, folds: FoldAssignment, k: int, seed: int) -> np.ndarray:
    """Rows used to fit the model for fold ``k``.

    Partition scheme: every row outside fold k. Subsample scheme: an
    independent subsample of the rows outside fold k, of size
    (K - 1) * subset_size capped at N - subset_size, stratified when the
    folds are.
    """
    outside = np.setdiff1d(np.arange(tau.n), folds.folds[k], assume_unique=True)
    if folds.scheme == "partition":
        return outside
    size = min((folds.K - 1) * folds.subset_size, tau.n - folds.subset_size, len(outside))
    rng = _rng.rng_for(seed, _rng.TRAIN, k)
    if not folds.stratified:
        return np.sort(rng.choice(outside, size, replace=False))
    pos = outside[tau.y[outside] == 1]
    neg = outside[tau.y[outside] == 0]
    n_pos = min(int(math.floor(tau.rate * size + 0.5)), len(pos))
    n_neg = min(size - n_pos, len(neg))
    rows = np.concatenate([rng.choice(pos, n_pos, replace=False), rng.choice(neg, n_neg, replace=False)])
    return np.sort(rows)


def _map(fn, items, threads):
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(fn, items))
    return [fn(i) for i in items]


def _score_fold(model: FittedModel, data: Dataset, rows, loss, k, side):
    part = data.subset(rows)
    point = forecast_from_draws(model, part.columns(model.spec.covariates)).point
    try:
        if loss in SET_LOSSES:
            values = np.array([set_loss(loss, point, part.y)])
        else:
            values = pointwise_losses(point, part.y, loss)
        points = pr_curve(point, part.y) if loss == "pr_auc" else roc_curve(point, part.y)
    except DataError as exc:
        raise DataError(f"{side} fold {k}: {exc}") from None
    kind = "precision_recall" if loss == "pr_auc" else "roc"
    return values, Curve(points, kind, k, side)


def _assemble(parts, folds, loss, side):
    values = np.concatenate([p[0] for p in parts])
    if loss in SET_LOSSES:
        ids = np.arange(folds.K)
        granularity = "per_fold"
    else:
        ids = np.concatenate([np.asarray(f) for f in folds.folds])
        granularity = "per_observation"
    return LossSample(values, granularity, loss, side, ids), [p[1] for p in parts]


def fit_fold_models(
    tau: Dataset,
    spec: ModelSpec,
    folds: FoldAssignment,
    seed: int = 0,
    draws: int = N_DRAWS,
    threads: int = 1,
) -> List[FittedModel]:
    """Fit (and bootstrap) one model per fold on that fold's training rows."""
    if folds.n != tau.n:
        raise DataError("fold assignment does not belong to this dataset")

    def fit(k):
        train = tau.subset(training_rows(tau, folds, k, seed))
        if train.n_positive in (0, train.n):
            raise DataError(f"training set for fold {k} contains a single class")
        model = fit_logistic(train, spec)
        if not model.usable:
            raise NumericalError(f"fold {k} model has non-finite coefficients")
        if draws > 0:
            model = with_bootstrap(model, train, draws, _rng.child_seed(seed, _rng.BOOTSTRAP, k))
        return model

    return _map(fit, range(folds.K), threads)


def cross_validate(
    tau: Dataset,
    spec: ModelSpec,
    folds: FoldAssignment,
    loss: str = "roc_auc",
    seed: int = 0,
    draws: int = N_DRAWS,
    threads: int = 1,
):
    """Score each held-out fold of tau with the model trained without it.

    Returns ``(loss_sample, fold_models, curves)``; the fold models are the
    ones :func:`validate` must reuse.
    """
    check_loss(loss)
    models = fit_fold_models(tau, spec, folds, seed, draws, threads)
    parts = _map(
        lambda k: _score_fold(models[k], tau, folds.folds[k], loss, k, CROSS_VALIDATION),
        range(folds.K),
        threads,
    )
    sample, curves = _assemble(parts, folds, loss, CROSS_VALIDATION)
    return sample, models, curves


def validate(
    tau_prime: Dataset,
    fold_models: List[FittedModel],
    folds_prime: FoldAssignment,
    loss: str = "roc_auc",
    threads: int = 1,
):
    """Score fold k of tau' with fold model k from cross-validation on tau."""
    check_loss(loss)
    if len(fold_models) != folds_prime.K:
        raise DataError(f"{len(fold_models)} fold models but {folds_prime.K} validation folds")
    if folds_prime.n != tau_prime.n:
        raise DataError("validation fold assignment does not belong to tau'")
    for k, m in enumerate(fold_models):
        if not m.usable:
            raise NumericalError(f"fold model {k} is unusable")
    parts = _map(
        lambda k: _score_fold(fold_models[k], tau_prime, folds_prime.folds[k], loss, k, VALIDATION),
        range(folds_prime.K),
        threads,
    )
    return _assemble(parts, folds_prime, loss, VALIDATION)


def check_rates(tau: Dataset, tau_prime: Dataset, loss: str, tolerance: float = RATE_TOLERANCE):
    if loss == "pr_auc" and abs(tau.rate - tau_prime.rate) > tolerance:
        raise BaselineRateError(
            f"baseline rates differ ({tau.rate:.3f} vs {tau_prime.rate:.3f}); precision-recall "
            f"AUC is confounded by baseline rate. Rebalance tau' to tau's rate first "
            f"(predscore.data.rebalance, or --rebalance on the command line)."
        )


def diagnostics(models):
    return [
        {
            "fold": k,
            "converged": bool(m.converged),
            "separated": bool(m.separated),
            "iterations": int(m.iterations),
            "train_rows": int(m.train_rows),
            "bootstrap_redraws": int(m.draw_retries),
        }
        for k, m in enumerate(models)
    ]


def fold_seeds(seed: int, share_fold_seed: bool = False):
    """Seeds for (kappa, kappa', training/bootstrap) derived from ``seed``."""
    kappa = _rng.child_seed(seed, _rng.FOLDS)
    kappa_prime = kappa if share_fold_seed else _rng.child_seed(seed, _rng.FOLDS_PRIME)
    return kappa, kappa_prime, _rng.child_seed(seed, _rng.TRAIN)


def compare(cv: LossSample, val: LossSample):
    """Return (ks, mean difference) between the validation and CV samples."""
    return ks_statistic(cv.values, val.values), val.mean - cv.mean


def prediction_score(
    tau: Dataset,
    tau_prime: Dataset,
    spec: ModelSpec,
    K: int = 5,
    scheme: str = "partition",
    subset_size: Optional[int] = None,
    loss: str = "roc_auc",
    h: str = "both",
    seed: int = 0,
    stratified: bool = True,
    draws: int = N_DRAWS,
    share_fold_seed: bool = False,
    threads: int = 1,
    rate_tolerance: float = RATE_TOLERANCE,
) -> PredictionScoreReport:
    """Run the whole cross-validation / validation comparison for one model."""
    check_loss(loss)
    if h not in ("ks", "mean_diff", "both"):
        raise DataError(f"unknown score function {h!r}")
    check_rates(tau, tau_prime, loss, rate_tolerance)
    kappa_seed, kappa_prime_seed, train_seed = fold_seeds(seed, share_fold_seed)
    folds = assign_folds(tau, K, scheme, subset_size, stratified, kappa_seed)
    folds_prime = assign_folds(tau_prime, K, scheme, subset_size, stratified, kappa_prime_seed)
    cv, models, cv_curves = cross_validate(tau, spec, folds, loss, train_seed, draws, threads)
    val, val_curves = validate(tau_prime, models, folds_prime, loss, threads)
    return build_report(cv, val, cv_curves + val_curves, spec, loss, models, h, {
        "K": K,
        "scheme": scheme,
        "subset_size": subset_size,
        "stratified": stratified,
        "draws": draws,
        "seed": seed,
        "share_fold_seed": share_fold_seed,
        "rate_tau": tau.rate,
        "rate_tau_prime": tau_prime.rate,
        "n_tau": tau.n,
        "n_tau_prime": tau_prime.n,
    })


def build_report(cv, val, curves, spec, loss, models, h="both", settings=None):
    ks, diff = compare(cv, val)
    return PredictionScoreReport(
        cv=cv,
        val=val,
        ks=ks,
        mean_difference=diff,
        curves=curves,
        model_name=spec.name,
        loss_name=loss,
        fold_diagnostics=diagnostics(models),
        h=h,
        settings=dict(settings or {}),
    )


def symmetrized_score(report_fwd: PredictionScoreReport, report_rev: PredictionScoreReport, combine="mean") -> float:
    """Combine the KS scores of a comparison and its role-swapped twin."""
    if report_fwd.loss_name != report_rev.loss_name or report_fwd.model_name != report_rev.model_name:
        raise DataError("symmetrizing needs reports for the same model and loss")
    if combine == "mean":
        return (report_fwd.ks + report_rev.ks) / 2.0
    if combine == "max":
        return max(report_fwd.ks, report_rev.ks)
    raise DataError(f"unknown combine rule {combine!r}")
