"""Accuracy study: do prediction scores track the true distance between DGMs?

Scores for every ordered pair of settings in the bot-fraction grid are
compared with the true distance |pi_i - pi_j| through the sample distance
covariance and distance correlation.
"""

from __future__ import annotations

import csv
import io
import json
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

import numpy as np

from . import _rng
from ._backend import kernels
from .data import RebalanceSpec, assign_folds, lagged_features, rebalance
from .errors import DataError
from .models import N_DRAWS, ModelSpec
from .scoring import build_report, check_loss, cross_validate, fold_seeds, validate
from .simulation import SimConfig, simulate_grid


class ConstantInputWarning(RuntimeWarning):
    """Distance correlation requested for an input with zero distance variance."""


def _pair(x, y):
    x = np.ascontiguousarray(x, dtype=np.float64).ravel()
    y = np.ascontiguousarray(y, dtype=np.float64).ravel()
    if x.shape != y.shape:
        raise DataError(f"paired vectors differ in length ({x.size} vs {y.size})")
    if x.size < 2:
        raise DataError("distance covariance needs at least two pairs")
    return x, y


def distance_covariance(x, y) -> float:
    """Sample distance covariance (double-centred distance matrices)."""
    x, y = _pair(x, y)
    return float(np.sqrt(max(kernels.dcov_sq(x, y), 0.0)))


def dcor_stats(x, y):
    """Return ``(dcov, dcor, degenerate)``; dcor is 0 when an input is constant."""
    x, y = _pair(x, y)
    dxy = np.sqrt(max(kernels.dcov_sq(x, y), 0.0))
    dxx = np.sqrt(max(kernels.dcov_sq(x, x), 0.0))
    dyy = np.sqrt(max(kernels.dcov_sq(y, y), 0.0))
    if dxx <= 0.0 or dyy <= 0.0:
        return float(dxy), 0.0, True
    return float(dxy), float(min(1.0, dxy / np.sqrt(dxx * dyy))), False


def distance_correlation(x, y) -> float:
    dcov, dcor, degenerate = dcor_stats(x, y)
    if degenerate:
        warnings.warn("constant input: distance correlation set to 0", ConstantInputWarning, stacklevel=2)
    return dcor


def true_distances(grid) -> np.ndarray:
    """|pi_i - pi_j| over ordered pairs, row-major (i outer)."""
    g = np.asarray(grid, dtype=np.float64)
    return np.abs(g[:, None] - g[None, :]).ravel()


@dataclass(frozen=True, eq=False)
class PairwiseScoreMatrix:
    """Entry (i, j): score with tau from grid[i] and tau' from grid[j]."""

    grid: tuple
    scores: np.ndarray
    model_name: str
    loss_name: str
    reports: Optional[dict] = field(default=None, repr=False)

    def flat(self):
        return self.scores.ravel()

    def asymmetry(self) -> np.ndarray:
        return np.abs(self.scores - self.scores.T)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["pi_row", "pi_col", "score"])
        for i, a in enumerate(self.grid):
            for j, b in enumerate(self.grid):
                w.writerow([repr(float(a)), repr(float(b)), repr(float(self.scores[i, j]))])
        return buf.getvalue()


def pairwise_scores(
    panels: Dict[float, object],
    spec: ModelSpec,
    loss: str = "roc_auc",
    K: int = 10,
    subset_size: int = 500,
    seed: int = 0,
    panels_prime: Optional[Dict[float, object]] = None,
    scheme: str = "subsample",
    draws: int = N_DRAWS,
    threads: int = 1,
    keep_reports: bool = False,
) -> PairwiseScoreMatrix:
    """KS prediction scores for every ordered pair of settings.

    tau comes from ``panels`` and tau' from ``panels_prime`` (an independent
    simulation of the same grid, so diagonal cells compare two draws of one
    DGM). Without ``panels_prime`` tau' is taken from ``panels`` itself.
    Fold models for row i are fitted once and reused across the row, exactly
    as one call of ``prediction_score`` per cell with these derived seeds.
    For precision-recall AUC each tau' is rebalanced to tau's baseline rate.
    """
    check_loss(loss)
    if len(panels) < 2:
        raise DataError("pairwise scoring needs at least two settings")
    grid = tuple(panels)
    panels_prime = panels if panels_prime is None else panels_prime
    if tuple(panels_prime) != grid:
        raise DataError("panels and panels_prime must cover the same grid")
    taus = [lagged_features(panels[pi]) for pi in grid]
    primes = [lagged_features(panels_prime[pi]) for pi in grid]
    n = len(grid)

    def row(i):
        row_seed = _rng.child_seed(seed, _rng.ROW, i)
        kappa_seed, _, train_seed = fold_seeds(row_seed)
        tau = taus[i]
        folds = assign_folds(tau, K, scheme, subset_size, True, kappa_seed)
        cv, models, cv_curves = cross_validate(tau, spec, folds, loss, train_seed, draws)
        out, reports = [], {}
        for j in range(n):
            cell_seed = _rng.child_seed(row_seed, _rng.CELL, j)
            prime = primes[j]
            if loss == "pr_auc":
                prime = rebalance(prime, RebalanceSpec(tau.rate, prime.n, cell_seed))
            folds_prime = assign_folds(prime, K, scheme, subset_size, True, cell_seed)
            val, val_curves = validate(prime, models, folds_prime, loss)
            report = build_report(cv, val, cv_curves + val_curves, spec, loss, models, "ks")
            out.append(report.ks)
            if keep_reports:
                reports[(grid[i], grid[j])] = report
        return out, reports

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            rows = list(pool.map(row, range(n)))
    else:
        rows = [row(i) for i in range(n)]
    scores = np.array([r[0] for r in rows])
    reports = {}
    for r in rows:
        reports.update(r[1])
    return PairwiseScoreMatrix(grid, scores, spec.name, loss, reports if keep_reports else None)


@dataclass(frozen=True, eq=False)
class ReplicationReport:
    reps: int
    per_model_dcor: Dict[str, np.ndarray]
    per_model_dcov: Dict[str, np.ndarray]
    seeds: np.ndarray
    grid: tuple = ()
    loss_name: str = "roc_auc"
    per_model_scores: Dict[str, np.ndarray] = field(default_factory=dict, repr=False)
    degenerate: Dict[str, np.ndarray] = field(default_factory=dict, repr=False)
    settings: dict = field(default_factory=dict)

    def median_dcor(self, model):
        return float(np.median(self.per_model_dcor[model]))

    def to_dict(self):
        return {
            "reps": self.reps,
            "grid": list(self.grid),
            "loss": self.loss_name,
            "seeds": [int(s) for s in self.seeds],
            "true_distance": [float(v) for v in true_distances(self.grid)],
            "models": {
                m: {
                    "dcor": [float(v) for v in self.per_model_dcor[m]],
                    "dcov": [float(v) for v in self.per_model_dcov[m]],
                    "degenerate": [bool(v) for v in self.degenerate.get(m, [])],
                    "scores": [[float(v) for v in row] for row in self.per_model_scores.get(m, [])],
                }
                for m in self.per_model_dcor
            },
            "settings": self.settings,
        }

    def to_json(self, indent=2):
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True)

    def to_csv(self) -> str:
        """Long format: rep, model, dcov, dcor."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["rep", "model", "dcov", "dcor"])
        for m in self.per_model_dcor:
            for r in range(self.reps):
                w.writerow([r, m, repr(float(self.per_model_dcov[m][r])), repr(float(self.per_model_dcor[m][r]))])
        return buf.getvalue()


def replicate(
    config: SimConfig,
    reps: int,
    specs: List[ModelSpec],
    loss: str = "roc_auc",
    K: int = 10,
    subset_size: int = 500,
    master_seed: int = 0,
    draws: int = N_DRAWS,
    threads: int = 1,
    progress: Optional[Callable[[int, int], None]] = None,
) -> ReplicationReport:
    """Repeat the whole grid study ``reps`` times.

    Each rep simulates two independent grids (tau and tau' roles), scores
    every ordered pair under every model, and records dCov and dCor between
    the flattened scores and |pi_i - pi_j|. All models in a rep share the
    same folds and training subsamples.
    """
    check_loss(loss)
    if reps < 1:
        raise DataError("reps must be at least 1")
    seeds = np.array([_rng.child_seed(master_seed, _rng.REP, r) for r in range(reps)], dtype=np.uint64)
    distance = true_distances(config.pi_grid)

    def one(r):
        rep_seed = int(seeds[r])
        try:
            grid_a = simulate_grid(config.with_seed(rep_seed))
            grid_b = simulate_grid(config.with_seed(_rng.child_seed(rep_seed, _rng.GRID_PRIME)))
            out = {}
            for spec in specs:
                mat = pairwise_scores(grid_a, spec, loss, K, subset_size, rep_seed, grid_b, draws=draws)
                out[spec.name] = (mat.flat(), dcor_stats(mat.flat(), distance))
        except Exception as exc:
            exc.args = (f"replicate {r} failed: {exc}",) + exc.args[1:]
            raise
        if progress is not None:
            progress(r, reps)
        return out

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(one, range(reps)))
    else:
        results = [one(r) for r in range(reps)]
    names = [s.name for s in specs]
    return ReplicationReport(
        reps=reps,
        per_model_dcor={m: np.array([res[m][1][1] for res in results]) for m in names},
        per_model_dcov={m: np.array([res[m][1][0] for res in results]) for m in names},
        seeds=seeds,
        grid=tuple(config.pi_grid),
        loss_name=loss,
        per_model_scores={m: np.array([res[m][0] for res in results]) for m in names},
        degenerate={m: np.array([res[m][1][2] for res in results]) for m in names},
        settings={
            "K": K,
            "subset_size": subset_size,
            "draws": draws,
            "master_seed": master_seed,
            "sim_config": config.to_dict(),
        },
    )
