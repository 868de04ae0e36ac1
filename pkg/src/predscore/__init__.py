"""Prediction scores: how far a fitted model's out-of-sample performance on a
new dataset departs from its cross-validated performance on the original."""

__version__ = "0.1.0"

from ._backend import NAME as BACKEND
from .data import Dataset, FoldAssignment, RebalanceSpec, assign_folds, lagged_features, load_csv, rebalance
from .errors import BaselineRateError, ConvergenceError, DataError, NumericalError, ParseError, PredscoreError
from .evaluation import distance_correlation, distance_covariance, pairwise_scores, replicate
from .losses import ks_statistic, pr_auc, roc_auc
from .models import ModelSpec, fit_logistic, forecast_distribution, researcher_model_specs, wald_test
from .scoring import PredictionScoreReport, prediction_score
from .simulation import SimConfig, simulate_grid, simulate_setting

__all__ = [
    "BACKEND",
    "BaselineRateError",
    "ConvergenceError",
    "DataError",
    "Dataset",
    "FoldAssignment",
    "ModelSpec",
    "NumericalError",
    "ParseError",
    "PredictionScoreReport",
    "PredscoreError",
    "RebalanceSpec",
    "SimConfig",
    "assign_folds",
    "distance_correlation",
    "distance_covariance",
    "fit_logistic",
    "forecast_distribution",
    "ks_statistic",
    "lagged_features",
    "load_csv",
    "pairwise_scores",
    "pr_auc",
    "prediction_score",
    "rebalance",
    "replicate",
    "researcher_model_specs",
    "roc_auc",
    "simulate_grid",
    "simulate_setting",
    "wald_test",
]
