"""Logistic-regression predictive models, bootstrap forecasts and Wald tests."""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import ndtr

from . import _rng
from ._backend import kernels
from .errors import ConvergenceError, DataError, NumericalError

INTERCEPT = "(Intercept)"
MAX_ITER = 50
TOL = 1e-8
COEF_CAP = 30.0
N_DRAWS = 200
RETRIES = 10
_P_LO = np.finfo(np.float64).tiny
_P_HI = 1.0 - np.finfo(np.float64).epsneg


@dataclass(frozen=True)
class ModelSpec:
    """A logistic model on named covariates; the intercept is implicit."""

    covariates: tuple
    name: str = ""
    family: str = "logistic"

    def __post_init__(self):
        object.__setattr__(self, "covariates", tuple(self.covariates))
        if len(set(self.covariates)) != len(self.covariates):
            raise DataError(f"duplicate covariates in {self.covariates}")
        if self.family != "logistic":
            raise DataError(f"unsupported family {self.family!r}")
        if not self.name:
            object.__setattr__(self, "name", "+".join(self.covariates) or "intercept only")

    @property
    def terms(self):
        return (INTERCEPT,) + self.covariates

    def to_dict(self):
        return {"name": self.name, "family": self.family, "covariates": list(self.covariates)}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(d["covariates"]), d.get("name", ""), d.get("family", "logistic"))


@dataclass(frozen=True, eq=False)
class FittedModel:
    spec: ModelSpec
    coefficients: np.ndarray
    covariance: np.ndarray
    converged: bool
    iterations: int
    train_rows: int
    separated: bool = False
    loglik: float = float("nan")
    loglik_trace: tuple = ()
    # bootstrap coefficient draws (S x terms), shared by every use of the model
    draws: Optional[np.ndarray] = field(default=None, repr=False)
    draw_retries: int = 0

    @property
    def usable(self):
        return bool(np.all(np.isfinite(self.coefficients)))

    def coefficient(self, name):
        return float(self.coefficients[self._index(name)])

    def _index(self, name):
        try:
            return self.spec.terms.index(name)
        except ValueError:
            raise DataError(f"{name!r} is not a term of {self.spec.name}") from None

    def to_dict(self):
        return {
            "spec": self.spec.to_dict(),
            "coefficients": [float(v) for v in self.coefficients],
            "covariance": [[float(v) for v in row] for row in self.covariance],
            "converged": bool(self.converged),
            "iterations": int(self.iterations),
            "separated": bool(self.separated),
            "train_rows": int(self.train_rows),
        }

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d):
        return cls(
            spec=ModelSpec.from_dict(d["spec"]),
            coefficients=np.array(d["coefficients"], dtype=np.float64),
            covariance=np.array(d["covariance"], dtype=np.float64),
            converged=bool(d["converged"]),
            iterations=int(d["iterations"]),
            train_rows=int(d.get("train_rows", 0)),
            separated=bool(d.get("separated", False)),
        )


@dataclass(frozen=True, eq=False)
class ForecastDistribution:
    draws: np.ndarray
    point: np.ndarray


@dataclass(frozen=True)
class TestResult:
    estimate: float
    std_error: float
    z: float
    p_value: float
    alternative: str

    __test__ = False


def design_matrix(features) -> np.ndarray:
    features = np.asarray(features, dtype=np.float64)
    if features.ndim == 1:
        features = features[:, None]
    return np.column_stack([np.ones(features.shape[0]), features])


def dataset_design(dataset, spec: ModelSpec) -> np.ndarray:
    return design_matrix(dataset.columns(spec.covariates))


def log_likelihood(beta, X, y, weights=None) -> float:
    """Bernoulli log-likelihood with logit link."""
    w = np.ones(len(y)) if weights is None else np.asarray(weights, dtype=np.float64)
    eta = np.asarray(X, np.float64) @ np.asarray(beta, dtype=np.float64)
    softplus = np.maximum(eta, 0.0) + np.log1p(np.exp(-np.abs(eta)))
    return float(np.sum(w * (np.asarray(y, np.float64) * eta - softplus)))


def score(beta, X, y, weights=None) -> np.ndarray:
    """Analytic gradient of :func:`log_likelihood`: X'W(y - p)."""
    X = np.asarray(X, np.float64)
    w = np.ones(len(y)) if weights is None else np.asarray(weights, dtype=np.float64)
    p = kernels.expit(np.ascontiguousarray(X @ np.asarray(beta, np.float64)))
    return X.T @ (w * (np.asarray(y, np.float64) - p))


class GroupedDesign:
    """Design rows collapsed to distinct covariate patterns.

    The logistic likelihood only depends on each pattern's total weight and
    weighted positive count, so fits run over patterns instead of rows.
    """

    def __init__(self, X, y):
        X = np.asarray(X, dtype=np.float64)
        self.n = X.shape[0]
        patterns, self.group = np.unique(X, axis=0, return_inverse=True)
        self.group = self.group.reshape(-1)
        self.X = np.ascontiguousarray(patterns)
        self.y = np.asarray(y, dtype=np.float64)

    def collapse(self, w=None):
        """Per-pattern (positive share, total weight) for row weights ``w``."""
        g = len(self.X)
        if w is None:
            total = np.bincount(self.group, minlength=g).astype(np.float64)
            pos = np.bincount(self.group, weights=self.y, minlength=g)
        else:
            total = np.bincount(self.group, weights=w, minlength=g)
            pos = np.bincount(self.group, weights=w * self.y, minlength=g)
        share = np.divide(pos, total, out=np.zeros(g), where=total > 0)
        return share, total

    def irls(self, w, start, max_iter=MAX_ITER, tol=TOL, cap=COEF_CAP):
        share, total = self.collapse(w)
        return kernels.irls(self.X, share, total, start, int(max_iter), float(tol), float(cap))


def _fit(X, y, w, spec, start, max_iter, tol, cap, n_rows):
    if start is None:
        start = np.zeros(X.shape[1])
    beta, info, converged, separated, iterations, trace = GroupedDesign(X, y).irls(
        w, np.asarray(start, dtype=np.float64), max_iter, tol, cap
    )
    try:
        cov = np.linalg.inv(info)
    except np.linalg.LinAlgError:
        cov = np.linalg.pinv(info)
    cov = (cov + cov.T) / 2.0
    return FittedModel(
        spec=spec,
        coefficients=beta,
        covariance=cov,
        converged=bool(converged) and not separated,
        iterations=int(iterations),
        train_rows=int(n_rows),
        separated=bool(separated),
        loglik=float(trace[-1]),
        loglik_trace=tuple(float(v) for v in trace),
    )


def fit_logistic(
    dataset,
    spec: ModelSpec,
    max_iter: int = MAX_ITER,
    tol: float = TOL,
    cap: float = COEF_CAP,
    weights=None,
    start=None,
) -> FittedModel:
    """Maximum-likelihood logistic regression by Newton-Raphson (IRLS).

    Steps that would lower the log-likelihood are halved. ``tol`` bounds the
    max-norm of the per-observation mean gradient. If the coefficient norm
    passes ``cap`` the data are treated as (quasi-)separated: the fit stops
    and is returned with ``converged=False`` and ``separated=True``.
    """
    y = dataset.y
    n_pos = int(np.sum(y if weights is None else (np.asarray(weights) > 0) * y))
    n_all = dataset.n if weights is None else int(np.sum(np.asarray(weights) > 0))
    if n_pos == 0 or n_pos == n_all:
        raise DataError(f"cannot fit {spec.name}: training data contain a single class")
    X = dataset_design(dataset, spec)
    w = None if weights is None else np.asarray(weights, dtype=np.float64)
    return _fit(X, y.astype(np.float64), w, spec, start, max_iter, tol, cap, dataset.n)


def _linear_predictor(model: FittedModel, features, coefs):
    features = np.asarray(features, dtype=np.float64)
    if features.ndim == 1:
        features = features[:, None]
    if features.shape[1] != len(model.spec.covariates):
        raise DataError(
            f"{model.spec.name} expects {len(model.spec.covariates)} feature columns, got {features.shape[1]}"
        )
    if coefs.ndim == 2:
        return features @ coefs[:, 1:].T + coefs[:, 0]
    return features @ coefs[1:] + coefs[0]


def _prob(eta):
    eta = np.ascontiguousarray(eta, dtype=np.float64)
    p = kernels.expit(eta.reshape(-1)).reshape(eta.shape)
    return np.clip(p, _P_LO, _P_HI)


def predict_prob(model: FittedModel, features) -> np.ndarray:
    """Inverse-logit of the linear predictor, strictly inside (0, 1)."""
    return _prob(_linear_predictor(model, features, model.coefficients))


def predict_dataset(model: FittedModel, dataset) -> np.ndarray:
    return predict_prob(model, dataset.columns(model.spec.covariates))


def bootstrap_coefficients(
    train,
    spec: ModelSpec,
    S: int = N_DRAWS,
    seed: int = 0,
    retries: int = RETRIES,
    start=None,
    threads: int = 1,
    max_iter: int = MAX_ITER,
    tol: float = TOL,
    cap: float = COEF_CAP,
):
    """Refit ``spec`` on S nonparametric bootstrap resamples of ``train``.

    A resample whose fit does not converge is redrawn, up to ``retries``
    times per draw. Returns ``(coefficients, total_redraws)`` with one row of
    coefficients per draw.
    """
    if S < 1:
        raise DataError("need at least one bootstrap draw")
    X = dataset_design(train, spec)
    design = GroupedDesign(X, train.y)
    n = train.n
    pos = train.y == 1
    start = np.zeros(X.shape[1]) if start is None else np.asarray(start, dtype=np.float64)

    def one(s):
        for attempt in range(retries + 1):
            rng = _rng.rng_for(seed, _rng.BOOTSTRAP, s, attempt)
            w = np.bincount(rng.integers(0, n, n), minlength=n).astype(np.float64)
            n_pos = w[pos].sum()
            if n_pos == 0 or n_pos == n:
                continue
            beta, _, converged, separated, _, _ = design.irls(w, start, max_iter, tol, cap)
            if converged and not separated:
                return beta, attempt
        raise NumericalError(
            f"bootstrap draw {s} of {spec.name} failed to converge after {retries} redraws"
        )

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(one, range(S)))
    else:
        results = [one(s) for s in range(S)]
    coefs = np.vstack([r[0] for r in results])
    return coefs, sum(r[1] for r in results)


def with_bootstrap(model: FittedModel, train, S=N_DRAWS, seed=0, retries=RETRIES, threads=1) -> FittedModel:
    """Attach bootstrap coefficient draws to a fitted model."""
    coefs, redraws = bootstrap_coefficients(
        train, model.spec, S, seed, retries, start=model.coefficients, threads=threads
    )
    return FittedModel(
        spec=model.spec,
        coefficients=model.coefficients,
        covariance=model.covariance,
        converged=model.converged,
        iterations=model.iterations,
        train_rows=model.train_rows,
        separated=model.separated,
        loglik=model.loglik,
        loglik_trace=model.loglik_trace,
        draws=coefs,
        draw_retries=redraws,
    )


def forecast_from_draws(model: FittedModel, features) -> ForecastDistribution:
    """Predicted-probability draws for ``features`` from a bootstrapped model."""
    if model.draws is None:
        p = predict_prob(model, features)
        return ForecastDistribution(p[:, None], p)
    draws = _prob(_linear_predictor(model, features, model.draws))
    return ForecastDistribution(draws, draws.mean(axis=1))


def forecast_distribution(
    train,
    spec: ModelSpec,
    targets,
    S: int = N_DRAWS,
    seed: int = 0,
    retries: int = RETRIES,
    threads: int = 1,
) -> ForecastDistribution:
    """Bootstrap forecast distribution for ``targets`` (a covariate matrix)."""
    base = fit_logistic(train, spec)
    model = with_bootstrap(base, train, S, seed, retries, threads)
    return forecast_from_draws(model, targets)


def wald_test(model: FittedModel, covariate: str, alternative: str = "greater") -> TestResult:
    """z-test of one coefficient against zero using the model covariance."""
    if not model.converged:
        raise ConvergenceError(f"{model.spec.name} did not converge; Wald test is not meaningful")
    j = model._index(covariate)
    return wald_from_estimate(float(model.coefficients[j]), float(np.sqrt(model.covariance[j, j])), alternative)


def wald_from_estimate(estimate: float, std_error: float, alternative: str = "greater") -> TestResult:
    if not std_error > 0:
        raise NumericalError("standard error must be positive")
    z = estimate / std_error
    if alternative == "greater":
        p = float(ndtr(-z))
    elif alternative == "less":
        p = float(ndtr(z))
    elif alternative == "two_sided":
        p = min(1.0, 2.0 * float(ndtr(-abs(z))))
    else:
        raise DataError(f"unknown alternative {alternative!r}")
    return TestResult(estimate, std_error, z, p, alternative)


def researcher_model_specs():
    """The three non-nested single-covariate researcher models."""
    return [
        ModelSpec(("round",), "Model 1"),
        ModelSpec(("own_lag",), "Model 2"),
        ModelSpec(("cohort_mean_lag",), "Model 3"),
    ]


def spec_by_name(name: str) -> ModelSpec:
    """Look up a researcher model by number or name ("1", "Model 1")."""
    key = name.strip().lower().replace("model", "").strip()
    for spec in researcher_model_specs():
        if spec.name.lower().replace("model", "").strip() == key:
            return spec
    raise DataError(f"unknown model {name!r}; expected 1, 2 or 3")
