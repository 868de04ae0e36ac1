import json

import numpy as np
import pytest
from scipy.optimize import minimize

from predscore.data import Dataset
from predscore.errors import ConvergenceError, DataError, NumericalError
from predscore.models import (
    FittedModel,
    ModelSpec,
    bootstrap_coefficients,
    dataset_design,
    fit_logistic,
    forecast_distribution,
    log_likelihood,
    predict_dataset,
    researcher_model_specs,
    spec_by_name,
    wald_from_estimate,
    wald_test,
    with_bootstrap,
)

SPEC = ModelSpec(("x1", "x2"), "toy")


def test_mle_matches_generic_optimiser(toy):
    X = dataset_design(toy, SPEC)
    res = minimize(lambda b: -log_likelihood(b, X, toy.y), np.zeros(3), method="BFGS", options={"gtol": 1e-10})
    fit = fit_logistic(toy, SPEC)
    assert fit.converged and not fit.separated
    np.testing.assert_allclose(fit.coefficients, res.x, atol=1e-5)
    assert fit.loglik == pytest.approx(-res.fun, abs=1e-8)
    # log-likelihood never decreases along the Newton path
    assert np.all(np.diff(fit.loglik_trace) >= 0)


def test_weighted_fit_equals_replicated_rows(toy):
    w = np.tile([1.0, 2.0, 0.0, 3.0], toy.n // 4)
    rows = np.repeat(np.arange(toy.n), w.astype(int))
    a = fit_logistic(toy, SPEC, weights=w)
    b = fit_logistic(toy.subset(rows), SPEC)
    np.testing.assert_allclose(a.coefficients, b.coefficients, atol=1e-9)


def test_separation_flagged():
    x = np.linspace(-1, 1, 20)
    d = Dataset(x[:, None], (x > 0).astype(np.int8), ("x",))
    fit = fit_logistic(d, ModelSpec(("x",)))
    assert fit.separated and not fit.converged
    with pytest.raises(ConvergenceError):
        wald_test(fit, "x")


def test_single_class_rejected():
    d = Dataset(np.zeros((5, 1)), np.ones(5, np.int8), ("x",))
    with pytest.raises(DataError):
        fit_logistic(d, ModelSpec(("x",)))


def test_predictions_in_unit_interval(toy):
    p = predict_dataset(fit_logistic(toy, SPEC), toy)
    assert p.shape == (toy.n,) and np.all((p > 0) & (p < 1))


def test_bootstrap_deterministic_and_thread_independent(toy):
    a, ra = bootstrap_coefficients(toy, SPEC, S=40, seed=3)
    b, rb = bootstrap_coefficients(toy, SPEC, S=40, seed=3, threads=4)
    assert np.array_equal(a, b) and ra == rb
    c, _ = bootstrap_coefficients(toy, SPEC, S=40, seed=4)
    assert not np.array_equal(a, c)
    # bootstrap spread tracks the asymptotic standard errors
    fit = fit_logistic(toy, SPEC)
    ratio = a.std(axis=0, ddof=1) / np.sqrt(np.diag(fit.covariance))
    assert np.all((ratio > 0.6) & (ratio < 1.6))


def test_forecast_distribution_shape(toy):
    fd = forecast_distribution(toy, SPEC, toy.X[:7], S=25, seed=1)
    assert fd.draws.shape == (7, 25)
    np.testing.assert_allclose(fd.point, fd.draws.mean(axis=1))


def test_bootstrap_exhaustion_raises():
    x = np.r_[np.linspace(-1, -0.1, 6), 0.05, np.linspace(0.1, 1, 6)]
    y = (x > 0).astype(np.int8)
    y[6] = 0  # the only overlap; most resamples separate
    d = Dataset(x[:, None], y, ("x",))
    with pytest.raises(NumericalError, match="redraws"):
        bootstrap_coefficients(d, ModelSpec(("x",)), S=50, seed=0, retries=0)


def test_with_bootstrap_keeps_point_fit(toy):
    fit = fit_logistic(toy, SPEC)
    boot = with_bootstrap(fit, toy, S=10, seed=2)
    assert np.array_equal(boot.coefficients, fit.coefficients)
    assert boot.draws.shape == (10, 3)


def test_wald():
    r = wald_from_estimate(0.22, 0.22 / 3.719, "greater")
    assert r.z == pytest.approx(3.719) and r.p_value == pytest.approx(1e-4, rel=0.01)
    assert wald_from_estimate(1.0, 1.0, "two_sided").p_value == pytest.approx(0.3173105, rel=1e-6)
    with pytest.raises(NumericalError):
        wald_from_estimate(1.0, 0.0)


def test_json_round_trip(toy):
    fit = fit_logistic(toy, SPEC)
    back = FittedModel.from_dict(json.loads(fit.to_json()))
    assert back.spec == fit.spec and np.array_equal(back.coefficients, fit.coefficients)
    assert back.coefficient("x1") == fit.coefficients[1]


def test_researcher_specs():
    names = [s.name for s in researcher_model_specs()]
    assert names == ["Model 1", "Model 2", "Model 3"]
    assert spec_by_name("2").covariates == ("own_lag",)
    assert spec_by_name("Model 3").covariates == ("cohort_mean_lag",)
    with pytest.raises(DataError):
        spec_by_name("4")
