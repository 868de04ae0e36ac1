import csv
import io
import warnings

import numpy as np
import pytest

from predscore.errors import DataError
from predscore.evaluation import (
    ConstantInputWarning,
    dcor_stats,
    distance_correlation,
    distance_covariance,
    pairwise_scores,
    replicate,
    true_distances,
)
from predscore.models import researcher_model_specs
from predscore.simulation import SimConfig, simulate_grid

MODEL_1 = researcher_model_specs()[0]


def test_dcov_two_points():
    # double-centred |x_i - x_j| for (1, 2) is +-1/2, so dCov^2 = 1/4
    assert distance_covariance([1, 2], [1, 2]) == pytest.approx(0.5, abs=1e-15)
    assert distance_correlation([1, 2], [1, 2]) == pytest.approx(1.0, abs=1e-15)


def test_dcor_linear_and_affine_invariant():
    rng = np.random.default_rng(0)
    x = rng.normal(size=60)
    assert distance_correlation(x, 3 * x - 2) == pytest.approx(1.0, abs=1e-12)
    y = rng.normal(size=60)
    assert distance_correlation(x, y) == pytest.approx(distance_correlation(5 * x + 1, y), abs=1e-12)
    assert distance_correlation(x, y) < distance_correlation(x, x**2 + 0.1 * y)


def test_dcor_permutation_null():
    rng = np.random.default_rng(1)
    x = rng.normal(size=40)
    y = x**2 + 0.2 * rng.normal(size=40)
    observed = distance_covariance(x, y)
    null = [distance_covariance(x, rng.permutation(y)) for _ in range(200)]
    assert np.mean(np.array(null) >= observed) < 0.01


def test_constant_input_warns():
    with pytest.warns(ConstantInputWarning):
        assert distance_correlation([1, 1, 1], [1, 2, 3]) == 0.0
    assert dcor_stats([1, 1, 1], [1, 2, 3])[2]
    with pytest.raises(DataError):
        distance_covariance([1, 2], [1, 2, 3])


def test_true_distances():
    d = true_distances((0.0, 0.5, 1.0)).reshape(3, 3)
    assert np.array_equal(d, d.T) and np.all(np.diag(d) == 0) and d[0, 2] == 1.0


@pytest.fixture(scope="module")
def grids():
    config = SimConfig(pi_grid=(0.0, 0.5, 1.0))
    return simulate_grid(config.with_seed(1)), simulate_grid(config.with_seed(2))


def test_pairwise_matches_direct_scoring(grids):
    a, b = grids
    m = pairwise_scores(a, MODEL_1, K=4, subset_size=200, seed=3, panels_prime=b, draws=10, keep_reports=True)
    assert m.scores.shape == (3, 3) and np.all((m.scores >= 0) & (m.scores <= 1))
    for (i, j), rep in m.reports.items():
        assert m.scores[list(a).index(i), list(a).index(j)] == rep.ks
    again = pairwise_scores(a, MODEL_1, K=4, subset_size=200, seed=3, panels_prime=b, draws=10, threads=3)
    assert np.array_equal(m.scores, again.scores)
    rows = list(csv.reader(io.StringIO(m.to_csv())))
    assert rows[0] == ["pi_row", "pi_col", "score"] and len(rows) == 10
    assert m.asymmetry().shape == (3, 3)


def test_replicate_small(grids):
    config = SimConfig(pi_grid=(0.0, 0.5, 1.0))
    specs = researcher_model_specs()[:2]
    r = replicate(config, 2, specs, K=4, subset_size=200, master_seed=1, draws=10)
    assert r.reps == 2 and set(r.per_model_dcor) == {"Model 1", "Model 2"}
    assert r.per_model_scores["Model 1"].shape == (2, 9)
    lines = r.to_csv().splitlines()
    assert lines[0] == "rep,model,dcov,dcor" and len(lines) == 5
    same = replicate(config, 2, specs, K=4, subset_size=200, master_seed=1, draws=10, threads=2)
    assert same.to_json() == r.to_json()
    with pytest.raises(DataError):
        replicate(config, 0, specs)
