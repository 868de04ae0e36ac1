"""The compiled kernels and the numpy fallback must agree."""

import numpy as np
import pytest

from predscore import _backend, _pure

_core = pytest.importorskip("predscore._core")


def test_backend_selected():
    assert _backend.NAME in ("cython", "python")
    assert _pure.NAME == "python" and _core.NAME == "cython"


def _case(rng, n):
    s = np.round(rng.normal(size=n), int(rng.integers(0, 3)))
    y = rng.integers(0, 2, n).astype(np.int8)
    y[0], y[-1] = 1, 0
    return s, y, np.argsort(s, kind="stable")


@pytest.mark.parametrize("seed", range(5))
def test_rank_kernels_agree(seed):
    rng = np.random.default_rng(seed)
    for n in (2, 7, 150):
        s, y, order = _case(rng, n)
        assert _core.auc_from_order(s, y, order) == _pure.auc_from_order(s, y, order)
        assert _core.pr_auc_from_order(s, y, order) == pytest.approx(_pure.pr_auc_from_order(s, y, order), abs=1e-15)
        a, b = np.sort(rng.normal(size=n)), np.sort(np.round(rng.normal(size=n + 3), 1))
        assert _core.ks_sorted(a, b) == pytest.approx(_pure.ks_sorted(a, b), abs=1e-15)
        x, z = rng.normal(size=n), rng.normal(size=n)
        assert _core.dcov_sq(x, z) == pytest.approx(_pure.dcov_sq(x, z), abs=1e-13)


@pytest.mark.parametrize("seed", range(5))
def test_irls_agrees(seed):
    rng = np.random.default_rng(seed)
    n, p = 200, 3
    X = np.column_stack([np.ones(n), rng.normal(size=(n, p - 1))])
    y = (rng.random(n) < 1 / (1 + np.exp(-X @ [0.2, 1.0, -0.5]))).astype(np.float64)
    w = rng.uniform(0.5, 2, n)
    a = _core.irls(X, y, w, np.zeros(p), 50, 1e-8, 30.0)
    b = _pure.irls(X, y, w, np.zeros(p), 50, 1e-8, 30.0)
    np.testing.assert_allclose(a[0], b[0], atol=1e-10)
    np.testing.assert_allclose(a[1], b[1], rtol=1e-10)
    assert a[2:5] == b[2:5]


def test_irls_separation_agrees():
    x = np.linspace(-1, 1, 30)
    X = np.column_stack([np.ones(30), x])
    y = (x > 0).astype(np.float64)
    for k in (_core, _pure):
        beta, _, converged, separated, _, _ = k.irls(X, y, np.ones(30), np.zeros(2), 50, 1e-8, 30.0)
        assert separated and np.linalg.norm(beta) > 30


def test_pure_backend_end_to_end(monkeypatch, toy):
    from predscore import losses, models

    monkeypatch.setattr(losses, "kernels", _pure)
    monkeypatch.setattr(models, "kernels", _pure)
    from predscore.models import ModelSpec, fit_logistic

    fit_py = fit_logistic(toy, ModelSpec(("x1", "x2")))
    monkeypatch.undo()
    fit_c = fit_logistic(toy, ModelSpec(("x1", "x2")))
    np.testing.assert_allclose(fit_py.coefficients, fit_c.coefficients, atol=1e-10)
