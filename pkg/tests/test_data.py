import numpy as np
import pytest

from predscore.data import (
    Dataset,
    RebalanceSpec,
    assign_folds,
    lagged_features,
    load_csv,
    load_panel_dataset,
    read_panel_csv,
    rebalance,
    write_csv,
    write_panel_csv,
)
from predscore.errors import DataError, ParseError
from predscore.simulation import GamePanel, SimConfig, simulate_setting


def test_dataset_validation():
    with pytest.raises(DataError):
        Dataset(np.zeros((3, 2)), [0, 1, 0], ("a",))
    with pytest.raises(DataError):
        Dataset(np.zeros((2, 1)), [0, 2], ("a",))
    with pytest.raises(DataError):
        Dataset(np.zeros((2, 2)), [0, 1], ("a", "a"))
    d = Dataset(np.arange(6.0).reshape(3, 2), [0, 1, 1], ("a", "b"))
    assert d.n == 3 and d.rate == pytest.approx(2 / 3) and d.n_positive == 2
    with pytest.raises(ValueError):
        d.X[0, 0] = 1.0


def test_dataset_helpers(toy):
    sub = toy.subset([0, 2, 4])
    assert sub.n == 3 and np.array_equal(sub.X, toy.X[[0, 2, 4]])
    prod = toy.with_product("x1", "x2")
    assert "x1:x2" in prod.feature_names
    np.testing.assert_array_equal(prod.columns(["x1:x2"])[:, 0], toy.X[:, 0] * toy.X[:, 1])
    with pytest.raises(DataError):
        toy.columns(["nope"])


def test_csv_round_trip(tmp_path, toy):
    path = tmp_path / "d.csv"
    write_csv(toy, path)
    back = load_csv(path, "y", ["x1", "x2"])
    assert back.equals(toy)


def test_csv_errors_name_line(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("y,x\n1,0.5\n0,abc\n")
    with pytest.raises(ParseError, match="line 3"):
        load_csv(path, "y", ["x"])
    path.write_text("y,x\n1,0.5\n2,0.1\n")
    with pytest.raises(ParseError, match="line 3"):
        load_csv(path, "y", ["x"])
    with pytest.raises(DataError):
        load_csv(path, "y", ["missing"])


def test_partition_folds_cover(toy):
    folds = assign_folds(toy, 7, seed=1)
    rows = np.concatenate(folds.folds)
    assert np.array_equal(np.sort(rows), np.arange(toy.n))
    sizes = [len(f) for f in folds.folds]
    assert max(sizes) - min(sizes) <= 1
    assert assign_folds(toy, 7, seed=1).folds[3].tolist() == folds.folds[3].tolist()
    assert folds.fold_of.shape == (toy.n,)


def test_stratified_partition_keeps_rate(toy):
    folds = assign_folds(toy, 5, stratified=True, seed=3)
    for f in folds.folds:
        pos = toy.y[f].sum()
        assert abs(pos - toy.n_positive / 5) <= 1


def test_subsample_folds(toy):
    folds = assign_folds(toy, 4, "subsample", subset_size=100, stratified=True, seed=2)
    assert folds.K == 4
    for f in folds.folds:
        assert len(f) == 100 and len(np.unique(f)) == 100
    with pytest.raises(DataError):
        assign_folds(toy, 4, "subsample", subset_size=10_000)
    with pytest.raises(DataError):
        assign_folds(toy, 1)


def test_rebalance_hits_target(toy):
    spec = RebalanceSpec(0.25, 333, seed=9)
    out = rebalance(toy, spec)
    assert out.n == 333 and out.n_positive == spec.n_positive == 83
    assert abs(out.rate - 0.25) <= 1 / 333
    with pytest.raises(DataError):
        RebalanceSpec(1.0, 10)
    with pytest.raises(DataError):
        RebalanceSpec(0.01, 10)


def _tiny_panel():
    # one cohort of three people over warm-up + two rounds
    y = {1: [1, 1, 0], 2: [0, 1, 1], 3: [1, 0, 0]}
    rows = [(1, p, t, y[p][t]) for p in (1, 2, 3) for t in range(3)]
    c, p, t, yy = (np.array(v) for v in zip(*rows))
    return GamePanel(c, p, t, np.ones(len(c), bool), yy.astype(np.int8), 0.0, (3,))


def test_lagged_features_leave_one_out():
    d = lagged_features(_tiny_panel())
    assert d.feature_names == ("round", "own_lag", "cohort_mean_lag")
    assert d.n == 6
    # participant 1, round 1: own lag y0=1, others' lag (0 + 1) / 2
    assert d.X[0].tolist() == [1.0, 1.0, 0.5] and d.y[0] == 1
    # participant 3, round 2: own lag 0, others' lag (1 + 1) / 2
    assert d.X[5].tolist() == [2.0, 0.0, 1.0] and d.y[5] == 0


def test_panel_csv_round_trip(tmp_path):
    panel = simulate_setting(SimConfig(J=3, T=4), 0.5, 17)
    path = tmp_path / "p.csv"
    write_panel_csv(panel, path)
    assert read_panel_csv(path).equals(panel)
    assert load_panel_dataset(path).equals(lagged_features(panel))
