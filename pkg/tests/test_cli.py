import csv
import json
import os
import subprocess
import sys

import pytest

from predscore import cli


@pytest.fixture(scope="module")
def sim(tmp_path_factory):
    out = tmp_path_factory.mktemp("sim")
    assert cli.main(["simulate", "--out", str(out), "--seed", "3", "--threads", "1"]) == 0
    return out


def test_simulate_defaults_five_files(sim):
    panels = sorted(f for f in os.listdir(sim) if f.startswith("panel_"))
    assert panels == ["panel_pi0.25.csv", "panel_pi0.5.csv", "panel_pi0.75.csv", "panel_pi0.csv", "panel_pi1.csv"]
    manifest = json.loads((sim / "manifest.json").read_text())
    assert manifest["command"] == "simulate" and manifest["options"]["seed"] == 3


def test_simulate_single_pi(tmp_path):
    assert cli.main(["simulate", "--out", str(tmp_path), "--seed", "1", "--pi", "0.5"]) == 0
    assert sorted(os.listdir(tmp_path)) == ["manifest.json", "panel_pi0.5.csv"]


def test_seed_generated_and_printed(tmp_path, capsys):
    assert cli.main(["simulate", "--out", str(tmp_path), "--pi", "0", "--J", "2"]) == 0
    err = capsys.readouterr().err
    seed = int(err.split("seed:")[1].split()[0])
    assert json.loads((tmp_path / "manifest.json").read_text())["options"]["seed"] == seed


def test_score_same_file_shared_seed(sim, tmp_path):
    panel = str(sim / "panel_pi0.csv")
    argv = ["score", "--out", str(tmp_path), "--seed", "2", "--tau", panel, "--tau-prime", panel,
            "--model", "1", "--shared-fold-seed", "--draws", "10"]
    assert cli.main(argv) == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["ks"] == 0.0


def test_score_artifacts(sim, tmp_path):
    argv = ["score", "--out", str(tmp_path), "--seed", "2", "--tau", str(sim / "panel_pi0.csv"),
            "--tau-prime", str(sim / "panel_pi0.5.csv"), "--model", "1", "--draws", "10",
            "--scheme", "subsample", "--K", "6"]
    assert cli.main(argv) == 0
    assert json.loads((tmp_path / "report.json").read_text())["ks"] > 0
    with open(tmp_path / "curves.csv") as fh:
        rows = list(csv.DictReader(fh))
    folds = {(r["side"], r["fold"]) for r in rows}
    assert len([f for f in folds if f[0] == "cross_validation"]) == 6
    assert len([f for f in folds if f[0] == "validation"]) == 6
    assert (tmp_path / "losses.csv").read_text().startswith("side,fold_or_row,value\n")


def test_partition_k_from_holdout_size(sim, tmp_path):
    argv = ["score", "--out", str(tmp_path), "--seed", "2", "--tau", str(sim / "panel_pi0.csv"),
            "--tau-prime", str(sim / "panel_pi1.csv"), "--covariates", "round,own_lag", "--draws", "0",
            "--holdout-size", "400"]
    assert cli.main(argv) == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["settings"]["K"] == report["settings"]["n_tau"] // 400


def test_replicate_single_rep(tmp_path, capsys):
    argv = ["replicate", "--out", str(tmp_path), "--seed", "1", "--reps", "1", "--draws", "5",
            "--K", "4", "--subset-size", "200", "--pi", "0,0.5,1"]
    assert cli.main(argv) == 0
    assert "rep 1/1" in capsys.readouterr().err
    lines = (tmp_path / "replication.csv").read_text().splitlines()
    assert lines[0] == "rep,model,dcov,dcor" and len(lines) == 4


def test_config_file_and_precedence(tmp_path):
    cfg = tmp_path / "run.toml"
    cfg.write_text('seed = 4\npi = [0.25]\nJ = 2\n')
    out = tmp_path / "out"
    assert cli.main(["simulate", "--out", str(out), "--config", str(cfg), "--J", "3"]) == 0
    opts = json.loads((out / "manifest.json").read_text())["options"]
    assert opts["seed"] == 4 and opts["J"] == 3 and opts["pi"] == [0.25]


def test_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text("colour = 'red'\n")
    assert cli.main(["simulate", "--out", str(tmp_path / "a"), "--config", str(bad)]) == 2
    assert cli.main(["score", "--out", str(tmp_path / "b"), "--seed", "1", "--model", "1",
                     "--tau", str(tmp_path / "none.csv"), "--tau-prime", str(tmp_path / "none.csv")]) == 3
    garbled = tmp_path / "g.csv"
    garbled.write_text("y,x\n1,2\n0,oops\n")
    assert cli.main(["score", "--out", str(tmp_path / "c"), "--seed", "1", "--covariates", "x",
                     "--tau", str(garbled), "--tau-prime", str(garbled), "--label", "y", "--features", "x"]) == 3
    assert "line 3" in capsys.readouterr().err
    with pytest.raises(SystemExit) as exc:
        cli.main(["score", "--nonsense"])
    assert exc.value.code == 2


def test_console_script_runs(tmp_path):
    cmd = [sys.executable, "-m", "predscore.cli", "simulate", "--out", str(tmp_path), "--seed", "1", "--pi", "1"]
    done = subprocess.run(cmd, capture_output=True, text=True)
    assert done.returncode == 0 and "wrote 1 panel file" in done.stdout


def test_numerical_failure_exit_code(sim, tmp_path, monkeypatch):
    from predscore.errors import NumericalError

    def boom(*args, **kwargs):
        raise NumericalError("bootstrap draw 0 failed to converge")

    monkeypatch.setattr(cli, "prediction_score", boom)
    argv = ["score", "--out", str(tmp_path), "--seed", "1", "--model", "1",
            "--tau", str(sim / "panel_pi0.csv"), "--tau-prime", str(sim / "panel_pi0.csv")]
    assert cli.main(argv) == 4
