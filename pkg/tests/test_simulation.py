import numpy as np
import pytest

from predscore.errors import DataError
from predscore.simulation import (
    BOT_COEFS,
    HUMAN_COEFS,
    PI_GRID,
    SimConfig,
    cohort_size,
    interaction_model_spec,
    setting_seed,
    simulate_grid,
    simulate_setting,
)


def test_defaults():
    c = SimConfig()
    assert c.pi_grid == PI_GRID and (c.J, c.T, c.M) == (10, 15, 10000)
    assert c.human_coefs == HUMAN_COEFS and c.bot_coefs == BOT_COEFS


def test_panel_layout():
    p = simulate_setting(SimConfig(J=3, T=5), 0.5, 1)
    assert len(p.cohort_sizes) == 3 and min(p.cohort_sizes) >= 2
    assert len(p.y) == p.n_participants * 6
    assert set(np.unique(p.round)) == set(range(6))
    keys = np.lexsort((p.round, p.participant, p.cohort))
    assert np.array_equal(keys, np.arange(len(keys)))
    assert p.cohort.min() == 1 and p.participant.min() == 1


def test_pure_settings():
    assert simulate_setting(SimConfig(J=4), 0.0, 3).is_human.all()
    assert not simulate_setting(SimConfig(J=4), 1.0, 3).is_human.any()


def test_deterministic():
    a = simulate_setting(SimConfig(), 0.25, 42)
    assert a.equals(simulate_setting(SimConfig(), 0.25, 42))
    assert not a.equals(simulate_setting(SimConfig(), 0.25, 43))
    grid = simulate_grid(SimConfig(seed=5))
    assert tuple(grid) == PI_GRID
    assert grid[0.5].equals(simulate_setting(SimConfig(), 0.5, setting_seed(5, 0.5)))


def test_bot_cooperation_matches_markov_chain():
    # bots follow a two-state chain; its stationary cooperation rate is exact
    a, b = 1 / (1 + np.exp(-BOT_COEFS[0])), 1 / (1 + np.exp(-sum(BOT_COEFS)))
    stationary = a / (1 - b + a)
    rates = [simulate_setting(SimConfig(T=60), 1.0, s).cooperation_rate for s in range(10)]
    assert np.mean(rates) == pytest.approx(stationary, abs=0.02)


def test_cohort_size_floor():
    rng = np.random.default_rng(0)
    n, redraws = cohort_size(SimConfig(M=3, p_participate=0.2), rng)
    assert n >= 2 and redraws >= 0
    with pytest.raises(DataError):
        cohort_size(SimConfig(M=1, p_participate=0.5), rng)


def test_config_validation_and_file(tmp_path):
    with pytest.raises(DataError):
        SimConfig(pi_grid=(1.5,))
    with pytest.raises(DataError):
        SimConfig.from_mapping({"J": 3, "colour": "red"})
    path = tmp_path / "sim.toml"
    path.write_text('J = 4\npi_grid = [0.0, 0.5]\nseed = 9\n')
    c = SimConfig.from_file(path, J=6)
    assert c.J == 6 and c.pi_grid == (0.0, 0.5) and c.seed == 9
    assert SimConfig.from_mapping(c.to_dict()) == c
    with pytest.raises(DataError):
        simulate_setting(c, -0.1, 0)


def test_interaction_spec():
    spec = interaction_model_spec("bot")
    assert spec.covariates == ("round", "bot", "round:bot")
