"""Public-goods-game simulator with human and bot participants.

Each setting recruits ``J`` cohorts of Binomial(M, p) participants; each
participant is a bot with probability ``pi``. Humans cooperate with
probability expit(b0 + b1 t + b2 y_{t-1} + b3 ybar_{t-1}), where ybar is the
previous-round cooperation rate among the other cohort members. Bots follow
expit(b0' + b2' y_{t-1}). Round 0 is an unanalysed warm-up drawn from the
intercepts alone.
"""

from __future__ import annotations

import logging
import sys
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Dict

import numpy as np

from . import _rng
from .errors import DataError
from .models import ModelSpec

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

log = logging.getLogger(__name__)

HUMAN_COEFS = (-1.31, -0.10, 1.97, 1.25)
BOT_COEFS = (-0.78, 2.68)
PI_GRID = (0.0, 0.25, 0.50, 0.75, 1.0)


@dataclass(frozen=True)
class SimConfig:
    pi_grid: tuple = PI_GRID
    J: int = 10
    T: int = 15
    M: int = 10000
    p_participate: float = 0.0018
    human_coefs: tuple = HUMAN_COEFS
    bot_coefs: tuple = BOT_COEFS
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "pi_grid", tuple(float(v) for v in self.pi_grid))
        object.__setattr__(self, "human_coefs", tuple(float(v) for v in self.human_coefs))
        object.__setattr__(self, "bot_coefs", tuple(float(v) for v in self.bot_coefs))
        if not self.pi_grid or any(not 0.0 <= v <= 1.0 for v in self.pi_grid):
            raise DataError("pi_grid values must lie in [0, 1]")
        if min(self.J, self.T, self.M) < 1:
            raise DataError("J, T and M must be at least 1")
        if not 0.0 <= self.p_participate <= 1.0:
            raise DataError("p_participate must lie in [0, 1]")
        if len(self.human_coefs) != 4 or len(self.bot_coefs) != 2:
            raise DataError("human_coefs needs 4 values and bot_coefs 2")
        if self.seed < 0:
            raise DataError("seed must be non-negative")

    @classmethod
    def from_file(cls, path, **overrides) -> "SimConfig":
        """Read ``key = value`` pairs (TOML syntax); keyword overrides win."""
        with open(path, "rb") as fh:
            try:
                raw = tomllib.load(fh)
            except tomllib.TOMLDecodeError as exc:
                raise DataError(f"{path}: {exc}") from None
        return cls.from_mapping({**raw, **{k: v for k, v in overrides.items() if v is not None}})

    @classmethod
    def from_mapping(cls, values) -> "SimConfig":
        known = {f.name for f in fields(cls)}
        bad = sorted(set(values) - known)
        if bad:
            raise DataError(f"unknown simulation config keys: {bad}")
        return cls(**values)

    def to_dict(self):
        return {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(self).items()}

    def with_seed(self, seed) -> "SimConfig":
        return replace(self, seed=int(seed))


@dataclass(frozen=True, eq=False)
class GamePanel:
    """Raw per-round decisions, one record per (cohort, participant, round).

    Records are ordered by cohort, participant, then round; rounds run
    0..T with round 0 the warm-up.
    """

    cohort: np.ndarray
    participant: np.ndarray
    round: np.ndarray
    is_human: np.ndarray
    y: np.ndarray
    pi: float
    cohort_sizes: tuple = field(default=())
    redraws: int = 0

    @property
    def n_participants(self):
        return int(sum(self.cohort_sizes))

    @property
    def cooperation_rate(self):
        """Cooperation rate over analysed (non-warm-up) rounds."""
        keep = self.round > self.round.min()
        return float(np.mean(self.y[keep]))

    def equals(self, other: "GamePanel") -> bool:
        return (
            self.pi == other.pi
            and tuple(self.cohort_sizes) == tuple(other.cohort_sizes)
            and all(
                np.array_equal(getattr(self, a), getattr(other, a))
                for a in ("cohort", "participant", "round", "is_human", "y")
            )
        )


def _expit(x):
    return 1.0 / (1.0 + np.exp(-x))


def _play_cohort(rng, n, pi, T, human_coefs, bot_coefs):
    b0, b1, b2, b3 = human_coefs
    c0, c2 = bot_coefs
    human = rng.random(n) >= pi
    u = rng.random((T + 1, n))
    y = np.empty((T + 1, n), dtype=np.int8)
    y[0] = u[0] < np.where(human, _expit(b0), _expit(c0))
    for t in range(1, T + 1):
        prev = y[t - 1].astype(np.float64)
        others = (prev.sum() - prev) / (n - 1)
        eta = np.where(human, b0 + b1 * t + b2 * prev + b3 * others, c0 + c2 * prev)
        y[t] = u[t] < _expit(eta)
    return human, y


def cohort_size(config: SimConfig, rng) -> tuple:
    """Draw a cohort size of at least two, returning (size, redraws)."""
    redraws = 0
    while True:
        n = int(rng.binomial(config.M, config.p_participate))
        if n >= 2:
            return n, redraws
        redraws += 1
        if redraws > 10_000:
            raise DataError("cohort sizes keep falling below 2; check M and p_participate")


def simulate_setting(config: SimConfig, pi: float, setting_seed: int) -> GamePanel:
    """Simulate every cohort of one setting with bot fraction ``pi``."""
    if not 0.0 <= pi <= 1.0:
        raise DataError(f"pi must lie in [0, 1], got {pi}")
    T = config.T
    parts = {"cohort": [], "participant": [], "round": [], "is_human": [], "y": []}
    sizes = []
    redraws = 0
    for j in range(config.J):
        rng = _rng.rng_for(setting_seed, _rng.COHORT, j)
        n, r = cohort_size(config, rng)
        redraws += r
        human, y = _play_cohort(rng, n, pi, T, config.human_coefs, config.bot_coefs)
        sizes.append(n)
        parts["cohort"].append(np.full(n * (T + 1), j + 1))
        parts["participant"].append(np.repeat(np.arange(1, n + 1), T + 1))
        parts["round"].append(np.tile(np.arange(T + 1), n))
        parts["is_human"].append(np.repeat(human, T + 1))
        parts["y"].append(y.T.reshape(-1))
    if redraws:
        log.info("setting pi=%s: redrew %d cohort(s) of size < 2", pi, redraws)
    arrays = {k: np.concatenate(v) for k, v in parts.items()}
    return GamePanel(
        cohort=arrays["cohort"].astype(np.int64),
        participant=arrays["participant"].astype(np.int64),
        round=arrays["round"].astype(np.int64),
        is_human=arrays["is_human"].astype(bool),
        y=arrays["y"].astype(np.int8),
        pi=float(pi),
        cohort_sizes=tuple(sizes),
        redraws=redraws,
    )


def setting_seed(master_seed: int, pi: float) -> int:
    """Seed for the setting at ``pi``; keyed by value, not grid position."""
    return _rng.child_seed(master_seed, _rng.SETTING, int(round(pi * 1_000_000)))


def simulate_grid(config: SimConfig) -> Dict[float, GamePanel]:
    return {pi: simulate_setting(config, pi, setting_seed(config.seed, pi)) for pi in config.pi_grid}


def interaction_model_spec(condition: str = "condition") -> ModelSpec:
    """Round trend, condition shift and round-by-condition interaction."""
    return ModelSpec(("round", condition, f"round:{condition}"), name="Interaction model")
