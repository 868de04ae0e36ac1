"""Datasets, fold assignment, class rebalancing and lag-feature construction."""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import _rng
from .errors import DataError, ParseError

PANEL_COLUMNS = ("cohort", "participant", "round")
PANEL_CSV_HEADER = (
    "setting_pi",
    "cohort",
    "participant",
    "round",
    "is_human",
    "y",
    "y_lag",
    "cohort_mean_lag",
)
LAG_FEATURES = ("round", "own_lag", "cohort_mean_lag")


def _frozen(a):
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """Binary-outcome observations with named real features.

    ``X`` has one row per observation and one column per entry of
    ``feature_names``. ``panel`` optionally carries (cohort, participant,
    round) keys for each row. Arrays are read-only after construction.
    """

    X: np.ndarray
    y: np.ndarray
    feature_names: tuple
    panel: Optional[np.ndarray] = None

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        y = np.asarray(self.y)
        names = tuple(self.feature_names)
        if X.ndim == 1:
            X = X.reshape(-1, len(names))
        if X.ndim != 2 or X.shape[1] != len(names):
            raise DataError(f"feature matrix has shape {X.shape} but {len(names)} feature names")
        if len(set(names)) != len(names):
            raise DataError(f"duplicate feature names in {names}")
        if y.shape != (X.shape[0],):
            raise DataError("label vector length does not match feature rows")
        if X.shape[0] < 1:
            raise DataError("dataset must contain at least one row")
        if not np.all((y == 0) | (y == 1)):
            raise DataError("labels must be exactly 0 or 1")
        object.__setattr__(self, "X", _frozen(X))
        object.__setattr__(self, "y", _frozen(y.astype(np.int8)))
        object.__setattr__(self, "feature_names", names)
        if self.panel is not None:
            panel = np.asarray(self.panel, dtype=np.int64)
            if panel.shape != (X.shape[0], 3):
                raise DataError("panel keys must be an (N, 3) array")
            object.__setattr__(self, "panel", _frozen(panel))

    def __len__(self):
        return self.X.shape[0]

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def rate(self):
        """Baseline rate: proportion of positive labels."""
        return float(np.mean(self.y))

    @property
    def n_positive(self):
        return int(np.sum(self.y))

    def columns(self, names: Sequence[str]) -> np.ndarray:
        missing = [c for c in names if c not in self.feature_names]
        if missing:
            raise DataError(f"dataset lacks features {missing}; has {list(self.feature_names)}")
        idx = [self.feature_names.index(c) for c in names]
        return self.X[:, idx]

    def subset(self, rows) -> "Dataset":
        rows = np.asarray(rows)
        panel = None if self.panel is None else self.panel[rows]
        return Dataset(self.X[rows], self.y[rows], self.feature_names, panel)

    def with_product(self, a: str, b: str, name: Optional[str] = None) -> "Dataset":
        """Append the elementwise product of two features as a new column."""
        prod = self.columns([a])[:, 0] * self.columns([b])[:, 0]
        name = name or f"{a}:{b}"
        X = np.column_stack([self.X, prod])
        return Dataset(X, self.y, self.feature_names + (name,), self.panel)

    def equals(self, other: "Dataset") -> bool:
        if self.feature_names != other.feature_names:
            return False
        if (self.panel is None) != (other.panel is None):
            return False
        same_panel = self.panel is None or np.array_equal(self.panel, other.panel)
        return same_panel and np.array_equal(self.X, other.X) and np.array_equal(self.y, other.y)


@dataclass(frozen=True, eq=False)
class FoldAssignment:
    """Row-index sets for K folds.

    For the partition scheme the folds are a disjoint cover of ``range(n)``;
    for the subsample scheme each fold is an independent draw of
    ``subset_size`` rows without replacement, and folds may overlap.
    Folds are numbered from 0.
    """

    folds: tuple
    n: int
    scheme: str
    seed: int
    stratified: bool = False
    subset_size: Optional[int] = None

    @property
    def K(self):
        return len(self.folds)

    @property
    def fold_of(self) -> np.ndarray:
        if self.scheme != "partition":
            raise DataError("fold_of is only defined for the partition scheme")
        out = np.empty(self.n, dtype=np.int64)
        for k, idx in enumerate(self.folds):
            out[idx] = k
        return out


@dataclass(frozen=True)
class RebalanceSpec:
    target_rate: float
    target_size: int
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.target_rate < 1.0:
            raise DataError("target_rate must lie strictly between 0 and 1")
        if self.target_size < 1:
            raise DataError("target_size must be positive")
        n_pos = self.n_positive
        if n_pos < 1 or self.target_size - n_pos < 1:
            raise DataError(
                f"target_rate {self.target_rate} with size {self.target_size} leaves a class empty"
            )

    @property
    def n_positive(self):
        return int(math.floor(self.target_rate * self.target_size + 0.5))


def _parse_label(cell, line):
    s = cell.strip().lower()
    if s in ("1", "true"):
        return 1
    if s in ("0", "false"):
        return 0
    try:
        v = float(s)
    except ValueError:
        v = None
    if v == 0.0 or v == 1.0:
        return int(v)
    raise ParseError(f"line {line}: label {cell!r} is not binary (0/1 or true/false)")


def load_csv(
    path,
    label_column: str,
    feature_columns: Sequence[str],
    panel_columns: Optional[Sequence[str]] = None,
) -> Dataset:
    """Read a headed UTF-8 CSV into a :class:`Dataset`, keeping file order."""
    if not os.path.isfile(path):
        raise ParseError(f"no such file: {path}")
    feature_columns = list(feature_columns)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        wanted = [label_column, *feature_columns, *(panel_columns or ())]
        missing = [c for c in wanted if c not in header]
        if missing:
            raise ParseError(f"{path}: missing columns {missing}")
        li = header.index(label_column)
        fi = [header.index(c) for c in feature_columns]
        pi = [header.index(c) for c in panel_columns] if panel_columns else None
        X, y, keys = [], [], []
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(f"line {line}: expected {len(header)} fields, got {len(row)}")
            y.append(_parse_label(row[li], line))
            feats = []
            for c, i in zip(feature_columns, fi):
                try:
                    feats.append(float(row[i]))
                except ValueError:
                    raise ParseError(f"line {line}: feature {c!r} value {row[i]!r} is not numeric") from None
            X.append(feats)
            if pi is not None:
                try:
                    keys.append([int(row[i]) for i in pi])
                except ValueError:
                    raise ParseError(f"line {line}: panel keys must be integers") from None
    if not y:
        raise ParseError(f"{path}: no data rows")
    X = np.array(X, dtype=np.float64).reshape(len(y), len(feature_columns))
    panel = np.array(keys, dtype=np.int64) if pi is not None else None
    return Dataset(X, np.array(y), tuple(feature_columns), panel)


def write_csv(dataset: Dataset, path, label_column: str = "y") -> None:
    """Write a dataset as a headed CSV (panel keys first when present)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        keys = list(PANEL_COLUMNS) if dataset.panel is not None else []
        w.writerow(keys + [label_column, *dataset.feature_names])
        for i in range(dataset.n):
            row = [] if dataset.panel is None else [int(v) for v in dataset.panel[i]]
            w.writerow(row + [int(dataset.y[i])] + [repr(float(v)) for v in dataset.X[i]])


def _check_k(K):
    if int(K) != K or K < 2:
        raise DataError(f"K must be an integer >= 2, got {K}")


def assign_folds(
    dataset: Dataset,
    K: int,
    scheme: str = "partition",
    subset_size: Optional[int] = None,
    stratified: bool = False,
    seed: int = 0,
) -> FoldAssignment:
    """Split rows into K folds.

    ``partition`` gives a disjoint cover with fold sizes differing by at most
    one; ``subsample`` draws K subsets of ``subset_size`` rows each. With
    ``stratified`` each class is split independently so every fold keeps the
    dataset's label rate.
    """
    _check_k(K)
    n = dataset.n
    rng = _rng.rng_for(seed, _rng.FOLDS)
    pos = np.flatnonzero(dataset.y == 1)
    neg = np.flatnonzero(dataset.y == 0)
    if scheme == "partition":
        if n < K:
            raise DataError(f"partition into K={K} folds needs at least {K} rows, got {n}")
        fold_of = np.empty(n, dtype=np.int64)
        if stratified:
            if min(len(pos), len(neg)) < K:
                raise DataError(f"stratified partition needs at least K={K} members of each class")
            p = rng.permutation(pos)
            q = rng.permutation(neg)
            fold_of[p] = np.arange(len(p)) % K
            fold_of[q] = (np.arange(len(q)) + len(p)) % K
        else:
            perm = rng.permutation(n)
            fold_of[perm] = np.arange(n) % K
        folds = tuple(_frozen(np.flatnonzero(fold_of == k)) for k in range(K))
        return FoldAssignment(folds, n, scheme, seed, stratified, None)
    if scheme == "subsample":
        if subset_size is None or subset_size < 1:
            raise DataError("subsample scheme needs a positive subset_size")
        if subset_size > n:
            raise DataError(f"subset_size {subset_size} exceeds dataset size {n}")
        folds = []
        if stratified:
            n_pos = int(math.floor(dataset.rate * subset_size + 0.5))
            if n_pos > len(pos) or subset_size - n_pos > len(neg):
                raise DataError("a class has too few members for a stratified subsample")
            if min(len(pos), len(neg)) < K:
                raise DataError(f"stratified subsampling needs at least K={K} members of each class")
        for _ in range(K):
            if stratified:
                idx = np.concatenate(
                    [
                        rng.choice(pos, n_pos, replace=False),
                        rng.choice(neg, subset_size - n_pos, replace=False),
                    ]
                )
            else:
                idx = rng.choice(n, subset_size, replace=False)
            folds.append(_frozen(np.sort(idx)))
        return FoldAssignment(tuple(folds), n, scheme, seed, stratified, subset_size)
    raise DataError(f"unknown fold scheme {scheme!r}; use 'partition' or 'subsample'")


def rebalance(dataset: Dataset, spec: RebalanceSpec) -> Dataset:
    """Resample rows per class, with replacement, to an exact size and rate."""
    pos = np.flatnonzero(dataset.y == 1)
    neg = np.flatnonzero(dataset.y == 0)
    if len(pos) == 0 or len(neg) == 0:
        raise DataError("rebalancing needs both classes present in the input")
    rng = _rng.rng_for(spec.seed, _rng.REBALANCE)
    n_pos = spec.n_positive
    rows = np.concatenate(
        [
            rng.choice(pos, n_pos, replace=True),
            rng.choice(neg, spec.target_size - n_pos, replace=True),
        ]
    )
    return dataset.subset(rng.permutation(rows))


def _panel_matrix(panel):
    """Reshape panel records to (participants, rounds) arrays."""
    cohort = np.asarray(panel.cohort)
    participant = np.asarray(panel.participant)
    rnd = np.asarray(panel.round)
    order = np.lexsort((rnd, participant, cohort))
    c, p, r = cohort[order], participant[order], rnd[order]
    new_person = np.r_[True, (c[1:] != c[:-1]) | (p[1:] != p[:-1])]
    n_people = int(new_person.sum())
    if len(order) % n_people:
        raise DataError("every participant must have the same number of rounds")
    n_rounds = len(order) // n_people
    r = r.reshape(n_people, n_rounds)
    if not np.all(r == r[0]) or np.any(np.diff(r[0]) != 1):
        raise DataError("rounds must be consecutive and identical for every participant")
    return order, n_people, n_rounds, r[0]


def lagged_features(panel, include=LAG_FEATURES) -> Dataset:
    """Turn raw game records into one model-ready row per (participant, round).

    The earliest recorded round is a warm-up: it supplies lags for the next
    round and never appears as a row. ``cohort_mean_lag`` is the previous
    round's cooperation rate among the *other* members of the cohort.
    """
    include = set(include)
    unknown = include - set(LAG_FEATURES)
    if unknown:
        raise DataError(f"unknown lag features {sorted(unknown)}")
    order, n_people, n_rounds, rounds = _panel_matrix(panel)
    if n_rounds < 2:
        raise DataError("panel needs a warm-up round before the first analysed round")
    y = np.asarray(panel.y)[order].reshape(n_people, n_rounds).astype(np.float64)
    cohort = np.asarray(panel.cohort)[order].reshape(n_people, n_rounds)[:, 0]
    participant = np.asarray(panel.participant)[order].reshape(n_people, n_rounds)[:, 0]
    _, cidx, sizes = np.unique(cohort, return_inverse=True, return_counts=True)
    if np.any(sizes < 2) and "cohort_mean_lag" in include:
        raise DataError("cohort_mean_lag needs at least two participants per cohort")
    prev = y[:, :-1]
    cols = {}
    cols["round"] = np.broadcast_to(rounds[1:].astype(np.float64), prev.shape)
    cols["own_lag"] = prev
    if "cohort_mean_lag" in include:
        sums = np.zeros((len(sizes), n_rounds - 1))
        np.add.at(sums, cidx, prev)
        cols["cohort_mean_lag"] = (sums[cidx] - prev) / (sizes[cidx][:, None] - 1)
    names = tuple(f for f in LAG_FEATURES if f in include)
    X = np.column_stack([cols[f].reshape(-1) for f in names]) if names else np.empty((prev.size, 0))
    labels = y[:, 1:].reshape(-1)
    keys = np.column_stack(
        [
            np.repeat(cohort, n_rounds - 1),
            np.repeat(participant, n_rounds - 1),
            np.tile(rounds[1:], n_people),
        ]
    )
    return Dataset(X, labels, names, keys)


def write_panel_csv(panel, path) -> None:
    """Export a game panel as analysis rows with both lags attached."""
    ds = lagged_features(panel)
    order, n_people, n_rounds, _ = _panel_matrix(panel)
    human = np.asarray(panel.is_human)[order].reshape(n_people, n_rounds)[:, 0]
    human = np.repeat(human, n_rounds - 1)
    pi = repr(float(panel.pi))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PANEL_CSV_HEADER)
        for i in range(ds.n):
            c, p, r = (int(v) for v in ds.panel[i])
            w.writerow(
                [pi, c, p, r, int(human[i]), int(ds.y[i]), int(ds.X[i, 1]), repr(float(ds.X[i, 2]))]
            )


def load_panel_dataset(path) -> Dataset:
    """Load a panel CSV export as the lag-feature dataset it was built from."""
    ds = load_csv(path, "y", ["round", "y_lag", "cohort_mean_lag"], PANEL_COLUMNS)
    return Dataset(ds.X, ds.y, LAG_FEATURES, ds.panel)


def read_panel_csv(path):
    """Rebuild a :class:`~predscore.simulation.GamePanel` from its CSV export.

    Warm-up decisions are recovered from the first analysed round's lags.
    """
    from .simulation import GamePanel

    if not os.path.isfile(path):
        raise ParseError(f"no such file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ParseError(f"{path}: no data rows")
    missing = [c for c in PANEL_CSV_HEADER if c not in rows[0]]
    if missing:
        raise ParseError(f"{path}: missing columns {missing}")
    try:
        cohort = np.array([int(r["cohort"]) for r in rows])
        participant = np.array([int(r["participant"]) for r in rows])
        rnd = np.array([int(r["round"]) for r in rows])
        human = np.array([int(r["is_human"]) for r in rows])
        y = np.array([_parse_label(r["y"], i + 2) for i, r in enumerate(rows)])
        y_lag = np.array([_parse_label(r["y_lag"], i + 2) for i, r in enumerate(rows)])
        pi = float(rows[0]["setting_pi"])
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from None
    first = rnd == rnd.min()
    _, sizes = np.unique(cohort[first], return_counts=True)
    cohort = np.r_[cohort, cohort[first]]
    participant = np.r_[participant, participant[first]]
    human = np.r_[human, human[first]]
    y = np.r_[y, y_lag[first]]
    rnd = np.r_[rnd, rnd[first] - 1]
    order = np.lexsort((rnd, participant, cohort))
    return GamePanel(
        cohort=cohort[order],
        participant=participant[order],
        round=rnd[order],
        is_human=human[order].astype(bool),
        y=y[order].astype(np.int8),
        pi=pi,
        cohort_sizes=tuple(int(s) for s in sizes),
    )
