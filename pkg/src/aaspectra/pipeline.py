"""Dataset ingestion, train/test splitting and min-max scaling."""

from __future__ import annotations

import logging
import math
import warnings
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

log = logging.getLogger(__name__)

TASKS = ("regression", "classification")


@dataclass
class Dataset:
    sequences: list[str]
    targets: np.ndarray
    task: str
    class_names: list[str] | None = None
    dropped_count: int = 0

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValueError(f"task must be one of {TASKS}, got {self.task!r}")
        self.targets = np.asarray(self.targets, dtype=int if self.task == "classification" else float)
        if len(self.sequences) != len(self.targets):
            raise ValueError("sequences and targets differ in length")

    def __len__(self):
        return len(self.sequences)

    @property
    def n_classes(self) -> int | None:
        return len(self.class_names) if self.class_names is not None else None

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=int)
        return Dataset([self.sequences[i] for i in idx], self.targets[idx], self.task, self.class_names)


def _is_missing(v) -> bool:
    if v is None:
        return True
    if isinstance(v, float) and math.isnan(v):
        return True
    return isinstance(v, str) and not v.strip()


def load_dataset(path, sequence_column: str = "sequence", target_column: str = "target",
                 task: str = "regression") -> Dataset:
    """Read a CSV of sequences and responses, dropping rows with missing values.

    Classification labels become contiguous integer ids in order of first
    appearance.
    """
    df = pd.read_csv(path, dtype=str, keep_default_na=False)
    for col in (sequence_column, target_column):
        if col not in df.columns:
            raise KeyError(f"column {col!r} not found in {path}")
    seqs, raw = [], []
    dropped = 0
    for s, t in zip(df[sequence_column], df[target_column]):
        if _is_missing(s) or _is_missing(t) or t.strip().lower() in ("nan", "na", "null"):
            dropped += 1
            continue
        seqs.append(s.strip())
        raw.append(t.strip())
    if not seqs:
        raise ValueError(f"{path}: no rows left after removing missing values")
    if dropped:
        log.info("dropped %d rows with missing sequence or target", dropped)

    if task == "classification":
        class_names: list[str] = []
        ids = {}
        targets = []
        for t in raw:
            if t not in ids:
                ids[t] = len(class_names)
                class_names.append(t)
            targets.append(ids[t])
        ds = Dataset(seqs, np.array(targets), task, class_names, dropped)
    else:
        ds = Dataset(seqs, np.array([float(t) for t in raw]), task, None, dropped)
    _warn_conflicting_duplicates(ds)
    return ds


def _warn_conflicting_duplicates(ds: Dataset) -> None:
    seen = defaultdict(set)
    for s, t in zip(ds.sequences, ds.targets.tolist()):
        seen[s].add(t)
    conflicts = [s for s, ts in seen.items() if len(ts) > 1]
    if conflicts:
        warnings.warn(f"{len(conflicts)} duplicate sequences with conflicting targets kept: "
                      + ", ".join(c[:20] for c in conflicts[:5]))


def split_indices(n: int, test_fraction: float, seed: int, labels=None) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic shuffled split of ``range(n)``.

    With ``labels``, each class contributes floor(n_c * f) test rows; the
    rows still missing to reach round(n * f) overall go to the classes with
    the largest fractional remainders (ties: lower class id). Singleton
    classes always stay in training.
    """
    if not 0 < test_fraction < 1:
        raise ValueError("test_fraction must lie in (0, 1)")
    if n == 0:
        raise ValueError("cannot split an empty dataset")
    rng = np.random.default_rng(seed)
    if labels is None:
        perm = rng.permutation(n)
        n_test = int(round(n * test_fraction))
        n_test = min(max(n_test, 1), n - 1) if n > 1 else 0
        return np.sort(perm[n_test:]), np.sort(perm[:n_test])

    labels = np.asarray(labels)
    classes = np.unique(labels)
    members = {c: rng.permutation(np.flatnonzero(labels == c)) for c in classes}
    exact = {c: len(members[c]) * test_fraction for c in classes}
    quota = {c: int(math.floor(exact[c])) for c in classes}
    target_total = int(round(n * test_fraction))
    eligible = [c for c in classes if len(members[c]) > 1]
    for c in classes:
        if len(members[c]) == 1:
            warnings.warn(f"class {c} has a single member; it is kept in the training set")
            quota[c] = 0
    order = sorted(eligible, key=lambda c: (-(exact[c] - quota[c]), c))
    missing = target_total - sum(quota.values())
    for c in order:
        if missing <= 0:
            break
        if quota[c] < len(members[c]) - 1:
            quota[c] += 1
            missing -= 1
    test = np.concatenate([members[c][:quota[c]] for c in classes]) if classes.size else np.array([], int)
    train = np.concatenate([members[c][quota[c]:] for c in classes])
    return np.sort(train.astype(int)), np.sort(test.astype(int))


def split_dataset(ds: Dataset, test_fraction: float = 0.2, seed: int = 0,
                  stratify: bool | None = None) -> tuple[Dataset, Dataset]:
    if stratify is None:
        stratify = ds.task == "classification"
    labels = ds.targets if (stratify and ds.task == "classification") else None
    tr, te = split_indices(len(ds), test_fraction, seed, labels)
    return ds.subset(tr), ds.subset(te)


@dataclass
class MinMaxScaler:
    data_min: np.ndarray = field(default_factory=lambda: np.zeros(0))
    data_max: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def n_features(self) -> int:
        return self.data_min.size

    def transform(self, X) -> np.ndarray:
        return apply_minmax(self, X)

    def to_dict(self) -> dict:
        return {"min": self.data_min.tolist(), "max": self.data_max.tolist()}

    @classmethod
    def from_dict(cls, d) -> "MinMaxScaler":
        return cls(np.asarray(d["min"], dtype=float), np.asarray(d["max"], dtype=float))


def fit_minmax(X) -> MinMaxScaler:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("fit_minmax expects a non-empty 2-D matrix")
    return MinMaxScaler(X.min(axis=0), X.max(axis=0))


def apply_minmax(scaler: MinMaxScaler, X) -> np.ndarray:
    """(x - min) / (max - min), clipped to [0, 1]; constant features map to 0."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != scaler.n_features:
        raise ValueError(f"feature dimension {X.shape[-1]} != scaler dimension {scaler.n_features}")
    span = scaler.data_max - scaler.data_min
    safe = np.where(span > 0, span, 1.0)
    out = (X - scaler.data_min) / safe
    out[:, span <= 0] = 0.0
    return np.clip(out, 0.0, 1.0)
