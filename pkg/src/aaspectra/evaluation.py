"""Performance metrics and k-fold cross-validation."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

CLASSIFICATION_METRICS = ("accuracy", "precision", "recall", "f_score")
REGRESSION_METRICS = ("pearson", "kendall_tau", "spearman", "r_score")
DEFAULT_PRIMARY = {"classification": "f_score", "regression": "pearson"}


class DegenerateTargetError(ValueError):
    pass


@dataclass
class MetricsReport:
    task: str
    values: dict[str, float]
    zero_division: list[str] = field(default_factory=list)

    def __getitem__(self, key):
        return self.values[key]

    def to_dict(self) -> dict:
        d = {"task": self.task, "values": dict(self.values)}
        if self.zero_division:
            d["zero_division"] = list(self.zero_division)
        return d


def _safe_div(num: float, den: float, name: str, flags: list[str]) -> float:
    if den == 0:
        flags.append(name)
        return 0.0
    return num / den


def classification_metrics(y_true, y_pred, positive_class=None, labels=None) -> MetricsReport:
    """Accuracy, precision, recall and F-score.

    With ``positive_class`` the binary formulas are used for that class;
    otherwise precision/recall/F are macro-averaged over ``labels`` (default:
    the union of observed labels). Zero denominators give 0 and are listed in
    ``zero_division``.
    """
    yt, yp = np.asarray(y_true), np.asarray(y_pred)
    if yt.shape != yp.shape:
        raise ValueError(f"length mismatch: {yt.size} vs {yp.size}")
    if yt.size == 0:
        raise ValueError("metrics need at least one sample")
    flags: list[str] = []
    acc = float(np.mean(yt == yp))

    def prf(c, tag):
        tp = float(np.sum((yp == c) & (yt == c)))
        fp = float(np.sum((yp == c) & (yt != c)))
        fn = float(np.sum((yp != c) & (yt == c)))
        p = _safe_div(tp, tp + fp, f"precision[{tag}]", flags)
        r = _safe_div(tp, tp + fn, f"recall[{tag}]", flags)
        f = _safe_div(2 * p * r, p + r, f"f_score[{tag}]", flags)
        return p, r, f

    if positive_class is not None:
        p, r, f = prf(positive_class, positive_class)
    else:
        classes = np.unique(np.concatenate([yt, yp])) if labels is None else np.asarray(labels)
        scores = np.array([prf(c, c) for c in classes])
        p, r, f = scores.mean(axis=0)
    return MetricsReport("classification",
                         {"accuracy": acc, "precision": float(p), "recall": float(r), "f_score": float(f)},
                         flags)


def pearson(x, y) -> float:
    x, y = np.asarray(x, float), np.asarray(y, float)
    dx, dy = x - x.mean(), y - y.mean()
    den = math.sqrt(float(dx @ dx) * float(dy @ dy))
    if den == 0:
        raise DegenerateTargetError("degenerate target: zero variance")
    return float(np.clip((dx @ dy) / den, -1.0, 1.0))


def rankdata(x) -> np.ndarray:
    """Ranks starting at 1; tied values share their average rank."""
    x = np.asarray(x, float)
    order = np.argsort(x, kind="mergesort")
    ranks = np.empty(x.size)
    xs = x[order]
    i = 0
    while i < x.size:
        j = i
        while j + 1 < x.size and xs[j + 1] == xs[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2 + 1
        i = j + 1
    return ranks


def kendall_tau_a(x, y) -> float:
    """(concordant - discordant) / (n(n-1)/2), no tie correction."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    n = x.size
    s = 0.0
    for i in range(n - 1):
        s += float(np.sum(np.sign(x[i + 1:] - x[i]) * np.sign(y[i + 1:] - y[i])))
    return s / (n * (n - 1) / 2)


def regression_metrics(y_true, y_pred) -> MetricsReport:
    yt, yp = np.asarray(y_true, float), np.asarray(y_pred, float)
    if yt.shape != yp.shape:
        raise ValueError(f"length mismatch: {yt.size} vs {yp.size}")
    if yt.size < 2:
        raise ValueError("regression metrics need at least 2 samples")
    if np.ptp(yt) == 0:
        raise DegenerateTargetError("degenerate target: y_true is constant")
    if np.ptp(yp) == 0:
        # correlations are undefined for a constant prediction; report 0
        r = tau = rho = 0.0
    else:
        r = pearson(yt, yp)
        tau = kendall_tau_a(yt, yp)
        rho = pearson(rankdata(yt), rankdata(yp))
    ss_res = float(np.sum((yt - yp) ** 2))
    ss_tot = float(np.sum((yt - yt.mean()) ** 2))
    return MetricsReport("regression", {"pearson": r, "kendall_tau": tau, "spearman": rho,
                                        "r_score": 1.0 - ss_res / ss_tot})


def compute_metrics(task: str, y_true, y_pred, n_classes: int | None = None) -> MetricsReport:
    if task == "classification":
        labels = np.arange(n_classes) if n_classes else None
        positive = 1 if n_classes == 2 else None
        return classification_metrics(y_true, y_pred, positive_class=positive,
                                       labels=None if positive is not None else labels)
    return regression_metrics(y_true, y_pred)


def kfold_indices(n: int, k: int, seed: int, labels=None) -> list[np.ndarray]:
    """Deterministic fold assignment; stratified round-robin when labels are given."""
    if k < 2:
        raise ValueError("k must be >= 2")
    if n < k:
        raise ValueError(f"cannot make {k} folds from {n} samples")
    rng = np.random.default_rng(seed)
    fold_of = np.empty(n, dtype=int)
    if labels is None:
        perm = rng.permutation(n)
        fold_of[perm] = np.arange(n) % k
    else:
        labels = np.asarray(labels)
        offset = 0
        for c in np.unique(labels):
            idx = rng.permutation(np.flatnonzero(labels == c))
            fold_of[idx] = (np.arange(idx.size) + offset) % k
            offset += idx.size
    return [np.flatnonzero(fold_of == f) for f in range(k)]


@dataclass
class CVResult:
    mean: dict[str, float]
    folds: list[MetricsReport | None]
    excluded_folds: list[int]
    oof_predictions: np.ndarray
    oof_scores: np.ndarray | None = None

    def score(self, metric: str) -> float:
        return self.mean[metric]


def kfold_cv(spec, X, y, k: int = 5, seed: int = 0, n_classes: int | None = None) -> CVResult:
    """k-fold cross-validation of one model spec on raw (unscaled) features.

    A min-max scaler is fitted on the training folds of every split and
    applied to the held-out fold. Classification folds are stratified. A fold
    whose held-out part holds a single class (or, for regression, a constant
    target) keeps its report in ``folds`` where one exists but is left out of
    the mean with a warning; when every fold is left out, the mean is taken
    over the pooled out-of-fold predictions. Out-of-fold predictions (and
    class scores) are returned for later use in calibration.
    """
    from .models import predict_scores, train_model
    from .pipeline import apply_minmax, fit_minmax

    X = np.asarray(X, float)
    y = np.asarray(y)
    task = spec.task
    if task == "classification" and n_classes is None:
        n_classes = max(int(y.max()) + 1, 2)
    folds = kfold_indices(len(y), k, seed, y if task == "classification" else None)
    oof = np.full(len(y), np.nan)
    oof_scores = np.full((len(y), n_classes), np.nan) if task == "classification" else None
    reports, excluded = [], []
    for f, test_idx in enumerate(folds):
        train_idx = np.setdiff1d(np.arange(len(y)), test_idx)
        scaler = fit_minmax(X[train_idx])
        model = train_model(spec, apply_minmax(scaler, X[train_idx]), y[train_idx], n_classes=n_classes)
        Xt = apply_minmax(scaler, X[test_idx])
        if task == "classification":
            pred, scores = predict_scores(model, Xt)
            oof_scores[test_idx] = scores
        else:
            pred = model.predict(Xt)
        oof[test_idx] = pred
        if task == "classification" and np.unique(y[test_idx]).size < 2:
            excluded.append(f)
        if task == "regression" and (test_idx.size < 2 or np.ptp(y[test_idx]) == 0):
            excluded.append(f)
            reports.append(None)
            continue
        reports.append(compute_metrics(task, y[test_idx], pred, n_classes))
    kept = [r for f, r in enumerate(reports) if f not in excluded]
    if kept:
        if excluded:
            warnings.warn(f"folds {excluded} hold a single class or constant target; excluded from the mean")
        names = kept[0].values.keys()
        mean = {m: float(np.mean([r.values[m] for r in kept])) for m in names}
    else:
        # every fold degenerate (e.g. leave-one-out): score the pooled out-of-fold predictions
        warnings.warn("every fold is degenerate; the mean is computed on pooled out-of-fold predictions")
        mean = dict(compute_metrics(task, y, oof if task == "regression" else oof.astype(int), n_classes).values)
    return CVResult(mean, reports, excluded, oof, oof_scores)
