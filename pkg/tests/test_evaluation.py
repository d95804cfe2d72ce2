import itertools
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats
from sklearn import metrics as skm

from aaspectra.evaluation import (DegenerateTargetError, classification_metrics, compute_metrics, kendall_tau_a,
                                  kfold_cv, kfold_indices, pearson, rankdata, regression_metrics)
from aaspectra.models import ModelSpec

KNN1 = ModelSpec("knn", {"n_neighbors": 1, "weights": "uniform", "metric": "euclidean"}, "classification")


def brute_tau_a(x, y):
    s = 0
    pairs = list(itertools.combinations(range(len(x)), 2))
    for i, j in pairs:
        s += np.sign(x[i] - x[j]) * np.sign(y[i] - y[j])
    return s / len(pairs)


def test_classification_hand_example():
    r = classification_metrics([1, 1, 0, 0], [1, 0, 0, 0], positive_class=1)
    assert r["accuracy"] == 0.75 and r["precision"] == 1.0 and r["recall"] == 0.5
    assert r["f_score"] == pytest.approx(2 / 3, abs=1e-15)


def test_classification_identity_and_degenerate():
    y = [0, 1, 2, 1, 0]
    assert all(v == 1.0 for v in classification_metrics(y, y).values.values())
    r = classification_metrics([1, 1, 0], [0, 0, 0], positive_class=1)
    assert r["precision"] == 0 and r["recall"] == 0 and r["f_score"] == 0
    assert "precision[1]" in r.zero_division
    with pytest.raises(ValueError):
        classification_metrics([1, 0], [1])


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 50), st.integers(2, 4), st.integers(0, 2 ** 31))
def test_classification_matches_sklearn(n, k, seed):
    r = np.random.default_rng(seed)
    yt, yp = r.integers(0, k, n), r.integers(0, k, n)
    labels = np.arange(k)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        macro = classification_metrics(yt, yp, labels=labels)
        assert macro["accuracy"] == pytest.approx(skm.accuracy_score(yt, yp), abs=1e-12)
        for name, fn in (("precision", skm.precision_score), ("recall", skm.recall_score),
                         ("f_score", skm.f1_score)):
            want = fn(yt, yp, labels=labels, average="macro", zero_division=0)
            assert macro[name] == pytest.approx(want, abs=1e-12)
        binary = classification_metrics(yt, yp, positive_class=1)
        for name, fn in (("precision", skm.precision_score), ("recall", skm.recall_score),
                         ("f_score", skm.f1_score)):
            want = fn(yt, yp, labels=[1], average="macro", zero_division=0)
            assert binary[name] == pytest.approx(want, abs=1e-12)


def test_regression_examples():
    r = regression_metrics([1, 2, 3], [1, 2, 3])
    assert r.values == {"pearson": 1.0, "kendall_tau": 1.0, "spearman": 1.0, "r_score": 1.0}
    r = regression_metrics([1, 2, 3], [-1, -2, -3])
    assert (r["pearson"], r["kendall_tau"], r["spearman"]) == (-1.0, -1.0, -1.0)
    assert kendall_tau_a([1, 2, 3, 4], [1, 3, 2, 4]) == pytest.approx(2 / 3, abs=1e-15)
    with pytest.raises(DegenerateTargetError, match="degenerate target"):
        regression_metrics([2, 2, 2], [1, 2, 3])


def test_constant_prediction_scores_zero_correlation():
    r = regression_metrics([1, 2, 3, 4], [2, 2, 2, 2])
    assert r["pearson"] == r["kendall_tau"] == r["spearman"] == 0.0
    assert r["r_score"] == pytest.approx(1 - 6 / 5)


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 50), st.integers(0, 2 ** 31), st.booleans())
def test_regression_matches_oracles(n, seed, ties):
    r = np.random.default_rng(seed)
    draw = (lambda: r.integers(0, 5, n).astype(float)) if ties else (lambda: r.normal(size=n))
    yt, yp = draw(), draw()
    if np.ptp(yt) == 0 or np.ptp(yp) == 0:
        return
    m = regression_metrics(yt, yp)
    assert m["kendall_tau"] == pytest.approx(brute_tau_a(yt, yp), abs=1e-12)
    assert m["spearman"] == pytest.approx(np.corrcoef(stats.rankdata(yt), stats.rankdata(yp))[0, 1], abs=1e-12)
    assert m["spearman"] == pytest.approx(stats.spearmanr(yt, yp).statistic, abs=1e-12)
    assert m["pearson"] == pytest.approx(stats.pearsonr(yt, yp).statistic, abs=1e-12)
    assert m["r_score"] == pytest.approx(skm.r2_score(yt, yp), abs=1e-12)
    if not ties:
        assert m["kendall_tau"] == pytest.approx(stats.kendalltau(yt, yp).statistic, abs=1e-12)
    np.testing.assert_array_equal(rankdata(yt), stats.rankdata(yt))


@settings(max_examples=60, deadline=None)
@given(st.integers(3, 40), st.integers(0, 2 ** 31), st.floats(0.01, 100), st.floats(-100, 100))
def test_correlation_invariances(n, seed, a, b):
    r = np.random.default_rng(seed)
    x, y = r.normal(size=n), r.normal(size=n)
    base = regression_metrics(y, x)
    assert pearson(a * x + b, y) == pytest.approx(base["pearson"], abs=1e-9)
    mono = regression_metrics(y, np.exp(x) * a)
    assert mono["kendall_tau"] == pytest.approx(base["kendall_tau"], abs=1e-12)
    assert mono["spearman"] == pytest.approx(base["spearman"], abs=1e-12)
    assert base["r_score"] <= 1


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 40), st.integers(2, 4), st.integers(0, 2 ** 31))
def test_macro_invariant_under_relabeling(n, k, seed):
    r = np.random.default_rng(seed)
    yt, yp = r.integers(0, k, n), r.integers(0, k, n)
    perm = r.permutation(k)
    a = classification_metrics(yt, yp, labels=np.arange(k))
    b = classification_metrics(perm[yt], perm[yp], labels=np.arange(k))
    for name in ("precision", "recall", "accuracy"):
        assert a[name] == pytest.approx(b[name], abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.integers(4, 120), st.integers(2, 10), st.integers(0, 2 ** 31), st.booleans())
def test_fold_partition(n, k, seed, stratified):
    if n < k:
        return
    labels = np.random.default_rng(seed).integers(0, 3, n) if stratified else None
    folds = kfold_indices(n, k, seed, labels)
    again = kfold_indices(n, k, seed, labels)
    assert len(folds) == k
    assert all(np.array_equal(a, b) for a, b in zip(folds, again))
    allidx = np.concatenate(folds)
    assert sorted(allidx.tolist()) == list(range(n))
    assert all(f.size >= 1 for f in folds)
    if stratified:
        for c in np.unique(labels):
            counts = [int((labels[f] == c).sum()) for f in folds]
            assert max(counts) - min(counts) <= 1


def test_kfold_preconditions():
    with pytest.raises(ValueError):
        kfold_indices(10, 1, 0)
    with pytest.raises(ValueError):
        kfold_indices(3, 5, 0)


def test_leave_one_out_on_twins_is_perfect():
    r = np.random.default_rng(5)
    base = r.normal(size=(8, 3))
    X = np.repeat(base, 2, axis=0)
    y = np.repeat(np.arange(8) % 2, 2)
    with pytest.warns(UserWarning):
        cv = kfold_cv(KNN1, X, y, k=len(y), seed=0)
    assert len(cv.folds) == len(y)
    assert all(f["accuracy"] == 1.0 for f in cv.folds)
    assert cv.mean["accuracy"] == 1.0
    np.testing.assert_array_equal(cv.oof_predictions, y)


def test_cv_mean_between_fold_extremes_and_deterministic(rng):
    X = rng.normal(size=(60, 4))
    y = (X[:, 0] + 0.8 * rng.normal(size=60) > 0).astype(int)
    a = kfold_cv(KNN1, X, y, k=5, seed=3)
    b = kfold_cv(KNN1, X, y, k=5, seed=3)
    assert a.mean == b.mean
    for m, v in a.mean.items():
        per = [f[m] for f in a.folds]
        assert min(per) - 1e-12 <= v <= max(per) + 1e-12
    spec = ModelSpec("linear", {"alpha": 1.0}, "regression")
    yr = X @ [1.0, -2.0, 0.5, 0.0] + 0.1 * rng.normal(size=60)
    cv = kfold_cv(spec, X, yr, k=4, seed=1)
    per = [f["pearson"] for f in cv.folds]
    assert min(per) <= cv.mean["pearson"] <= max(per)
    assert np.isfinite(cv.oof_predictions).all()


def test_compute_metrics_dispatch():
    assert compute_metrics("classification", [0, 1], [0, 1], 2)["f_score"] == 1.0
    assert compute_metrics("regression", [0.0, 1.0], [0.0, 1.0])["pearson"] == 1.0
