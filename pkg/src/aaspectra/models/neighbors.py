"""k-nearest neighbours (brute force)."""

from __future__ import annotations

import numpy as np

from .base import Classifier, Estimator, as_features, register


def pairwise_distances(A: np.ndarray, B: np.ndarray, metric: str) -> np.ndarray:
    if metric == "euclidean":
        sq = (A ** 2).sum(1)[:, None] + (B ** 2).sum(1)[None, :] - 2 * A @ B.T
        return np.sqrt(np.maximum(sq, 0.0))
    if metric == "manhattan":
        return np.abs(A[:, None, :] - B[None, :, :]).sum(-1)
    raise ValueError(f"unknown metric {metric!r}")


class _KNN:
    def _store(self, X, y):
        self.X_train = as_features(X).copy()
        self.y_train = np.asarray(y).copy()

    def _neighbours(self, X):
        """Indices and weights of the k nearest training rows (ties: lower index)."""
        X = as_features(X)
        if X.shape[1] != self.X_train.shape[1]:
            raise ValueError(f"expected {self.X_train.shape[1]} features, got {X.shape[1]}")
        k = min(self.params["n_neighbors"], self.X_train.shape[0])
        D = pairwise_distances(X, self.X_train, self.params["metric"])
        idx = np.argsort(D, axis=1, kind="stable")[:, :k]
        dist = np.take_along_axis(D, idx, axis=1)
        if self.params["weights"] == "uniform":
            w = np.ones_like(dist)
        else:
            exact = dist == 0
            with np.errstate(divide="ignore"):
                w = 1.0 / dist
            # a query sitting on training points is decided by those points only
            hit = exact.any(axis=1)
            w[hit] = exact[hit].astype(float)
        return idx, w


@register
class KNNClassifier(_KNN, Classifier):
    fitted_attrs = ("X_train", "y_train")
    allows_single_class = True

    def __init__(self, n_classes=None, n_neighbors=5, weights="uniform", metric="euclidean"):
        super().__init__(n_classes=n_classes, n_neighbors=n_neighbors, weights=weights, metric=metric)

    def fit(self, X, y):
        self._store(X, self._prepare(y))
        return self

    def predict_proba(self, X):
        idx, w = self._neighbours(X)
        labels = self.y_train[idx]
        out = np.zeros((idx.shape[0], self.n_classes))
        for c in range(self.n_classes):
            out[:, c] = (w * (labels == c)).sum(1)
        return out / out.sum(1, keepdims=True)


@register
class KNNRegressor(_KNN, Estimator):
    fitted_attrs = ("X_train", "y_train")

    def __init__(self, n_neighbors=5, weights="uniform", metric="euclidean"):
        super().__init__(n_neighbors=n_neighbors, weights=weights, metric=metric)

    def fit(self, X, y):
        self._store(X, np.asarray(y, float))
        return self

    def predict(self, X):
        idx, w = self._neighbours(X)
        return (w * self.y_train[idx]).sum(1) / w.sum(1)
