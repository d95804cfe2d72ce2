"""Gaussian and Bernoulli naive Bayes classifiers."""

from __future__ import annotations

import numpy as np
from scipy.special import logsumexp

from .base import Classifier, as_features, register


def _log_prior(y, n_classes):
    counts = np.bincount(y, minlength=n_classes).astype(float)
    with np.errstate(divide="ignore"):
        return np.log(counts / counts.sum()), counts


def _normalize(jll: np.ndarray) -> np.ndarray:
    return np.exp(jll - logsumexp(jll, axis=1, keepdims=True))


@register
class GaussianNB(Classifier):
    """Per-class diagonal Gaussians; variances get 1e-9 * max feature variance added."""

    fitted_attrs = ("means", "variances", "log_prior")

    def __init__(self, n_classes=None, var_smoothing=1e-9):
        super().__init__(n_classes=n_classes, var_smoothing=var_smoothing)

    def fit(self, X, y):
        X = as_features(X)
        y = self._prepare(y)
        K, d = self.n_classes, X.shape[1]
        self.log_prior, counts = _log_prior(y, K)
        eps = self.params["var_smoothing"] * max(float(X.var(axis=0).max()), 0.0)
        eps = eps if eps > 0 else self.params["var_smoothing"]
        self.means = np.zeros((K, d))
        self.variances = np.ones((K, d))
        for c in range(K):
            if counts[c]:
                Xc = X[y == c]
                self.means[c] = Xc.mean(0)
                self.variances[c] = Xc.var(0) + eps
        return self

    def joint_log_likelihood(self, X):
        X = as_features(X)
        ll = -0.5 * (np.log(2 * np.pi * self.variances)[None]
                     + (X[:, None, :] - self.means[None]) ** 2 / self.variances[None]).sum(-1)
        return ll + self.log_prior[None]

    def predict_proba(self, X):
        return _normalize(self.joint_log_likelihood(X))


@register
class BernoulliNB(Classifier):
    """Features are binarized at ``binarize``; Laplace smoothing ``alpha``."""

    fitted_attrs = ("log_p", "log_q", "log_prior")

    def __init__(self, n_classes=None, alpha=1.0, binarize=0.5):
        super().__init__(n_classes=n_classes, alpha=alpha, binarize=binarize)

    def fit(self, X, y):
        X = as_features(X) > self.params["binarize"]
        y = self._prepare(y)
        a = self.params["alpha"]
        self.log_prior, counts = _log_prior(y, self.n_classes)
        on = np.stack([X[y == c].sum(0) for c in range(self.n_classes)]).astype(float)
        p = (on + a) / (counts[:, None] + 2 * a)
        self.log_p, self.log_q = np.log(p), np.log1p(-p)
        return self

    def predict_proba(self, X):
        B = (as_features(X) > self.params["binarize"]).astype(float)
        jll = B @ self.log_p.T + (1 - B) @ self.log_q.T + self.log_prior[None]
        return _normalize(jll)
