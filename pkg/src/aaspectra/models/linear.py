"""Linear models: ridge, multinomial logistic regression, linear SVMs.

The SVMs minimize lam/2 ||w||^2 + mean loss with lam = 1 / (C n).
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit, logsumexp, softmax

from .base import Classifier, DegenerateTrainingData, Estimator, as_features, register


@register
class Ridge(Estimator):
    """Least squares with an L2 penalty alpha*||w||^2; the intercept is not penalized."""

    fitted_attrs = ("coef", "intercept")

    def __init__(self, alpha=1.0):
        super().__init__(alpha=alpha)

    def fit(self, X, y):
        X = as_features(X)
        y = np.asarray(y, float)
        xm, ym = X.mean(0), y.mean()
        Xc, yc = X - xm, y - ym
        d = X.shape[1]
        a = self.params["alpha"]
        if a > 0:
            A = np.vstack([Xc, np.sqrt(a) * np.eye(d)])
            b = np.concatenate([yc, np.zeros(d)])
        else:
            A, b = Xc, yc
        self.coef = np.linalg.lstsq(A, b, rcond=None)[0]
        self.intercept = float(ym - xm @ self.coef)
        return self

    def predict(self, X):
        return as_features(X) @ self.coef + self.intercept


@register
class LogisticRegression(Classifier):
    """Multinomial logistic regression, objective sum(CE) + alpha/2 * ||W||^2, solved with L-BFGS."""

    fitted_attrs = ("coef", "intercept")

    def __init__(self, n_classes=None, alpha=1.0, max_iter=500):
        super().__init__(n_classes=n_classes, alpha=alpha, max_iter=max_iter)

    def fit(self, X, y):
        X = as_features(X)
        y = self._prepare(y)
        n, d = X.shape
        K = self.n_classes
        Y = np.eye(K)[y]
        a = self.params["alpha"]

        def objective(theta):
            W = theta[: d * K].reshape(d, K)
            b = theta[d * K:]
            Z = X @ W + b
            lse = logsumexp(Z, axis=1)
            loss = float(np.sum(lse - (Z * Y).sum(1))) + 0.5 * a * float(np.sum(W * W))
            G = softmax(Z, axis=1) - Y
            gW = X.T @ G + a * W
            return loss, np.concatenate([gW.ravel(), G.sum(0)])

        res = minimize(objective, np.zeros(d * K + K), jac=True, method="L-BFGS-B",
                       options={"maxiter": self.params["max_iter"]})
        if not np.all(np.isfinite(res.x)):
            raise DegenerateTrainingData("degenerate training data: logistic fit diverged")
        self.coef = res.x[: d * K].reshape(d, K)
        self.intercept = res.x[d * K:]
        return self

    def predict_proba(self, X):
        return softmax(as_features(X) @ self.coef + self.intercept, axis=1)


def _subgradient_descent(loss_grad, dim: int, lam: float, n_iter: int, eta: float = 0.5):
    """Minimize lam/2 ||w||^2 + mean loss by full-batch subgradient steps.

    Steps are scaled per coordinate by the root of the accumulated squared
    subgradients (AdaGrad), which keeps small-lam problems from stalling.
    The bias is the last coordinate and is penalized like the others.
    Returns the iterate with the lowest objective seen.
    """
    w = np.zeros(dim)
    acc = np.zeros(dim)
    best, best_obj = w.copy(), np.inf
    for _ in range(n_iter):
        obj, g = loss_grad(w)
        obj += 0.5 * lam * float(w @ w)
        g = g + lam * w
        if obj < best_obj:
            best, best_obj = w.copy(), obj
        acc += g * g
        w = w - eta * g / (np.sqrt(acc) + 1e-12)
    return best


def _augment(X):
    return np.hstack([X, np.ones((X.shape[0], 1))])


@register
class LinearSVC(Classifier):
    """One-vs-rest hinge-loss machines; scores are sigmoid (binary) or softmax of margins."""

    fitted_attrs = ("coef",)

    def __init__(self, n_classes=None, C=1.0, max_iter=1000):
        super().__init__(n_classes=n_classes, C=C, max_iter=max_iter)

    def fit(self, X, y):
        Xa = _augment(as_features(X))
        y = self._prepare(y)
        n = Xa.shape[0]
        lam = 1.0 / (self.params["C"] * n)
        targets = [1] if self.n_classes == 2 else range(self.n_classes)
        coefs = []
        for c in targets:
            s = np.where(y == c, 1.0, -1.0)

            def loss_grad(w, s=s):
                margin = s * (Xa @ w)
                active = margin < 1
                return float(np.mean(np.maximum(0, 1 - margin))), -(Xa[active] * s[active, None]).sum(0) / n

            coefs.append(_subgradient_descent(loss_grad, Xa.shape[1], lam, self.params["max_iter"]))
        self.coef = np.stack(coefs, axis=1)
        return self

    def decision_function(self, X):
        return _augment(as_features(X)) @ self.coef

    def predict_proba(self, X):
        m = self.decision_function(X)
        if self.n_classes == 2:
            p = expit(m[:, 0])
            return np.column_stack([1 - p, p])
        return softmax(m, axis=1)


@register
class LinearSVR(Estimator):
    """Epsilon-insensitive linear regression on the standardized target."""

    fitted_attrs = ("coef", "y_mean", "y_scale")

    def __init__(self, C=1.0, epsilon=0.1, max_iter=1000):
        super().__init__(C=C, epsilon=epsilon, max_iter=max_iter)

    def fit(self, X, y):
        Xa = _augment(as_features(X))
        y = np.asarray(y, float)
        self.y_mean = float(y.mean())
        self.y_scale = float(y.std()) or 1.0
        z = (y - self.y_mean) / self.y_scale
        n = Xa.shape[0]
        eps = self.params["epsilon"]

        def loss_grad(w):
            r = Xa @ w - z
            over = np.abs(r) > eps
            return float(np.mean(np.maximum(0, np.abs(r) - eps))), (Xa[over] * np.sign(r[over])[:, None]).sum(0) / n

        self.coef = _subgradient_descent(loss_grad, Xa.shape[1], 1.0 / (self.params["C"] * n),
                                         self.params["max_iter"])
        return self

    def predict(self, X):
        return (_augment(as_features(X)) @ self.coef) * self.y_scale + self.y_mean
