"""Tree ensembles: random forest, bagging, AdaBoost and gradient boosting."""

from __future__ import annotations

import math

import numpy as np
from scipy.special import expit, logsumexp, softmax

from .base import Classifier, Estimator, as_features, register
from .tree import DecisionTree


def _child_seeds(seed: int, n: int) -> list[int]:
    return [int(s) for s in np.random.SeedSequence(seed).generate_state(n)]


class _Forest:
    """Shared fit logic for forests and bagging (mixin over Estimator)."""

    def _grow(self, X, y, criterion, max_features, n_classes=None):
        X = as_features(X)
        p = self.params
        n = X.shape[0]
        seeds = _child_seeds(p["random_state"], 2 * p["n_estimators"])
        trees = []
        for t in range(p["n_estimators"]):
            if p["bootstrap"]:
                idx = np.random.default_rng(seeds[2 * t]).integers(0, n, n)
            else:
                idx = np.arange(n)
            tree = DecisionTree(criterion, p.get("max_depth"), max_features=max_features,
                                random_state=seeds[2 * t + 1], n_classes=n_classes)
            trees.append(tree.fit(X[idx], y[idx]))
        self.trees = trees

    def _mean_value(self, X):
        X = as_features(X)
        return np.mean([t.predict_value(X) for t in self.trees], axis=0)


@register
class RandomForestClassifier(_Forest, Classifier):
    fitted_attrs = ("trees",)

    def __init__(self, n_classes=None, n_estimators=100, bootstrap=True, criterion="gini",
                 max_features="sqrt", max_depth=None, random_state=0):
        super().__init__(n_classes=n_classes, n_estimators=n_estimators, bootstrap=bootstrap,
                         criterion=criterion, max_features=max_features, max_depth=max_depth,
                         random_state=random_state)

    def fit(self, X, y):
        y = self._prepare(y)
        self._grow(X, y, self.params["criterion"], self.params["max_features"], self.n_classes)
        return self

    def predict_proba(self, X):
        return self._mean_value(X)


@register
class RandomForestRegressor(_Forest, Estimator):
    fitted_attrs = ("trees",)

    def __init__(self, n_estimators=100, bootstrap=True, criterion="squared_error",
                 max_features="third", max_depth=None, random_state=0):
        super().__init__(n_estimators=n_estimators, bootstrap=bootstrap, criterion=criterion,
                         max_features=max_features, max_depth=max_depth, random_state=random_state)

    def fit(self, X, y):
        self._grow(X, np.asarray(y, float), self.params["criterion"], self.params["max_features"])
        return self

    def predict(self, X):
        return self._mean_value(X)[:, 0]


@register
class BaggingClassifier(RandomForestClassifier):
    """Bootstrap aggregation of full-feature trees."""

    def __init__(self, n_classes=None, n_estimators=10, bootstrap=True, criterion="gini",
                 max_features=None, max_depth=None, random_state=0):
        super().__init__(n_classes, n_estimators, bootstrap, criterion, max_features, max_depth, random_state)


@register
class BaggingRegressor(RandomForestRegressor):
    def __init__(self, n_estimators=10, bootstrap=True, criterion="squared_error",
                 max_features=None, max_depth=None, random_state=0):
        super().__init__(n_estimators, bootstrap, criterion, max_features, max_depth, random_state)


@register
class AdaBoostClassifier(Classifier):
    """SAMME boosting of decision stumps.

    Class scores are the alpha-weighted vote of the stumps, normalized to 1.
    """

    fitted_attrs = ("trees", "alphas")

    def __init__(self, n_classes=None, n_estimators=50, learning_rate=1.0, max_depth=1, random_state=0):
        super().__init__(n_classes=n_classes, n_estimators=n_estimators, learning_rate=learning_rate,
                         max_depth=max_depth, random_state=random_state)

    def fit(self, X, y):
        X = as_features(X)
        y = self._prepare(y)
        p, K = self.params, self.n_classes
        n = X.shape[0]
        w = np.full(n, 1.0 / n)
        seeds = _child_seeds(p["random_state"], p["n_estimators"])
        trees, alphas = [], []
        for t in range(p["n_estimators"]):
            tree = DecisionTree("gini", p["max_depth"], random_state=seeds[t], n_classes=K).fit(X, y, w)
            miss = tree.predict(X) != y
            err = float(w[miss].sum() / w.sum())
            if err <= 0:
                trees.append(tree)
                alphas.append(1.0)
                break
            if err >= 1.0 - 1.0 / K:
                if not trees:
                    trees.append(tree)
                    alphas.append(1.0)
                break
            alpha = p["learning_rate"] * (math.log((1 - err) / err) + math.log(K - 1))
            trees.append(tree)
            alphas.append(alpha)
            w = w * np.exp(alpha * miss)
            w /= w.sum()
        self.trees, self.alphas = trees, np.array(alphas)
        return self

    def predict_proba(self, X):
        X = as_features(X)
        votes = np.zeros((X.shape[0], self.n_classes))
        rows = np.arange(X.shape[0])
        for tree, a in zip(self.trees, self.alphas):
            votes[rows, tree.predict(X)] += a
        return votes / self.alphas.sum()


@register
class AdaBoostRegressor(Estimator):
    """AdaBoost.R2 with linear loss, weighted resampling and weighted-median output."""

    fitted_attrs = ("trees", "betas")

    def __init__(self, n_estimators=50, learning_rate=1.0, max_depth=3, random_state=0):
        super().__init__(n_estimators=n_estimators, learning_rate=learning_rate, max_depth=max_depth,
                         random_state=random_state)

    def fit(self, X, y):
        X = as_features(X)
        y = np.asarray(y, float)
        p = self.params
        n = X.shape[0]
        w = np.full(n, 1.0 / n)
        seeds = _child_seeds(p["random_state"], 2 * p["n_estimators"])
        trees, weights = [], []
        for t in range(p["n_estimators"]):
            idx = np.random.default_rng(seeds[2 * t]).choice(n, n, replace=True, p=w)
            tree = DecisionTree("squared_error", p["max_depth"], random_state=seeds[2 * t + 1]).fit(X[idx], y[idx])
            err = np.abs(tree.predict(X) - y)
            top = err.max()
            if top == 0:
                trees.append(tree)
                weights.append(1.0)
                break
            loss = err / top
            avg = float(np.sum(w * loss))
            if avg >= 0.5:
                if not trees:
                    trees.append(tree)
                    weights.append(1.0)
                break
            beta = max(avg, 1e-300) / (1 - avg)
            trees.append(tree)
            weights.append(p["learning_rate"] * math.log(1 / beta))
            w = w * np.power(beta, (1 - loss) * p["learning_rate"])
            w /= w.sum()
        self.trees, self.betas = trees, np.array(weights)
        return self

    def predict(self, X):
        X = as_features(X)
        preds = np.stack([t.predict(X) for t in self.trees], axis=1)
        order = np.argsort(preds, axis=1, kind="mergesort")
        cw = np.cumsum(self.betas[order], axis=1)
        pick = np.argmax(cw >= 0.5 * cw[:, -1:], axis=1)
        return preds[np.arange(X.shape[0]), order[np.arange(X.shape[0]), pick]]


def _set_leaves(tree: DecisionTree, leaf_of: np.ndarray, fn) -> None:
    for leaf in np.unique(leaf_of):
        tree.value[leaf, 0] = fn(leaf_of == leaf)


@register
class GradientBoostingRegressor(Estimator):
    """Friedman gradient boosting with squared or absolute loss (depth-3 trees)."""

    fitted_attrs = ("init", "trees")

    def __init__(self, n_estimators=100, loss="squared_error", learning_rate=0.1, max_depth=3, random_state=0):
        if loss not in ("squared_error", "absolute_error"):
            raise ValueError(f"unknown regression loss {loss!r}")
        super().__init__(n_estimators=n_estimators, loss=loss, learning_rate=learning_rate,
                         max_depth=max_depth, random_state=random_state)

    def fit(self, X, y):
        X = as_features(X)
        y = np.asarray(y, float)
        p = self.params
        absolute = p["loss"] == "absolute_error"
        self.init = float(np.median(y) if absolute else np.mean(y))
        F = np.full(y.size, self.init)
        seeds = _child_seeds(p["random_state"], p["n_estimators"])
        self.trees = []
        for t in range(p["n_estimators"]):
            resid = y - F
            # subgradient of |r| taken as +1 at r = 0
            target = np.where(resid < 0, -1.0, 1.0) if absolute else resid
            tree = DecisionTree("squared_error", p["max_depth"], random_state=seeds[t]).fit(X, target)
            if absolute:
                _set_leaves(tree, tree.apply(X), lambda m: np.median(resid[m]))
            F = F + p["learning_rate"] * tree.predict(X)
            self.trees.append(tree)
        return self

    def predict(self, X):
        X = as_features(X)
        out = np.full(X.shape[0], self.init)
        for tree in self.trees:
            out += self.params["learning_rate"] * tree.predict(X)
        return out


@register
class GradientBoostingClassifier(Classifier):
    """Gradient boosting with log-loss (binary or multinomial) or binary exponential loss."""

    fitted_attrs = ("init", "trees")

    def __init__(self, n_classes=None, n_estimators=100, loss="log_loss", learning_rate=0.1, max_depth=3,
                 random_state=0):
        if loss not in ("log_loss", "exponential"):
            raise ValueError(f"unknown classification loss {loss!r}")
        super().__init__(n_classes=n_classes, n_estimators=n_estimators, loss=loss,
                         learning_rate=learning_rate, max_depth=max_depth, random_state=random_state)

    def fit(self, X, y):
        X = as_features(X)
        y = self._prepare(y)
        p, K = self.params, self.n_classes
        if p["loss"] == "exponential" and K != 2:
            raise ValueError("exponential loss requires binary labels")
        n_out = 1 if K == 2 else K
        seeds = _child_seeds(p["random_state"], p["n_estimators"] * n_out)
        prior = np.clip(np.bincount(y, minlength=K) / y.size, 1e-12, 1.0)
        if K == 2:
            ratio = math.log(prior[1] / prior[0])
            init = np.array([0.5 * ratio if p["loss"] == "exponential" else ratio])
        else:
            init = np.log(prior)
        F = np.tile(init, (y.size, 1))
        Y = np.eye(K)[y]
        lr = p["learning_rate"]
        trees = []
        scale = (K - 1) / K if n_out > 1 else 1.0
        for t in range(p["n_estimators"]):
            stage = []
            if p["loss"] == "exponential":
                ys = 2.0 * y - 1.0
                e = np.exp(-ys * F[:, 0])
                grads = [ys * e]
                hess = [e]
            elif K == 2:
                prob = expit(F[:, 0])
                grads = [y - prob]
                hess = [prob * (1 - prob)]
            else:
                prob = softmax(F, axis=1)
                grads = [Y[:, k] - prob[:, k] for k in range(K)]
                hess = [np.abs(g) * (1 - np.abs(g)) for g in grads]
            for k in range(n_out):
                g, h = grads[k], hess[k]
                tree = DecisionTree("squared_error", p["max_depth"], random_state=seeds[t * n_out + k])
                tree.fit(X, g)
                # one Newton step per leaf
                _set_leaves(tree, tree.apply(X),
                            lambda m: scale * g[m].sum() / h[m].sum() if h[m].sum() > 1e-150 else 0.0)
                F[:, k] += lr * tree.predict(X)
                stage.append(tree)
            trees.append(stage)
        self.init, self.trees = init, trees
        return self

    def decision_function(self, X) -> np.ndarray:
        X = as_features(X)
        F = np.tile(self.init, (X.shape[0], 1))
        lr = self.params["learning_rate"]
        for stage in self.trees:
            for k, tree in enumerate(stage):
                F[:, k] += lr * tree.predict(X)
        return F

    def predict_proba(self, X):
        F = self.decision_function(X)
        if self.n_classes == 2:
            z = 2 * F[:, 0] if self.params["loss"] == "exponential" else F[:, 0]
            p1 = expit(z)
            return np.column_stack([1 - p1, p1])
        return np.exp(F - logsumexp(F, axis=1, keepdims=True))
