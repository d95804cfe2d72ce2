"""CART decision trees stored as flat node arrays."""

from __future__ import annotations

import math

import numpy as np

from .base import Classifier, Estimator, as_features, register

LEAF = -1
CLASSIFICATION_CRITERIA = ("gini", "entropy")
REGRESSION_CRITERIA = ("squared_error", "absolute_error")


def _resolve_max_features(max_features, n_features: int) -> int:
    if max_features is None:
        return n_features
    if max_features == "sqrt":
        return max(1, int(math.sqrt(n_features)))
    if max_features == "third":
        return max(1, n_features // 3)
    if isinstance(max_features, float):
        return max(1, int(max_features * n_features))
    return max(1, min(int(max_features), n_features))


def _valid_positions(xs: np.ndarray, min_leaf: int) -> np.ndarray:
    """Mask over split positions i (left = first i+1 sorted rows)."""
    m = xs.shape[0]
    valid = xs[1:] > xs[:-1]
    pos = np.arange(m - 1)[:, None]
    valid &= (pos + 1 >= min_leaf) & (m - pos - 1 >= min_leaf)
    return valid


def _class_gain(yw_sorted: np.ndarray, criterion: str) -> np.ndarray:
    """Split score (higher is better) for every position and feature.

    yw_sorted: (m, f, C) weighted one-hot targets sorted per feature.
    """
    cum = np.cumsum(yw_sorted, axis=0)[:-1]
    total = cum[-1] + yw_sorted[-1] if cum.shape[0] else yw_sorted.sum(0)
    left, right = cum, total[None] - cum
    wl, wr = left.sum(-1), right.sum(-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        if criterion == "gini":
            score = (left ** 2).sum(-1) / wl + (right ** 2).sum(-1) / wr
        else:
            def plogp(c, w):
                p = c / w[..., None]
                return np.where(c > 0, c * np.log(np.where(p > 0, p, 1.0)), 0.0).sum(-1)
            score = plogp(left, wl) + plogp(right, wr)
    return np.nan_to_num(score, nan=-np.inf)


def _sse_gain(y_sorted: np.ndarray, w_sorted: np.ndarray) -> np.ndarray:
    s = np.cumsum(y_sorted * w_sorted, axis=0)[:-1]
    w = np.cumsum(w_sorted, axis=0)[:-1]
    st = (y_sorted * w_sorted).sum(0)
    wt = w_sorted.sum(0)
    with np.errstate(divide="ignore", invalid="ignore"):
        score = s ** 2 / w + (st - s) ** 2 / (wt - w)
    return np.nan_to_num(score, nan=-np.inf)


def _l1_cost(ys: np.ndarray) -> np.ndarray:
    """Sum of |y - median| over every prefix ys[:i+1], i = 0..m-2, per column.

    Uses rank-indexed cumulative counts and sums, so the median and the
    absolute deviations of all prefixes come out of a few array passes.
    """
    m, f = ys.shape
    out = np.empty((m - 1, f))
    chunk = max(1, int(4e6 // (m * m)))
    for lo in range(0, f, chunk):
        y = ys[:, lo:lo + chunk]
        c = y.shape[1]
        order = np.argsort(y, axis=0, kind="mergesort")
        rank = np.empty_like(order)
        np.put_along_axis(rank, order, np.arange(m)[:, None], axis=0)
        vals = np.take_along_axis(y, order, axis=0)              # (m, c) sorted values
        onehot = np.zeros((m, c, m))
        onehot[np.arange(m)[:, None], np.arange(c)[None, :], rank] = 1.0
        present = np.cumsum(onehot, axis=0)[:-1]                # prefix membership by rank
        count = np.cumsum(present, axis=2)
        wsum = np.cumsum(present * vals.T[None], axis=2)
        size = np.arange(1, m)[:, None]
        # lower median: first rank whose cumulative count reaches ceil(size/2)
        mid = np.argmax(count >= ((size + 1) // 2)[..., None], axis=2)
        med = np.take_along_axis(vals.T[None].repeat(m - 1, 0), mid[..., None], axis=2)[..., 0]
        below_n = np.take_along_axis(count, mid[..., None], axis=2)[..., 0]
        below_s = np.take_along_axis(wsum, mid[..., None], axis=2)[..., 0]
        total = wsum[..., -1]
        out[:, lo:lo + c] = (total - 2 * below_s) - med * (size - 2 * below_n)
    return out


def _l1_gain(y_sorted: np.ndarray) -> np.ndarray:
    left = _l1_cost(y_sorted)
    right = _l1_cost(y_sorted[::-1])[::-1]
    return -(left + right)


@register
class DecisionTree(Estimator):
    """Binary CART tree for classification (gini/entropy) or regression.

    Nodes are held in parallel arrays: ``feature`` (-1 marks a leaf),
    ``threshold`` (go left when x <= threshold), ``left``, ``right`` and
    ``value`` (class distribution or regression output per node).
    """

    fitted_attrs = ("feature", "threshold", "left", "right", "value", "n_features")

    def __init__(self, criterion="gini", max_depth=None, min_samples_split=2, min_samples_leaf=1,
                 max_features=None, random_state=0, n_classes=None):
        super().__init__(criterion=criterion, max_depth=max_depth, min_samples_split=min_samples_split,
                         min_samples_leaf=min_samples_leaf, max_features=max_features,
                         random_state=random_state, n_classes=n_classes)
        if criterion not in CLASSIFICATION_CRITERIA + REGRESSION_CRITERIA:
            raise ValueError(f"unknown criterion {criterion!r}")
        self.criterion = criterion
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split
        self.min_samples_leaf = min_samples_leaf
        self.max_features = max_features
        self.random_state = random_state
        self.n_classes = n_classes

    @property
    def is_classification(self) -> bool:
        return self.criterion in CLASSIFICATION_CRITERIA

    def fit(self, X, y, sample_weight=None):
        X = as_features(X)
        n, d = X.shape
        w = np.ones(n) if sample_weight is None else np.asarray(sample_weight, dtype=float)
        if self.criterion == "absolute_error" and sample_weight is not None:
            raise ValueError("absolute_error trees do not take sample weights")
        if self.is_classification:
            y = np.asarray(y, dtype=int)
            if self.n_classes is None:
                self.n_classes = int(y.max()) + 1
                self.params["n_classes"] = self.n_classes
            target = np.eye(self.n_classes)[y] * w[:, None]
        else:
            y = np.asarray(y, dtype=float)
            target = y
        rng = np.random.default_rng(self.random_state)
        k_feat = _resolve_max_features(self.max_features, d)

        feature, threshold, left, right, value = [], [], [], [], []

        def leaf_value(idx):
            if self.is_classification:
                counts = target[idx].sum(0)
                tot = counts.sum()
                return counts / tot if tot > 0 else np.full(self.n_classes, 1.0 / self.n_classes)
            if self.criterion == "absolute_error":
                return np.array([np.median(y[idx])])
            return np.array([np.average(y[idx], weights=w[idx])])

        def new_node(idx):
            feature.append(LEAF)
            threshold.append(0.0)
            left.append(LEAF)
            right.append(LEAF)
            value.append(leaf_value(idx))
            return len(feature) - 1

        root = new_node(np.arange(n))
        stack = [(root, np.arange(n), 0)]
        while stack:
            node, idx, depth = stack.pop()
            if self.max_depth is not None and depth >= self.max_depth:
                continue
            if idx.size < max(self.min_samples_split, 2 * self.min_samples_leaf):
                continue
            if self._is_pure(target, y, idx):
                continue
            split = self._best_split(X, target, y, w, idx, k_feat, rng)
            if split is None:
                continue
            f, thr = split
            go_left = X[idx, f] <= thr
            li, ri = idx[go_left], idx[~go_left]
            if li.size == 0 or ri.size == 0:
                continue
            feature[node], threshold[node] = f, thr
            left[node] = new_node(li)
            right[node] = new_node(ri)
            stack.append((right[node], ri, depth + 1))
            stack.append((left[node], li, depth + 1))

        self.feature = np.array(feature, dtype=np.int64)
        self.threshold = np.array(threshold, dtype=float)
        self.left = np.array(left, dtype=np.int64)
        self.right = np.array(right, dtype=np.int64)
        self.value = np.array(value, dtype=float)
        self.n_features = d
        return self

    def _is_pure(self, target, y, idx) -> bool:
        if self.is_classification:
            return np.count_nonzero(target[idx].sum(0) > 0) <= 1
        return np.ptp(y[idx]) == 0

    def _best_split(self, X, target, y, w, idx, k_feat, rng):
        d = X.shape[1]
        feats = np.arange(d) if k_feat >= d else np.sort(rng.choice(d, k_feat, replace=False))
        Xn = X[np.ix_(idx, feats)]
        order = np.argsort(Xn, axis=0, kind="mergesort")
        xs = np.take_along_axis(Xn, order, axis=0)
        valid = _valid_positions(xs, self.min_samples_leaf)
        if not valid.any():
            return None
        if self.is_classification:
            gain = _class_gain(target[idx][order], self.criterion)
        elif self.criterion == "squared_error":
            gain = _sse_gain(y[idx][order], w[idx][order])
        else:
            gain = _l1_gain(y[idx][order])
        gain = np.where(valid, gain, -np.inf)
        # first maximum in (feature, position) order keeps ties deterministic
        flat = np.argmax(gain.T)
        j, pos = divmod(int(flat), gain.shape[0])
        if not np.isfinite(gain[pos, j]):
            return None
        lo, hi = xs[pos, j], xs[pos + 1, j]
        thr = (lo + hi) / 2.0
        if thr >= hi or thr < lo:
            thr = lo
        return int(feats[j]), float(thr)

    def apply(self, X) -> np.ndarray:
        """Leaf index reached by every row."""
        X = as_features(X)
        if X.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got {X.shape[1]}")
        node = np.zeros(X.shape[0], dtype=np.int64)
        rows = np.arange(X.shape[0])
        active = self.feature[node] != LEAF
        while active.any():
            r, nd = rows[active], node[active]
            go_left = X[r, self.feature[nd]] <= self.threshold[nd]
            node[r] = np.where(go_left, self.left[nd], self.right[nd])
            active = self.feature[node] != LEAF
        return node

    def predict_value(self, X) -> np.ndarray:
        return self.value[self.apply(X)]

    def predict_proba(self, X) -> np.ndarray:
        return self.predict_value(X)

    def predict(self, X) -> np.ndarray:
        v = self.predict_value(X)
        if self.is_classification:
            return np.argmax(v, axis=1)
        return v[:, 0]

    @property
    def node_count(self) -> int:
        return int(self.feature.size)

    @property
    def depth(self) -> int:
        depth = np.zeros(self.node_count, dtype=int)
        for i in range(self.node_count):
            if self.feature[i] != LEAF:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max())


@register
class TreeClassifier(Classifier):
    """Classifier wrapper: validates labels, then delegates to DecisionTree."""

    fitted_attrs = ("tree",)

    def __init__(self, n_classes=None, criterion="gini", max_depth=None, max_features=None, random_state=0):
        super().__init__(n_classes=n_classes, criterion=criterion, max_depth=max_depth,
                         max_features=max_features, random_state=random_state)

    def fit(self, X, y, sample_weight=None):
        y = self._prepare(y)
        p = self.params
        self.tree = DecisionTree(p["criterion"], p["max_depth"], max_features=p["max_features"],
                                 random_state=p["random_state"], n_classes=self.n_classes)
        self.tree.fit(X, y, sample_weight)
        return self

    def predict_proba(self, X):
        return self.tree.predict_proba(X)


@register
class TreeRegressor(Estimator):
    fitted_attrs = ("tree",)

    def __init__(self, criterion="squared_error", max_depth=None, max_features=None, random_state=0):
        super().__init__(criterion=criterion, max_depth=max_depth, max_features=max_features,
                         random_state=random_state)

    def fit(self, X, y, sample_weight=None):
        p = self.params
        self.tree = DecisionTree(p["criterion"], p["max_depth"], max_features=p["max_features"],
                                 random_state=p["random_state"])
        self.tree.fit(X, y, sample_weight)
        return self

    def predict(self, X):
        return self.tree.predict(X)
