"""Supervised model zoo: specs, training, prediction and serialization."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .base import DegenerateTrainingData, Estimator, ModelSpec, estimator_from_dict
from .ensembles import (AdaBoostClassifier, AdaBoostRegressor, BaggingClassifier, BaggingRegressor,
                        GradientBoostingClassifier, GradientBoostingRegressor, RandomForestClassifier,
                        RandomForestRegressor)
from .grid import CLASSIFICATION_ONLY, FAMILIES, enumerate_model_grid
from .linear import LinearSVC, LinearSVR, LogisticRegression, Ridge
from .naive_bayes import BernoulliNB, GaussianNB
from .neighbors import KNNClassifier, KNNRegressor
from .tree import DecisionTree, TreeClassifier, TreeRegressor

__all__ = [
    "DegenerateTrainingData", "FAMILIES", "ModelSpec", "TrainedModel", "build_estimator",
    "enumerate_model_grid", "predict", "predict_scores", "train_model", "DecisionTree",
]

_ESTIMATORS = {
    "knn": (KNNClassifier, KNNRegressor),
    "decision_tree": (TreeClassifier, TreeRegressor),
    "random_forest": (RandomForestClassifier, RandomForestRegressor),
    "bagging": (BaggingClassifier, BaggingRegressor),
    "adaboost": (AdaBoostClassifier, AdaBoostRegressor),
    "gradient_boosting": (GradientBoostingClassifier, GradientBoostingRegressor),
    "gaussian_nb": (GaussianNB, None),
    "bernoulli_nb": (BernoulliNB, None),
    "linear": (LogisticRegression, Ridge),
    "svm_linear": (LinearSVC, LinearSVR),
}


def build_estimator(spec: ModelSpec, n_classes: int | None = None) -> Estimator:
    if spec.family not in _ESTIMATORS:
        raise ValueError(f"unknown model family {spec.family!r}")
    clf_cls, reg_cls = _ESTIMATORS[spec.family]
    if spec.task == "classification":
        return clf_cls(n_classes=n_classes, **spec.hyperparameters)
    if reg_cls is None:
        raise ValueError(f"{spec.family} is classification-only")
    return reg_cls(**spec.hyperparameters)


@dataclass
class TrainedModel:
    spec: ModelSpec
    estimator: Estimator
    train_feature_dim: int
    n_classes: int | None = None
    cv_scores: dict = field(default_factory=dict)

    def _check(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.train_feature_dim:
            raise ValueError(f"feature dimension {X.shape[-1]} does not match the training "
                             f"dimension {self.train_feature_dim}")
        return X

    def predict(self, X) -> np.ndarray:
        if self.spec.task == "classification":
            return predict_scores(self, X)[0]
        return np.asarray(self.estimator.predict(self._check(X)), dtype=float)

    def to_dict(self) -> dict:
        return {"spec": self.spec.to_dict(), "n_classes": self.n_classes,
                "train_feature_dim": self.train_feature_dim, "cv_scores": dict(self.cv_scores),
                "parameters": self.estimator.to_dict()}

    @classmethod
    def from_dict(cls, d) -> "TrainedModel":
        return cls(ModelSpec.from_dict(d["spec"]), estimator_from_dict(d["parameters"]),
                   int(d["train_feature_dim"]), d.get("n_classes"), dict(d.get("cv_scores", {})))


def train_model(spec: ModelSpec, X, y, n_classes: int | None = None) -> TrainedModel:
    """Fit the estimator named by ``spec`` on (X, y).

    Raises DegenerateTrainingData for fits that are undefined, such as a
    single-class training set.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError(f"X has {X.shape[0] if X.ndim else 0} rows but y has {y.shape[0]}")
    if X.shape[0] < 2:
        raise DegenerateTrainingData("degenerate training data: fewer than 2 rows")
    if not np.all(np.isfinite(X)):
        raise ValueError("training features contain NaN or infinity")
    if spec.task == "classification":
        y = y.astype(int)
        if n_classes is None:
            n_classes = max(int(y.max()) + 1, 2)
    else:
        y = y.astype(float)
        if np.ptp(y) == 0:
            raise DegenerateTrainingData("degenerate training data: constant target")
        n_classes = None
    est = build_estimator(spec, n_classes)
    est.fit(X, y)
    return TrainedModel(spec, est, X.shape[1], n_classes)


def predict_scores(model: TrainedModel, X) -> tuple[np.ndarray, np.ndarray]:
    """Class ids and per-class score rows (non-negative, summing to 1)."""
    if model.spec.task != "classification":
        raise ValueError("class scores exist only for classification models")
    S = np.asarray(model.estimator.predict_proba(model._check(X)), dtype=float)
    S = np.clip(np.nan_to_num(S, nan=0.0), 0.0, None)
    tot = S.sum(1, keepdims=True)
    S = np.where(tot > 0, S / np.where(tot > 0, tot, 1.0), 1.0 / S.shape[1])
    return np.argmax(S, axis=1), S


def predict(model: TrainedModel, X) -> np.ndarray:
    """Class ids (classification) or real values (regression)."""
    return model.predict(X)
