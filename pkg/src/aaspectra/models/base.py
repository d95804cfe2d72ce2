"""Shared machinery for the model zoo: specs, fitted-state serialization."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, ClassVar

import numpy as np


class DegenerateTrainingData(ValueError):
    def __init__(self, msg="degenerate training data"):
        super().__init__(msg)


@dataclass(frozen=True)
class ModelSpec:
    family: str
    hyperparameters: dict = field(default_factory=dict)
    task: str = "classification"

    def key(self) -> str:
        """Stable textual identity, used for sorting and reports."""
        return f"{self.family}({json.dumps(self.hyperparameters, sort_keys=True)})"

    def to_dict(self) -> dict:
        return {"family": self.family, "hyperparameters": dict(self.hyperparameters), "task": self.task}

    @classmethod
    def from_dict(cls, d) -> "ModelSpec":
        return cls(d["family"], dict(d["hyperparameters"]), d["task"])

    def __hash__(self):
        return hash((self.family, self.key(), self.task))


_REGISTRY: dict[str, type] = {}


def register(cls):
    _REGISTRY[cls.__name__] = cls
    return cls


def _encode(value):
    if isinstance(value, Estimator):
        return {"__estimator__": type(value).__name__, "params": value.params, "state": value.get_state()}
    if isinstance(value, np.ndarray):
        return {"__ndarray__": value.tolist(), "dtype": value.dtype.str, "shape": list(value.shape)}
    if isinstance(value, (list, tuple)):
        return [_encode(v) for v in value]
    if isinstance(value, dict):
        return {k: _encode(v) for k, v in value.items()}
    if isinstance(value, np.generic):
        return value.item()
    return value


def _decode(value):
    if isinstance(value, dict):
        if "__ndarray__" in value:
            arr = np.array(value["__ndarray__"], dtype=np.dtype(value["dtype"]))
            return arr.reshape(value["shape"])
        if "__estimator__" in value:
            return estimator_from_dict(value)
        return {k: _decode(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_decode(v) for v in value]
    return value


def estimator_from_dict(d) -> "Estimator":
    cls = _REGISTRY[d["__estimator__"]]
    est = cls(**d["params"])
    est.set_state(d["state"])
    return est


class Estimator:
    """Minimal fit/predict object whose fitted attributes serialize to JSON."""

    fitted_attrs: ClassVar[tuple[str, ...]] = ()
    is_classifier: ClassVar[bool] = False

    def __init__(self, **params):
        self.params = params

    def get_state(self) -> dict:
        return {name: _encode(getattr(self, name)) for name in self.fitted_attrs}

    def set_state(self, state: dict) -> None:
        for name in self.fitted_attrs:
            setattr(self, name, _decode(state[name]))

    def to_dict(self) -> dict:
        return _encode(self)


class Classifier(Estimator):
    is_classifier = True
    # memorizing learners stay well defined on a one-class training set
    allows_single_class: ClassVar[bool] = False

    def __init__(self, n_classes: int | None = None, **params):
        super().__init__(n_classes=n_classes, **params)
        self.n_classes = n_classes

    def _prepare(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=int)
        if y.size == 0:
            raise DegenerateTrainingData("degenerate training data: no rows")
        if self.n_classes is None:
            self.n_classes = max(int(y.max()) + 1, 2)
            self.params["n_classes"] = self.n_classes
        if y.min() < 0 or y.max() >= self.n_classes:
            raise ValueError(f"labels must lie in [0, {self.n_classes})")
        if np.unique(y).size < 2 and not self.allows_single_class:
            raise DegenerateTrainingData("degenerate training data: a single class")
        return y

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.predict_proba(X), axis=1)


def as_features(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError("features must be a 2-D matrix")
    return X


def dump_json(obj) -> str:
    return json.dumps(_encode(obj))
