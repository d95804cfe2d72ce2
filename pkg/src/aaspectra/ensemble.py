"""Outlier-based model selection, weighted assembly, calibration and bundles."""

from __future__ import annotations

import dataclasses
import json
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .encoding import encode_batch
from .models import ModelSpec, TrainedModel, predict_scores
from .models.base import estimator_from_dict
from .pipeline import MinMaxScaler, apply_minmax
from .propgroups import DescriptorTable

BUNDLE_SCHEMA_VERSION = 1
WEIGHT_EPS = 1e-6
FALLBACK_FRACTION = 0.05


@dataclass
class ScoredModel:
    model: TrainedModel
    group_id: str
    validation_score: float

    def __post_init__(self):
        if not math.isfinite(self.validation_score):
            raise ValueError(f"validation score must be finite, got {self.validation_score}")

    @property
    def family(self) -> str:
        return self.model.spec.family


@dataclass
class EnsembleModel:
    members: list[ScoredModel]
    weights: np.ndarray
    task: str
    descriptor_table: DescriptorTable | None = None
    padded_length: int | None = None
    scalers: dict[str, MinMaxScaler] = field(default_factory=dict)
    residue_policy: str = "error"
    calibration: tuple[float, float] | None = None
    n_classes: int | None = None
    class_names: list[str] | None = None

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        if not self.members:
            raise ValueError("an ensemble needs at least one member")
        if self.weights.shape != (len(self.members),):
            raise ValueError("one weight per member is required")
        if np.any(self.weights < 0) or abs(self.weights.sum() - 1.0) > 1e-12:
            raise ValueError("weights must be non-negative and sum to 1")


@dataclass
class EnsemblePrediction:
    """Per-row output of an ensemble.

    ``values`` holds class ids (``-1`` on failed rows) or real predictions
    (NaN on failed rows); ``raw`` is the uncalibrated regression output.
    """

    values: np.ndarray
    errors: list[str | None]
    scores: np.ndarray | None = None
    raw: np.ndarray | None = None


def tukey_upper_fence(scores) -> float:
    q1, q3 = np.percentile(np.asarray(scores, float), [25, 75])
    return float(q3 + 1.5 * (q3 - q1))


def select_outlier_models(pool: Sequence[ScoredModel]) -> list[ScoredModel]:
    """Models scoring above the Tukey upper fence of the pool.

    When nothing clears the fence the top max(1, ceil(5% of the pool)) models
    are taken instead. Only the best model per (group, family) pair survives;
    ties keep the earlier one. Pool order is preserved.
    """
    if not pool:
        raise ValueError("cannot select from an empty pool")
    scores = np.array([m.validation_score for m in pool])
    chosen = np.flatnonzero(scores > tukey_upper_fence(scores))
    if chosen.size == 0:
        n_top = max(1, math.ceil(FALLBACK_FRACTION * len(pool)))
        chosen = np.sort(np.argsort(-scores, kind="stable")[:n_top])
    best: dict[tuple[str, str], int] = {}
    for i in chosen:
        key = (pool[i].group_id, pool[i].family)
        if key not in best or scores[i] > scores[best[key]]:
            best[key] = int(i)
    return [pool[i] for i in sorted(best.values())]


def ensemble_weights(scores) -> np.ndarray:
    """w_i = s'_i / sum s', with s' = s - min(0, min s) + 1e-6."""
    s = np.asarray(scores, float)
    shifted = s - min(0.0, float(s.min())) + WEIGHT_EPS
    return shifted / shifted.sum()


def assemble(selected: Sequence[ScoredModel], task: str, **metadata) -> EnsembleModel:
    """Weight ``selected`` by their shifted validation scores.

    ``metadata`` fills the remaining EnsembleModel fields (descriptor table,
    scalers, padded length, residue policy, class information).
    """
    if not selected:
        raise ValueError("cannot assemble an empty selection")
    for m in selected:
        if m.model.spec.task != task:
            raise ValueError(f"member {m.model.spec.key()} was trained for {m.model.spec.task}, not {task}")
    weights = ensemble_weights([m.validation_score for m in selected])
    if task == "classification" and "n_classes" not in metadata:
        metadata["n_classes"] = selected[0].model.n_classes
    ens = EnsembleModel(list(selected), weights, task, **metadata)
    for m in ens.members:
        if ens.descriptor_table is not None and m.group_id not in {d.group_id for d in ens.descriptor_table}:
            raise ValueError(f"no descriptor stored for group {m.group_id}")
        if ens.scalers and m.group_id not in ens.scalers:
            raise ValueError(f"no scaler stored for group {m.group_id}")
    return ens


def _member_output(member: ScoredModel, X: np.ndarray, task: str) -> np.ndarray:
    if task == "classification":
        return predict_scores(member.model, X)[1]
    return member.model.predict(X)


def combine_member_outputs(ens: EnsembleModel, outputs: Sequence[np.ndarray]) -> np.ndarray:
    """Weighted sum of member outputs (score matrices or value vectors)."""
    total = np.zeros_like(np.asarray(outputs[0], float))
    for w, out in zip(ens.weights, outputs):
        total = total + w * np.asarray(out, float)
    return total


def apply_calibration(ens: EnsembleModel, raw) -> np.ndarray:
    raw = np.asarray(raw, float)
    if ens.calibration is None:
        return raw
    a, b = ens.calibration
    return (raw - b) / a


def predict_features(ens: EnsembleModel, features: dict[str, np.ndarray], jobs: int = 1) -> EnsemblePrediction:
    """Ensemble output from unscaled per-group feature matrices (all rows valid)."""

    def run(member):
        X = features[member.group_id]
        if ens.scalers:
            X = apply_minmax(ens.scalers[member.group_id], X)
        return _member_output(member, X, ens.task)

    if jobs > 1 and len(ens.members) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outputs = list(pool.map(run, ens.members))
    else:
        outputs = [run(m) for m in ens.members]
    combined = combine_member_outputs(ens, outputs)
    n = combined.shape[0]
    if ens.task == "classification":
        return EnsemblePrediction(np.argmax(combined, axis=1), [None] * n, scores=combined)
    return EnsemblePrediction(apply_calibration(ens, combined), [None] * n, raw=combined)


def ensemble_predict(ens: EnsembleModel, sequences: Sequence[str], jobs: int = 1) -> EnsemblePrediction:
    """Predict from raw sequences using the bundled descriptors and scalers.

    Rows that cannot be encoded (bad residue, longer than the padded length)
    get an error message and no prediction; if every row fails, ValueError.
    """
    if ens.descriptor_table is None or ens.padded_length is None:
        raise ValueError("ensemble has no descriptor table or padded length")
    n = len(sequences)
    needed = {m.group_id for m in ens.members}
    descs = [d for d in ens.descriptor_table if d.group_id in needed]
    mats, errors = encode_batch(sequences, descs, ens.padded_length, ens.residue_policy)
    ok = np.array([e is None for e in errors], dtype=bool)
    if n and not ok.any():
        raise ValueError(f"every row failed to encode; first error: {errors[0]}")
    part = predict_features(ens, {g: m[ok] for g, m in mats.items()}, jobs) if ok.any() else None
    if ens.task == "classification":
        k = ens.n_classes or (part.scores.shape[1] if part is not None else 0)
        values = np.full(n, -1, dtype=int)
        scores = np.full((n, k), np.nan)
        if part is not None:
            values[ok], scores[ok] = part.values, part.scores
        return EnsemblePrediction(values, errors, scores=scores)
    values, raw = np.full(n, np.nan), np.full(n, np.nan)
    if part is not None:
        values[ok], raw[ok] = part.values, part.raw
    return EnsemblePrediction(values, errors, raw=raw)


def fit_calibration_line(validation_pred, validation_true) -> tuple[float, float]:
    """Least-squares slope and intercept of pred ~ a * true + b."""
    p = np.asarray(validation_pred, float)
    t = np.asarray(validation_true, float)
    tc = t - t.mean()
    a = float(tc @ (p - p.mean()) / (tc @ tc))
    return a, float(p.mean() - a * t.mean())


def calibrate(ens: EnsembleModel, validation_pred, validation_true) -> EnsembleModel:
    """Return a copy of ``ens`` whose outputs are mapped through x -> (x - b) / a.

    (a, b) come from the least-squares line pred ~ a * true + b on validation
    data, where ``validation_pred`` are uncalibrated ensemble outputs. A
    near-zero slope (|a| < 1e-6) is rejected with a warning and the ensemble is
    returned unchanged.
    """
    if ens.task != "regression":
        raise ValueError("calibration is regression-only")
    p = np.asarray(validation_pred, float)
    t = np.asarray(validation_true, float)
    if p.shape != t.shape or p.ndim != 1:
        raise ValueError("validation predictions and targets must be equal-length vectors")
    if p.size < 3:
        raise ValueError("calibration needs at least 3 validation points")
    if np.ptp(t) == 0:
        raise ValueError("calibration needs a non-constant validation target")
    a, b = fit_calibration_line(p, t)
    if abs(a) < 1e-6 or np.ptp(p) == 0:
        warnings.warn(f"calibration rejected: slope {a:.3g} is too close to zero")
        return ens
    return dataclasses.replace(ens, calibration=(a, b))


def _member_to_dict(m: ScoredModel) -> dict:
    d = m.model
    return {"group_id": m.group_id, "family": d.spec.family, "hyperparameters": d.spec.hyperparameters,
            "task": d.spec.task, "n_classes": d.n_classes, "train_feature_dim": d.train_feature_dim,
            "cv_scores": d.cv_scores, "parameters": d.estimator.to_dict(),
            "validation_score": m.validation_score}


def _member_from_dict(d: dict) -> ScoredModel:
    model = TrainedModel(ModelSpec(d["family"], dict(d["hyperparameters"]), d["task"]),
                         estimator_from_dict(d["parameters"]), int(d["train_feature_dim"]),
                         d.get("n_classes"), dict(d.get("cv_scores", {})))
    return ScoredModel(model, d["group_id"], float(d["validation_score"]))


def bundle_to_dict(ens: EnsembleModel) -> dict:
    return {
        "schema_version": BUNDLE_SCHEMA_VERSION,
        "task": ens.task,
        "padded_length": ens.padded_length,
        "residue_policy": ens.residue_policy,
        "n_classes": ens.n_classes,
        "class_names": ens.class_names,
        "descriptor_table": ens.descriptor_table.to_dict() if ens.descriptor_table is not None else None,
        "scalers": {g: s.to_dict() for g, s in ens.scalers.items()},
        "members": [_member_to_dict(m) for m in ens.members],
        "weights": ens.weights.tolist(),
        "calibration": None if ens.calibration is None else {"slope": ens.calibration[0],
                                                              "intercept": ens.calibration[1]},
    }


def bundle_from_dict(doc: dict) -> EnsembleModel:
    version = doc.get("schema_version")
    if version != BUNDLE_SCHEMA_VERSION:
        raise ValueError(f"bundle schema_version {version!r} is not the supported version {BUNDLE_SCHEMA_VERSION}")
    cal = doc.get("calibration")
    table = doc.get("descriptor_table")
    return EnsembleModel(
        members=[_member_from_dict(m) for m in doc["members"]],
        weights=np.array(doc["weights"], dtype=float),
        task=doc["task"],
        descriptor_table=DescriptorTable.from_dict(table) if table is not None else None,
        padded_length=doc.get("padded_length"),
        scalers={g: MinMaxScaler.from_dict(s) for g, s in doc.get("scalers", {}).items()},
        residue_policy=doc.get("residue_policy", "error"),
        calibration=None if cal is None else (float(cal["slope"]), float(cal["intercept"])),
        n_classes=doc.get("n_classes"),
        class_names=doc.get("class_names"),
    )


def save_bundle(ens: EnsembleModel, path) -> None:
    Path(path).write_text(json.dumps(bundle_to_dict(ens)))


def load_bundle(path) -> EnsembleModel:
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: not a readable bundle ({exc})") from exc
    if not isinstance(doc, dict):
        raise ValueError(f"{path}: not a readable bundle")
    return bundle_from_dict(doc)
