"""End-to-end training: split, encode, explore the grid, select, assemble, calibrate."""

from __future__ import annotations

import logging
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .encoding import dataset_padded_length, encode_batch
from .ensemble import (EnsembleModel, ScoredModel, assemble, calibrate, combine_member_outputs,
                       ensemble_predict, select_outlier_models)
from .evaluation import DEFAULT_PRIMARY, CVResult, DegenerateTargetError, compute_metrics, kfold_cv
from .models import ModelSpec, TrainedModel, enumerate_model_grid, predict_scores, train_model
from .pipeline import Dataset, apply_minmax, fit_minmax, split_dataset
from .propgroups import DescriptorTable

log = logging.getLogger(__name__)


class StageError(RuntimeError):
    """An error raised inside a named pipeline stage."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class TrainConfig:
    seed: int = 0
    k_folds: int = 5
    test_fraction: float = 0.2
    residue_policy: str = "error"
    primary_metric: str | None = None
    max_models: int | None = None
    jobs: int = 1
    calibrate: bool = True


@dataclass
class TrainingResult:
    ensemble: EnsembleModel
    report: dict


def _families_in_order(specs: list[ModelSpec]) -> list[str]:
    seen: list[str] = []
    for s in specs:
        if s.family not in seen:
            seen.append(s.family)
    return seen


def cap_specs(specs: list[ModelSpec], quota: int, rotation: int, seed: int) -> list[ModelSpec]:
    """Pick ``quota`` specs by cycling through the families.

    The family cycle starts ``rotation`` places in, so that different groups
    cover different families first; within a family specs come in a seeded
    random order.
    """
    if quota >= len(specs):
        return list(specs)
    fams = _families_in_order(specs)
    start = rotation % len(fams)
    fams = fams[start:] + fams[:start]
    rng = np.random.default_rng(seed)
    queues = {}
    for f in fams:
        members = [s for s in specs if s.family == f]
        queues[f] = [members[i] for i in rng.permutation(len(members))]
    picked: list[ModelSpec] = []
    while len(picked) < quota:
        for f in fams:
            if queues[f] and len(picked) < quota:
                picked.append(queues[f].pop(0))
    return picked


def specs_per_group(group_ids: list[str], task: str, seed: int, n_classes: int | None,
                    max_models: int | None) -> dict[str, list[ModelSpec]]:
    """The exploration plan: the full grid per group, or a total cap split evenly."""
    grid = enumerate_model_grid(task, seed, n_classes)
    if max_models is None:
        return {g: list(grid) for g in group_ids}
    if max_models < len(group_ids):
        raise ValueError(f"--max-models {max_models} is below the number of groups ({len(group_ids)})")
    base, extra = divmod(max_models, len(group_ids))
    return {g: cap_specs(grid, base + (i < extra), i, seed + i) for i, g in enumerate(group_ids)}


def _encode_split(ds: Dataset, table: DescriptorTable, padded: int, policy: str, name: str):
    mats, errors = encode_batch(ds.sequences, list(table), padded, policy)
    bad = [(i, e) for i, e in enumerate(errors) if e is not None]
    if bad:
        i, e = bad[0]
        raise StageError("encode", ValueError(f"{len(bad)} {name} sequences failed to encode; "
                                              f"first is row {i}: {e}"))
    return mats


def train_ensemble(ds: Dataset, table: DescriptorTable, config: TrainConfig | None = None) -> TrainingResult:
    cfg = config or TrainConfig()
    task = ds.task
    primary = cfg.primary_metric or DEFAULT_PRIMARY[task]
    if task == "regression" and np.ptp(ds.targets) == 0:
        raise StageError("ingest", DegenerateTargetError("degenerate target: every response is equal"))
    if len(table) == 0:
        raise StageError("descriptors", ValueError("the descriptor table is empty"))
    n_classes = ds.n_classes if task == "classification" else None

    try:
        train, test = split_dataset(ds, cfg.test_fraction, cfg.seed)
    except ValueError as exc:
        raise StageError("split", exc) from exc
    if len(train) < 2 * cfg.k_folds:
        raise StageError("split", ValueError(f"{len(train)} training rows cannot feed {cfg.k_folds} folds"))

    # the padded length covers every sequence of the dataset so test rows stay encodable
    padded = dataset_padded_length(ds.sequences)
    X_train = _encode_split(train, table, padded, cfg.residue_policy, "training")
    X_test = _encode_split(test, table, padded, cfg.residue_policy, "test") if len(test) else {}
    group_ids = [d.group_id for d in table]

    plan = specs_per_group(group_ids, task, cfg.seed, n_classes, cfg.max_models)
    jobs = [(g, s) for g in group_ids for s in plan[g]]
    log.info("exploring %d (group, model) combinations with %d-fold CV", len(jobs), cfg.k_folds)

    def explore(job):
        g, spec = job
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                return kfold_cv(spec, X_train[g], train.targets, cfg.k_folds, cfg.seed, n_classes)
        except (ValueError, ArithmeticError) as exc:
            return exc

    if cfg.jobs > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as ex:
            outcomes = list(ex.map(explore, jobs))
    else:
        outcomes = [explore(j) for j in jobs]

    pool: list[ScoredModel] = []
    cv_of: dict[int, CVResult] = {}
    cv_rows = []
    for (g, spec), out in zip(jobs, outcomes):
        row = {"group_id": g, "model": spec.key(), "family": spec.family, "hyperparameters": spec.hyperparameters}
        if isinstance(out, Exception):
            row["error"] = str(out)
            cv_rows.append(row)
            log.warning("explore %s on %s failed: %s", spec.key(), g, out)
            continue
        row["cv"] = out.mean
        row["excluded_folds"] = out.excluded_folds
        cv_rows.append(row)
        score = out.mean[primary]
        if not np.isfinite(score):
            continue
        placeholder = TrainedModel(spec, None, X_train[g].shape[1], n_classes, dict(out.mean))
        pool.append(ScoredModel(placeholder, g, float(score)))
        cv_of[id(pool[-1])] = out
    if not pool:
        raise StageError("explore", ValueError("no model could be trained on any group"))

    selected = select_outlier_models(pool)
    scalers = {g: fit_minmax(X_train[g]) for g in group_ids}
    members = []
    for sm in selected:
        g = sm.group_id
        try:
            model = train_model(sm.model.spec, apply_minmax(scalers[g], X_train[g]), train.targets, n_classes)
        except ValueError as exc:
            raise StageError("refit", exc) from exc
        model.cv_scores = sm.model.cv_scores
        members.append(ScoredModel(model, g, sm.validation_score))
    used = sorted({m.group_id for m in members}, key=group_ids.index)
    ens = assemble(members, task, descriptor_table=table, padded_length=padded,
                   scalers={g: scalers[g] for g in used}, residue_policy=cfg.residue_policy,
                   class_names=ds.class_names,
                   **({"n_classes": n_classes} if task == "classification" else {}))

    if task == "regression" and cfg.calibrate:
        oof = combine_member_outputs(ens, [cv_of[id(sm)].oof_predictions for sm in selected])
        try:
            ens = calibrate(ens, oof, train.targets)
        except ValueError as exc:
            log.warning("calibration skipped: %s", exc)

    report = {
        "seed": cfg.seed,
        "task": task,
        "primary_metric": primary,
        "k_folds": cfg.k_folds,
        "test_fraction": cfg.test_fraction,
        "n_train": len(train),
        "n_test": len(test),
        "padded_length": padded,
        "groups": group_ids,
        "per_model_cv_scores": cv_rows,
        "selected": [{"group_id": m.group_id, "model": m.model.spec.key(), "family": m.family,
                      "validation_score": m.validation_score} for m in ens.members],
        "weights": ens.weights.tolist(),
        "calibration": None if ens.calibration is None else {"slope": ens.calibration[0],
                                                              "intercept": ens.calibration[1]},
    }
    if len(test):
        report.update(_test_report(ens, test, X_test, n_classes))
    train_pred = ensemble_predict(ens, train.sequences)
    report["train_predictions"] = {"sequences": train.sequences,
                                   "predictions": [prediction_label(ens, v) for v in train_pred.values]}
    return TrainingResult(ens, report)


def prediction_label(ens: EnsembleModel, value):
    """JSON/CSV-friendly form of one prediction: class name, float, or None."""
    v = value.item() if hasattr(value, "item") else value
    if ens.task == "classification":
        if v < 0:
            return None
        return ens.class_names[v] if ens.class_names else int(v)
    return None if not np.isfinite(v) else float(v)


def _test_report(ens: EnsembleModel, test: Dataset, X_test: dict, n_classes) -> dict:
    pred = ensemble_predict(ens, test.sequences)
    task = ens.task
    out = {}
    if task == "classification":
        out["test_metrics"] = compute_metrics(task, test.targets, pred.values, n_classes).values
    else:
        post = compute_metrics(task, test.targets, pred.values).values
        pre = compute_metrics(task, test.targets, pred.raw).values
        out["test_metrics"] = {"pre_calibration": pre, "post_calibration": post}
    rows = []
    for m, w in zip(ens.members, ens.weights):
        X = apply_minmax(ens.scalers[m.group_id], X_test[m.group_id])
        yp = predict_scores(m.model, X)[0] if task == "classification" else m.model.predict(X)
        try:
            metrics = compute_metrics(task, test.targets, yp, n_classes).values
        except DegenerateTargetError as exc:
            metrics = {"error": str(exc)}
        rows.append({"group_id": m.group_id, "model": m.model.spec.key(), "weight": float(w),
                     "validation_score": m.validation_score, "test_metrics": metrics})
    out["member_test_metrics"] = rows
    return out
