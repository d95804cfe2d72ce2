"""Hyperparameter grid for the exploration stage."""

from __future__ import annotations

from .base import ModelSpec

FAMILIES = ("knn", "decision_tree", "random_forest", "bagging", "adaboost", "gradient_boosting",
            "gaussian_nb", "bernoulli_nb", "linear", "svm_linear")
CLASSIFICATION_ONLY = ("gaussian_nb", "bernoulli_nb")
N_ESTIMATORS = (10, 50, 100, 200)


def enumerate_model_grid(task: str, seed: int = 0, n_classes: int | None = None) -> list[ModelSpec]:
    """The full, ordered list of specs explored for ``task``.

    66 specs for binary classification, 64 for regression. Exponential-loss
    boosting only exists for two classes, so it is left out when
    ``n_classes`` > 2. Stochastic families carry ``random_state=seed``.
    """
    if task not in ("classification", "regression"):
        raise ValueError(f"unknown task {task!r}")
    clf = task == "classification"
    specs: list[ModelSpec] = []

    def add(family, **hp):
        specs.append(ModelSpec(family, hp, task))

    for k in (1, 3, 5, 7, 9, 15):
        for weights in ("uniform", "distance"):
            for metric in ("euclidean", "manhattan"):
                add("knn", n_neighbors=k, weights=weights, metric=metric)
    criteria = ("gini", "entropy") if clf else ("squared_error", "absolute_error")
    for criterion in criteria:
        for depth in (None, 4, 8, 16):
            add("decision_tree", criterion=criterion, max_depth=depth, random_state=seed)
    for n in N_ESTIMATORS:
        for bootstrap in (True, False):
            add("random_forest", n_estimators=n, bootstrap=bootstrap, random_state=seed)
    for n in N_ESTIMATORS:
        add("bagging", n_estimators=n, random_state=seed)
    for n in N_ESTIMATORS:
        add("adaboost", n_estimators=n, random_state=seed)
    losses = ("log_loss", "exponential") if clf else ("squared_error", "absolute_error")
    if clf and n_classes is not None and n_classes > 2:
        losses = ("log_loss",)
    for n in N_ESTIMATORS:
        for loss in losses:
            add("gradient_boosting", n_estimators=n, loss=loss, random_state=seed)
    if clf:
        add("gaussian_nb")
        add("bernoulli_nb")
    for alpha in (0.01, 0.1, 1.0, 10.0):
        add("linear", alpha=alpha)
    for C in (0.1, 1.0, 10.0, 100.0):
        add("svm_linear", C=C)
    return specs
