# Copyright (C) 2024 socialgame-core developers
# SPDX-License-Identifier: MIT

import logging
from dataclasses import dataclass
from typing import Any, Callable, Tuple, Union

import numpy as np
from typing_extensions import Protocol

from socialgame.core.errors import FoldTooSmallError, InvalidArguments, LengthMismatchError
from socialgame.core.evaluation.roc import roc_auc

logger = logging.getLogger(__name__)


class Scorer(Protocol):
    def predict_proba(self, X: np.ndarray) -> np.ndarray: ...


class Learner(Protocol):
    def fit(self, X: np.ndarray, y: np.ndarray, rng: np.random.Generator) -> Scorer: ...


LearnerLike = Union[Learner, Callable[[np.ndarray, np.ndarray, np.random.Generator], Scorer]]
Metric = Callable[[np.ndarray, np.ndarray], float]


def auc_metric(scores: np.ndarray, labels: np.ndarray) -> float:
    return roc_auc(scores, labels).auc


@dataclass(frozen=True)
class CvResult:
    fold_scores: Tuple[float, ...]
    mean: float
    assignments: np.ndarray
    "Validation fold of every row."


def stratified_folds(y: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Assign every row to one of ``k`` folds, dealing each class round-robin after a shuffle.

    Raises:
        FoldTooSmallError: A class has fewer rows than folds, so some fold would lose it.
    """
    y = np.asarray(y).reshape(-1)
    if k < 2:
        raise InvalidArguments(f"k must be >= 2 (got {k})")
    if k > y.size:
        raise FoldTooSmallError(f"{k} folds for {y.size} rows")
    assignments = np.empty(y.size, dtype=np.int64)
    offset = 0
    for label in np.unique(y):
        rows = rng.permutation(np.flatnonzero(y == label))
        if rows.size < k:
            raise FoldTooSmallError(f"class {label} has {rows.size} rows for {k} folds")
        assignments[rows] = (offset + np.arange(rows.size)) % k
        offset = (offset + rows.size) % k
    return assignments


def _fit(learner: LearnerLike, X, y, rng) -> Any:
    if hasattr(learner, "fit"):
        return learner.fit(X, y, rng)
    return learner(X, y, rng)


def kfold_cv(
    X,
    y,
    k: int,
    learner: LearnerLike,
    rng: np.random.Generator,
    metric: Metric = auc_metric,
) -> CvResult:
    """Stratified k-fold cross-validation.

    Every row is validated exactly once. Each fold trains with its own generator drawn from
    ``rng`` after the fold assignment.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y).reshape(-1)
    if X.shape[0] != y.size:
        raise LengthMismatchError(f"{X.shape[0]} rows for {y.size} labels")
    assignments = stratified_folds(y, k, rng)
    seeds = rng.integers(0, 2**63 - 1, size=k)
    scores = []
    for fold in range(k):
        held_out = assignments == fold
        model = _fit(learner, X[~held_out], y[~held_out], np.random.default_rng(int(seeds[fold])))
        scores.append(float(metric(model.predict_proba(X[held_out]), y[held_out])))
        logger.debug(f"Fold {fold + 1}/{k}: {scores[-1]:.4f}")
    return CvResult(
        fold_scores=tuple(scores), mean=float(np.mean(scores)), assignments=assignments
    )
