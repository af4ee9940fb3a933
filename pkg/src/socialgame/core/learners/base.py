# Copyright (C) 2024 socialgame-core developers
# SPDX-License-Identifier: MIT

import importlib
import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field

from socialgame.core.errors import ArityMismatchError, InvalidArguments, SingleClassError
from socialgame.core.features.matrix import FeatureMatrix

logger = logging.getLogger(__name__)

LearnerKind = Literal[
    "logistic",
    "l1_logistic",
    "bagged_logistic",
    "lda",
    "knn",
    "linear_svm",
    "tree",
    "random_forest",
    "mlp",
    "bilstm",
]
BASELINE_KINDS: Tuple[str, ...] = (
    "logistic",
    "l1_logistic",
    "bagged_logistic",
    "lda",
    "knn",
    "linear_svm",
    "tree",
    "random_forest",
)

_KIND_MODULES = {
    "logistic": "socialgame.core.learners.linear",
    "l1_logistic": "socialgame.core.learners.linear",
    "bagged_logistic": "socialgame.core.learners.linear",
    "lda": "socialgame.core.learners.linear",
    "linear_svm": "socialgame.core.learners.linear",
    "knn": "socialgame.core.learners.neighbors",
    "tree": "socialgame.core.learners.trees",
    "random_forest": "socialgame.core.learners.trees",
    "mlp": "socialgame.core.deep.mlp",
    "bilstm": "socialgame.core.deep.bilstm",
}

Params = Dict[str, Any]
Trainer = Callable[
    [np.ndarray, np.ndarray, "LearnerConfig", np.random.Generator], Tuple[Params, Dict]
]
ScoreFn = Callable[[Params, np.ndarray], np.ndarray]

_TRAINERS: Dict[str, Trainer] = {}
_SCORERS: Dict[str, ScoreFn] = {}


class LearnerConfig(BaseModel, extra="forbid"):
    """Hyperparameters shared by the classical learners. Each kind reads the fields it needs."""

    max_iter: int = Field(10_000, ge=1)
    "Iteration cap of the convex trainers."
    tolerance: float = Field(1e-6, gt=0)
    "Gradient infinity-norm at which the convex trainers stop."
    step_size: float = Field(1.0, gt=0)
    "Initial step of the backtracking line search."
    l1_penalty: float = Field(0.01, ge=0)
    l2_penalty: float = Field(0.0, ge=0)
    n_estimators: int = Field(25, ge=1)
    "Members of the bagged logistic regression and of the random forest."
    bootstrap: bool = True
    n_neighbors: int = Field(15, ge=1)
    max_depth: int = Field(12, ge=0)
    min_leaf: int = Field(5, ge=1)
    max_features: Union[Literal["sqrt", "all"], int] = "sqrt"
    "Features tried at every split of a forest tree."
    svm_penalty: float = Field(1e-3, gt=0)
    "Weight of the squared norm in the SVM objective."
    svm_iterations: int = Field(2_000, ge=1)
    ridge: float = Field(1e-6, gt=0)
    "Relative ridge added to a singular LDA covariance."


@dataclass(frozen=True)
class TrainedModel:
    """Immutable trained classifier.

    ``params`` holds the learned arrays, ``metadata`` the training context (feature names,
    hyperparameters, convergence details).
    """

    kind: str
    params: Params
    metadata: Dict[str, Any] = field(default_factory=dict)

    @property
    def n_features(self) -> int:
        return int(self.metadata["n_features"])

    @property
    def feature_names(self) -> List[str]:
        return list(self.metadata.get("feature_names", []))

    def predict_proba(self, X) -> np.ndarray:
        return predict_proba(self, X)


def _freeze(params):
    if isinstance(params, np.ndarray):
        params.setflags(write=False)
    elif isinstance(params, dict):
        for value in params.values():
            _freeze(value)
    elif isinstance(params, list):
        for value in params:
            _freeze(value)
    return params


def register_scorer(kind: str, scorer: ScoreFn):
    _SCORERS[kind] = scorer


def register_learner(kind: str, scorer: ScoreFn):
    """Register the decorated trainer and the scorer of a model kind."""

    def decorator(trainer: Trainer) -> Trainer:
        _TRAINERS[kind] = trainer
        register_scorer(kind, scorer)
        return trainer

    return decorator


def _lookup(registry: Dict[str, Callable], kind: str) -> Callable:
    if kind not in registry:
        if kind not in _KIND_MODULES:
            raise InvalidArguments(f"unknown learner kind '{kind}'")
        importlib.import_module(_KIND_MODULES[kind])
    if kind not in registry:
        raise InvalidArguments(f"'{kind}' models are trained by their own entry point")
    return registry[kind]


def as_arrays(X, y=None) -> Tuple[np.ndarray, Optional[np.ndarray], List[str]]:
    """Values, labels and feature names of a feature matrix or a plain array."""
    if isinstance(X, FeatureMatrix):
        if y is None:
            y = X.target
        return X.values, None if y is None else np.asarray(y).reshape(-1), X.names
    values = np.asarray(X, dtype=np.float64)
    if values.ndim == 1:
        values = values.reshape(-1, 1)
    names = [f"x{j}" for j in range(values.shape[-1])]
    return values, None if y is None else np.asarray(y).reshape(-1), names


def check_binary(y: np.ndarray) -> np.ndarray:
    y = np.asarray(y).reshape(-1)
    if not np.all((y == 0) | (y == 1)):
        raise InvalidArguments("labels must be 0 or 1")
    if y.size == 0 or y.min() == y.max():
        raise SingleClassError("training labels must contain both classes")
    return y.astype(np.int64)


def train_baseline_classifier(
    kind: str,
    X,
    y=None,
    config: Optional[LearnerConfig] = None,
    rng: Optional[np.random.Generator] = None,
) -> TrainedModel:
    """Train a classifier of the given kind.

    Args:
        kind: One of ``logistic``, ``l1_logistic``, ``bagged_logistic``, ``lda``, ``knn``,
            ``linear_svm``, ``tree`` or ``random_forest``.
        X: Feature matrix, or a 2-D array.
        y: Binary labels. Defaults to the target of ``X``.
        config: Hyperparameters.
        rng: Generator of the resampling kinds.

    Raises:
        SingleClassError: ``y`` holds one class only.
    """
    config = config or LearnerConfig()
    rng = rng if rng is not None else np.random.default_rng()
    values, labels, names = as_arrays(X, y)
    if labels is None:
        raise InvalidArguments("no labels given")
    if labels.size != values.shape[0]:
        raise InvalidArguments(f"{labels.size} labels for {values.shape[0]} rows")
    labels = check_binary(labels)
    trainer = _lookup(_TRAINERS, kind)
    logger.debug(f"Training {kind} on {values.shape[0]} rows, {values.shape[-1]} features.")
    params, details = trainer(values, labels, config, rng)
    metadata = {
        "n_features": int(values.shape[-1]),
        "feature_names": list(names),
        "hyperparameters": config.model_dump(),
        **details,
    }
    return TrainedModel(kind=kind, params=_freeze(params), metadata=metadata)


def predict_proba(model: TrainedModel, X) -> np.ndarray:
    """Probability of the positive class for every row of ``X``.

    Raises:
        ArityMismatchError: ``X`` does not have the training number of features.
    """
    values, _, _ = as_arrays(X)
    if values.shape[-1] != model.n_features:
        raise ArityMismatchError(
            f"model trained on {model.n_features} features, got {values.shape[-1]}"
        )
    scorer = _lookup(_SCORERS, model.kind)
    return np.clip(scorer(model.params, values), 0.0, 1.0)


@dataclass(frozen=True)
class LearnerSpec:
    """A learner kind with its hyperparameters, trainable on any split of the data."""

    kind: str
    config: LearnerConfig = field(default_factory=LearnerConfig)

    def fit(self, X, y, rng: np.random.Generator) -> TrainedModel:
        return train_baseline_classifier(self.kind, X, y, self.config, rng)

    def with_params(self, overrides: Dict[str, Any]) -> "LearnerSpec":
        """Same kind with some hyperparameters replaced, such as a random-search draw."""
        return LearnerSpec(self.kind, LearnerConfig(**{**self.config.model_dump(), **overrides}))


def member_mean(members: Sequence[Params], score: ScoreFn, X: np.ndarray) -> np.ndarray:
    """Average probability of ensemble members."""
    return np.mean([score(member, X) for member in members], axis=0)
