# Copyright (C) 2024 socialgame-core developers
# SPDX-License-Identifier: MIT

import logging
import math
from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field, field_validator
from tqdm import tqdm

from socialgame.core.deep.common import (
    Grads,
    History,
    NesterovMomentum,
    Params,
    batches,
    check_finite_loss,
    clip_by_global_norm,
    dropout_mask,
    elu,
    elu_grad,
    he_normal,
)
from socialgame.core.errors import InvalidArguments, SingleClassError
from socialgame.core.evaluation.roc import roc_auc
from socialgame.core.learners.base import TrainedModel, as_arrays, check_binary, register_scorer
from socialgame.core.utils.numerical import sigmoid

logger = logging.getLogger(__name__)

_BN_EPSILON = 1e-5
_BN_MOMENTUM = 0.9


class MlpConfig(BaseModel, extra="forbid"):
    """Feed-forward classifier with ELU hidden layers and a sigmoid output."""

    hidden: List[int] = Field(default_factory=lambda: [32, 16])
    "Sizes of the hidden layers. An empty list gives a logistic regression."
    drop_probability: float = Field(0.5, ge=0, lt=1)
    "Probability of dropping a hidden unit during training."
    batch_norm: bool = False
    "Normalize every hidden layer before its activation."
    learning_rate: float = Field(0.01, gt=0)
    momentum: float = Field(0.9, ge=0, lt=1)
    epochs: int = Field(30, ge=1)
    batch_size: int = Field(256, ge=1)
    clip_norm: Optional[float] = Field(5.0, gt=0)
    validation_fraction: float = Field(0.0, ge=0, lt=1)
    "Share of rows held out to log the validation AUC of every epoch."
    seed: Optional[int] = None

    @field_validator("hidden")
    @classmethod
    def sizes_are_positive(cls, hidden):
        if any(size < 1 for size in hidden):
            raise ValueError("hidden layer sizes must be positive")
        return hidden


def init_mlp(n_features: int, config: MlpConfig, rng: np.random.Generator) -> Params:
    """He-initialized weights, zero biases, unit batch-norm scales."""
    params: Params = {}
    sizes = [n_features, *config.hidden]
    for layer, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
        params[f"W{layer}"] = he_normal(rng, fan_in, fan_out)
        params[f"b{layer}"] = np.zeros(fan_out)
        if config.batch_norm:
            params[f"gamma{layer}"] = np.ones(fan_out)
            params[f"beta{layer}"] = np.zeros(fan_out)
            params[f"running_mean{layer}"] = np.zeros(fan_out)
            params[f"running_var{layer}"] = np.ones(fan_out)
    params["W_out"] = he_normal(rng, sizes[-1], 1)
    params["b_out"] = np.zeros(1)
    return params


def trainable(params: Params) -> List[str]:
    return sorted(k for k in params if not k.startswith("running_"))


def _n_hidden(params: Params) -> int:
    return sum(1 for k in params if k.startswith("W") and k != "W_out")


def mlp_forward(
    params: Params,
    X: np.ndarray,
    training: bool = False,
    masks: Optional[Dict[int, np.ndarray]] = None,
) -> Tuple[np.ndarray, List[Dict[str, np.ndarray]]]:
    """Logits of every row, plus the per-layer cache used by :func:`mlp_backward`.

    In training mode batch normalization uses the batch statistics and ``masks`` (inverted
    dropout, one per hidden layer) multiply the activations. Otherwise the running statistics
    are used and nothing is dropped.
    """
    caches = []
    a = X
    for layer in range(_n_hidden(params)):
        cache: Dict[str, np.ndarray] = {"input": a}
        z = a @ params[f"W{layer}"] + params[f"b{layer}"]
        if f"gamma{layer}" in params:
            if training:
                mean, var = z.mean(axis=0), z.var(axis=0)
            else:
                mean, var = params[f"running_mean{layer}"], params[f"running_var{layer}"]
            cache.update(batch_mean=mean, batch_var=var)
            normalized = (z - mean) / np.sqrt(var + _BN_EPSILON)
            cache["normalized"] = normalized
            z_act = params[f"gamma{layer}"] * normalized + params[f"beta{layer}"]
        else:
            z_act = z
        cache["pre_activation"] = z_act
        a = elu(z_act)
        if training and masks is not None and layer in masks:
            cache["mask"] = masks[layer]
            a = a * masks[layer]
        caches.append(cache)
    caches.append({"input": a})
    logits = (a @ params["W_out"] + params["b_out"]).reshape(-1)
    return logits, caches


def mlp_backward(
    params: Params, caches: List[Dict[str, np.ndarray]], dlogits: np.ndarray, training: bool
) -> Grads:
    grads: Grads = {}
    top = caches[-1]["input"]
    grads["W_out"] = top.T @ dlogits.reshape(-1, 1)
    grads["b_out"] = np.array([dlogits.sum()])
    da = dlogits.reshape(-1, 1) @ params["W_out"].T
    for layer in reversed(range(len(caches) - 1)):
        cache = caches[layer]
        if "mask" in cache:
            da = da * cache["mask"]
        dz_act = da * elu_grad(cache["pre_activation"])
        if f"gamma{layer}" in params:
            normalized = cache["normalized"]
            grads[f"gamma{layer}"] = np.sum(dz_act * normalized, axis=0)
            grads[f"beta{layer}"] = dz_act.sum(axis=0)
            dnormalized = dz_act * params[f"gamma{layer}"]
            inv_std = 1.0 / np.sqrt(cache["batch_var"] + _BN_EPSILON)
            if training:
                n = dnormalized.shape[0]
                dz = (
                    inv_std
                    / n
                    * (
                        n * dnormalized
                        - dnormalized.sum(axis=0)
                        - normalized * np.sum(dnormalized * normalized, axis=0)
                    )
                )
            else:
                dz = dnormalized * inv_std
        else:
            dz = dz_act
        grads[f"W{layer}"] = cache["input"].T @ dz
        grads[f"b{layer}"] = dz.sum(axis=0)
        da = dz @ params[f"W{layer}"].T
    return grads


def mlp_loss_and_grad(
    params: Params,
    X: np.ndarray,
    y: np.ndarray,
    training: bool = True,
    masks: Optional[Dict[int, np.ndarray]] = None,
) -> Tuple[float, Grads]:
    """Mean binary cross-entropy and its gradient with respect to the trainable parameters."""
    logits, caches = mlp_forward(params, X, training, masks)
    loss = float(np.mean(np.logaddexp(0.0, logits) - y * logits))
    dlogits = (sigmoid(logits) - y) / y.size
    return loss, mlp_backward(params, caches, dlogits, training)


def _score_mlp(params: Params, X: np.ndarray) -> np.ndarray:
    logits, _ = mlp_forward(params, X, training=False)
    return sigmoid(logits)


register_scorer("mlp", _score_mlp)


def _update_running_stats(params: Params, caches: List[Dict[str, np.ndarray]]):
    for layer, cache in enumerate(caches[:-1]):
        if "batch_mean" in cache:
            for stat in ("mean", "var"):
                key = f"running_{stat}{layer}"
                batch = cache[f"batch_{stat}"]
                params[key] = _BN_MOMENTUM * params[key] + (1 - _BN_MOMENTUM) * batch


def holdout_split(
    y: np.ndarray, fraction: float, rng: np.random.Generator
) -> Tuple[np.ndarray, np.ndarray]:
    """Stratified random split of row indices into (train, validation).

    Every class keeps at least one training row. A zero fraction gives no validation row.
    """
    if fraction <= 0:
        return np.arange(y.size), np.array([], dtype=np.int64)
    train, validation = [], []
    for label in np.unique(y):
        rows = rng.permutation(np.flatnonzero(y == label))
        n_validation = min(max(1, int(round(fraction * rows.size))), rows.size - 1)
        validation.append(rows[:n_validation])
        train.append(rows[n_validation:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(validation))


def safe_auc(scores: np.ndarray, labels: np.ndarray) -> float:
    if labels.size == 0 or labels.min() == labels.max():
        return math.nan
    return roc_auc(scores, labels).auc


def train_mlp(
    X,
    y=None,
    config: Optional[MlpConfig] = None,
    rng: Optional[np.random.Generator] = None,
    show_progress: bool = False,
) -> TrainedModel:
    """Train the feed-forward classifier on standardized features.

    Mini-batch cross-entropy is minimized with Nesterov momentum, inverted dropout after every
    hidden activation and optional batch normalization before it. The per-epoch history is
    stored in the model metadata.

    Raises:
        SingleClassError: ``y`` holds one class only.
        NonFiniteLossError: The loss diverged.
    """
    config = config or MlpConfig()
    if rng is None:
        rng = np.random.default_rng(config.seed)
    values, labels, names = as_arrays(X, y)
    if labels is None:
        raise InvalidArguments("no labels given")
    labels = check_binary(labels)
    train_rows, validation_rows = holdout_split(labels, config.validation_fraction, rng)
    if labels[train_rows].min() == labels[train_rows].max():
        raise SingleClassError("training rows hold one class only")

    params = init_mlp(values.shape[1], config, rng)
    optimizer = NesterovMomentum(config.momentum)
    history = History()
    X_train, y_train = values[train_rows], labels[train_rows].astype(np.float64)
    for epoch in tqdm(range(1, config.epochs + 1), disable=not show_progress):
        total = 0.0
        for batch_number, rows in enumerate(batches(y_train.size, config.batch_size, rng)):
            batch_X = X_train[rows]
            masks = {
                layer: dropout_mask(rng, (rows.size, size), config.drop_probability)
                for layer, size in enumerate(config.hidden)
            }
            logits, caches = mlp_forward(params, batch_X, training=True, masks=masks)
            loss = float(np.mean(np.logaddexp(0.0, logits) - y_train[rows] * logits))
            check_finite_loss(loss, epoch, batch_number)
            dlogits = (sigmoid(logits) - y_train[rows]) / rows.size
            grads = mlp_backward(params, caches, dlogits, training=True)
            clip_by_global_norm(grads, config.clip_norm)
            optimizer.step(params, grads, config.learning_rate)
            _update_running_stats(params, caches)
            total += loss * rows.size
        validation_auc = (
            safe_auc(_score_mlp(params, values[validation_rows]), labels[validation_rows])
            if validation_rows.size
            else math.nan
        )
        history.append(epoch, total / y_train.size, validation_auc)
        logger.debug(f"MLP epoch {epoch}: loss {history.loss[-1]:.5f}, AUC {validation_auc:.4f}")

    for array in params.values():
        array.setflags(write=False)
    return TrainedModel(
        kind="mlp",
        params=params,
        metadata={
            "n_features": int(values.shape[1]),
            "feature_names": list(names),
            "hyperparameters": config.model_dump(),
            "history": history.to_records(),
        },
    )
