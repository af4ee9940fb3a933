# Copyright (C) 2024 socialgame-core developers
# SPDX-License-Identifier: MIT

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Optional, Tuple, Union

import numpy as np
import pandas as pd

from socialgame.core.data.types import Path
from socialgame.core.errors import InvalidArguments, NonFiniteLossError
from socialgame.core.utils.files import file_path_to_obj_file

logger = logging.getLogger(__name__)

Params = Dict[str, np.ndarray]
Grads = Dict[str, np.ndarray]
LossFn = Callable[[Params], Tuple[float, Grads]]


def elu(z: np.ndarray) -> np.ndarray:
    return np.where(z > 0, z, np.expm1(np.minimum(z, 0.0)))


def elu_grad(z: np.ndarray) -> np.ndarray:
    """Derivative of :func:`elu` with respect to its input."""
    return np.where(z > 0, 1.0, np.exp(np.minimum(z, 0.0)))


def he_normal(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    return rng.normal(0.0, math.sqrt(2.0 / fan_in), size=(fan_in, fan_out))


def glorot_uniform(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def dropout_mask(rng: np.random.Generator, shape, drop_probability: float) -> np.ndarray:
    """Inverted dropout mask: kept units are scaled by ``1 / (1 - p)``."""
    if drop_probability <= 0:
        return np.ones(shape)
    keep = rng.uniform(size=shape) >= drop_probability
    return keep / (1.0 - drop_probability)


def clip_by_global_norm(grads: Grads, max_norm: Optional[float]) -> float:
    """Rescale the gradients in place so their joint L2 norm is at most ``max_norm``.

    Returns:
        The norm before clipping.
    """
    norm = math.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
    if max_norm is not None and norm > max_norm:
        scale = max_norm / norm
        for g in grads.values():
            g *= scale
    return norm


class NesterovMomentum:
    """Stochastic gradient descent with Nesterov momentum.

    Uses the look-ahead-free form ``v' = mu v - lr g``, ``w += -mu v + (1 + mu) v'``.
    """

    def __init__(self, momentum: float = 0.9):
        self.momentum = momentum
        self._velocity: Dict[str, np.ndarray] = {}

    def step(self, params: Params, grads: Grads, learning_rate: float):
        mu = self.momentum
        for name, grad in grads.items():
            previous = self._velocity.get(name)
            if previous is None:
                previous = np.zeros_like(grad)
            velocity = mu * previous - learning_rate * grad
            params[name] += -mu * previous + (1.0 + mu) * velocity
            self._velocity[name] = velocity


def check_finite_loss(loss: float, epoch: int, batch: int):
    if not math.isfinite(loss):
        raise NonFiniteLossError(
            f"loss became {loss} at epoch {epoch}, batch {batch}; "
            "lower the learning rate or check the inputs for extreme values"
        )


def batches(n_rows: int, batch_size: int, rng: np.random.Generator) -> Iterable[np.ndarray]:
    order = rng.permutation(n_rows)
    for start in range(0, n_rows, batch_size):
        yield order[start : start + batch_size]


@dataclass
class History:
    """Per-epoch training log."""

    epochs: List[int] = field(default_factory=list)
    loss: List[float] = field(default_factory=list)
    validation_auc: List[float] = field(default_factory=list)

    def append(self, epoch: int, loss: float, validation_auc: float = math.nan):
        self.epochs.append(epoch)
        self.loss.append(float(loss))
        self.validation_auc.append(float(validation_auc))

    def __len__(self) -> int:
        return len(self.epochs)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {"epoch": self.epochs, "loss": self.loss, "validation_auc": self.validation_auc}
        )

    def to_records(self) -> List[Dict[str, float]]:
        return self.to_frame().to_dict("records")


def write_history(history: Union[History, pd.DataFrame], path: Path, delimiter: str = ","):
    """Write the per-epoch log as delimited text with columns epoch, loss, validation_auc."""
    frame = history.to_frame() if isinstance(history, History) else history
    with file_path_to_obj_file(path, "w") as f:
        frame.to_csv(f, sep=delimiter, index=False, lineterminator="\n")


def grad_check(
    params: Params,
    loss_fn: LossFn,
    epsilon: float = 1e-5,
    n_checks: int = 10,
    rng: Optional[np.random.Generator] = None,
    keys: Optional[Iterable[str]] = None,
) -> float:
    """Largest relative error between analytic and central-difference gradients.

    ``loss_fn`` maps parameters to ``(loss, gradients)``. Up to ``n_checks`` entries are
    sampled in every checked array. The relative error of an entry is
    ``|a - n| / max(|a| + |n|, 1e-6)``. Parameters are restored on return.
    """
    if not 1e-7 <= epsilon <= 1e-3:
        raise InvalidArguments(f"epsilon must be within [1e-7, 1e-3] (got {epsilon})")
    rng = rng if rng is not None else np.random.default_rng(0)
    _, analytic = loss_fn(params)
    worst = 0.0
    for name in keys if keys is not None else sorted(analytic):
        array = params[name]
        flat = array.reshape(-1)
        size = flat.size
        picks = np.arange(size) if size <= n_checks else rng.choice(size, n_checks, replace=False)
        for index in picks:
            original = flat[index]
            flat[index] = original + epsilon
            plus, _ = loss_fn(params)
            flat[index] = original - epsilon
            minus, _ = loss_fn(params)
            flat[index] = original
            numeric = (plus - minus) / (2.0 * epsilon)
            exact = float(analytic[name].reshape(-1)[index])
            error = abs(exact - numeric) / max(abs(exact) + abs(numeric), 1e-6)
            worst = max(worst, error)
    logger.debug(f"Gradient check: max relative error {worst:.3g}.")
    return worst
