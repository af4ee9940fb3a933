# Copyright (C) 2024 socialgame-core developers
# SPDX-License-Identifier: MIT

import logging
from typing import Dict, Tuple

import numpy as np
from scipy.spatial import cKDTree

from socialgame.core.learners.base import LearnerConfig, Params, register_learner

logger = logging.getLogger(__name__)


def _score_knn(params: Params, X: np.ndarray) -> np.ndarray:
    """Fraction of positive labels among the ``k`` nearest training rows."""
    train, labels = params["X"], params["y"]
    k = min(int(params["k"]), train.shape[0])
    _, neighbours = cKDTree(train).query(X, k=k)
    neighbours = np.asarray(neighbours).reshape(X.shape[0], k)
    return labels[neighbours].mean(axis=1)


@register_learner("knn", _score_knn)
def _train_knn(X, y, config: LearnerConfig, rng) -> Tuple[Params, Dict]:
    k = min(config.n_neighbors, X.shape[0])
    if k < config.n_neighbors:
        logger.debug(f"k-NN neighbours clipped to {k}.")
    return {"X": np.array(X, dtype=np.float64), "y": y.astype(np.float64), "k": k}, {}
