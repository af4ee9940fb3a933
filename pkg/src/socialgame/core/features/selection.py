# Copyright (C) 2024 socialgame-core developers
# SPDX-License-Identifier: MIT

import logging
from typing import List

import numpy as np

from socialgame.core.errors import InvalidArguments, KOutOfRangeError, LengthMismatchError
from socialgame.core.features.matrix import FeatureMatrix

logger = logging.getLogger(__name__)


def _codes(column: np.ndarray, bins: int) -> np.ndarray:
    """Discretize a column. Columns with at most ``bins`` distinct values keep their own levels."""
    levels, codes = np.unique(column, return_inverse=True)
    if levels.size <= bins:
        return codes.reshape(-1)
    low, high = levels[0], levels[-1]
    scaled = np.floor((column - low) / (high - low) * bins).astype(np.int64)
    return np.minimum(scaled, bins - 1)


def _joint_codes(values: np.ndarray, bins: int) -> np.ndarray:
    if values.ndim == 1:
        return _codes(values, bins)
    per_column = np.column_stack([_codes(values[:, j], bins) for j in range(values.shape[1])])
    return np.unique(per_column, axis=0, return_inverse=True)[1].reshape(-1)


def _entropy(codes: np.ndarray) -> float:
    counts = np.unique(codes, return_counts=True)[1]
    # Sorted counts make the sum independent of the level labels.
    p = np.sort(counts) / codes.size
    return float(-np.sum(p * np.log(p)))


def _pair_codes(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.unique(np.column_stack([a, b]), axis=0, return_inverse=True)[1].reshape(-1)


def _mi_from_codes(a: np.ndarray, b: np.ndarray) -> float:
    if a.size > 0 and b.size > 0 and (a.max() == a.min() or b.max() == b.min()):
        return 0.0
    h_a, h_b = _entropy(a), _entropy(b)
    # Swapping the pair permutes the joint levels but not their sorted counts.
    h_joint = _entropy(_pair_codes(a, b))
    low, high = sorted((h_a, h_b))
    return max(0.0, low + high - h_joint)


def mutual_information(x, y, bins: int = 10) -> float:
    """Plug-in mutual information, in nats, of two discretized columns.

    Continuous columns are cut in ``bins`` equal-width bins; columns with at most ``bins``
    distinct values use their own levels. A 2-D ``x`` is treated as one joint variable.

    Raises:
        LengthMismatchError: The columns differ in length.
    """
    if bins < 1:
        raise InvalidArguments(f"bins must be >= 1 (got {bins})")
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape[0] != y.shape[0]:
        raise LengthMismatchError(f"columns of length {x.shape[0]} and {y.shape[0]}")
    if x.shape[0] < 2:
        raise InvalidArguments("mutual information needs at least 2 observations")
    return _mi_from_codes(_joint_codes(x, bins), _joint_codes(y, bins))


def mrmr_select(X: FeatureMatrix, y, k: int, bins: int = 10) -> List[int]:
    """Greedy minimum-redundancy maximum-relevance selection with the difference criterion.

    The first pick maximizes the relevance ``MI(x_j; y)``. Every later pick maximizes the
    relevance minus the mean MI to the features already picked. Ties go to the lower
    redundancy, then to the lowest index, so the output is deterministic and prefix-stable.

    Returns:
        Column indices in order of selection.

    Raises:
        KOutOfRangeError: ``k`` is not within ``[1, X.n_cols]``.
    """
    if not 1 <= k <= X.n_cols:
        raise KOutOfRangeError(f"k must be within [1, {X.n_cols}] (got {k})")
    y = np.asarray(y).reshape(-1)
    if y.size != X.n_rows:
        raise LengthMismatchError(f"{y.size} labels for {X.n_rows} rows")
    codes = [_codes(X.values[:, j], bins) for j in range(X.n_cols)]
    y_codes = _codes(y.astype(np.float64), bins)
    relevance = np.array([_mi_from_codes(c, y_codes) for c in codes])
    redundancy_sum = np.zeros(X.n_cols)
    selected: List[int] = []
    available = np.ones(X.n_cols, dtype=bool)
    for step in range(k):
        redundancy = redundancy_sum / step if step else np.zeros(X.n_cols)
        score = relevance - redundancy
        candidates = np.flatnonzero(available)
        best = min(candidates, key=lambda j: (-score[j], redundancy[j], j))
        selected.append(int(best))
        available[best] = False
        for j in np.flatnonzero(available):
            redundancy_sum[j] += _mi_from_codes(codes[j], codes[best])
        logger.debug(f"mRMR pick {step + 1}: {X.names[best]} (score {score[best]:.4g}).")
    return selected
