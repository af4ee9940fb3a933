# Copyright (C) 2024 socialgame-core developers
# SPDX-License-Identifier: MIT

import logging
from typing import Tuple

import numpy as np
from scipy.spatial import cKDTree

from socialgame.core.errors import (
    InvalidArguments,
    LengthMismatchError,
    MinorityTooSmallError,
    SingleClassError,
)
from socialgame.core.features.matrix import FeatureMatrix

logger = logging.getLogger(__name__)


def smote(
    X: FeatureMatrix, y, k_neighbors: int = 5, rng: np.random.Generator = None
) -> Tuple[FeatureMatrix, np.ndarray]:
    """Balance the classes with synthetic minority rows.

    Each synthetic row is ``p + u * (q - p)`` with ``p`` a random minority row, ``q`` one of its
    ``k_neighbors`` nearest minority neighbours and ``u`` uniform in ``[0, 1]``. Dummy columns
    take the value of the closer endpoint so they stay one-hot. Original rows come first,
    unchanged, followed by the synthetic ones.

    Raises:
        MinorityTooSmallError: The minority class has fewer than two rows.
    """
    if k_neighbors < 1:
        raise InvalidArguments(f"k_neighbors must be >= 1 (got {k_neighbors})")
    rng = rng if rng is not None else np.random.default_rng()
    y = np.asarray(y).reshape(-1).astype(np.int64)
    if y.size != X.n_rows:
        raise LengthMismatchError(f"{y.size} labels for {X.n_rows} rows")
    counts = np.bincount(y, minlength=2)
    if counts.size > 2 or (counts == 0).any():
        raise SingleClassError("smote needs binary labels with both classes present")
    minority_label = int(np.argmin(counts))
    n_synthetic = int(counts.max() - counts.min())
    minority = X.values[y == minority_label]
    if minority.shape[0] < 2:
        raise MinorityTooSmallError(f"the minority class has {minority.shape[0]} row")
    if n_synthetic == 0:
        return X.with_values(X.values, target=X.target), y

    k = min(k_neighbors, minority.shape[0] - 1)
    if k < k_neighbors:
        logger.debug(f"SMOTE neighbours clipped to {k}.")
    # Neighbour 0 is the row itself.
    _, neighbours = cKDTree(minority).query(minority, k=list(range(2, k + 2)))
    neighbours = np.asarray(neighbours).reshape(minority.shape[0], k)
    base = rng.integers(0, minority.shape[0], size=n_synthetic)
    partner = neighbours[base, rng.integers(0, k, size=n_synthetic)]
    u = rng.uniform(0.0, 1.0, size=(n_synthetic, 1))
    p, q = minority[base], minority[partner]
    synthetic = p + u * (q - p)
    dummy = X.dummy_mask
    if dummy.any():
        synthetic[:, dummy] = np.where(u < 0.5, p[:, dummy], q[:, dummy])

    values = np.concatenate([X.values, synthetic])
    labels = np.concatenate([y, np.full(n_synthetic, minority_label)])
    logger.debug(f"SMOTE added {n_synthetic} rows of class {minority_label}.")
    return X.with_values(values, target=labels), labels
