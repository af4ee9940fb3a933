# Copyright (C) 2024 socialgame-core developers
# SPDX-License-Identifier: MIT

import logging
import math
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from socialgame.core.learners.base import LearnerConfig, Params, member_mean, register_learner
from socialgame.core.learners.linear import bootstrap_rows

logger = logging.getLogger(__name__)

_MIN_DECREASE = 1e-12


def _weighted_gini(positives: np.ndarray, counts: np.ndarray) -> np.ndarray:
    """Gini impurity times the node size."""
    return 2.0 * positives * (counts - positives) / counts


def _best_split(
    X: np.ndarray, y: np.ndarray, rows: np.ndarray, features: Sequence[int], min_leaf: int
) -> Optional[Tuple[int, float, float]]:
    """Lowest weighted impurity over the candidate splits. Ties keep the lowest feature index
    and then the lowest threshold."""
    n = rows.size
    labels = y[rows]
    total = float(labels.sum())
    best: Optional[Tuple[int, float, float]] = None
    left_counts = np.arange(1, n, dtype=np.float64)
    for j in features:
        x = X[rows, j]
        order = np.argsort(x, kind="mergesort")
        xs = x[order]
        left_pos = np.cumsum(labels[order])[:-1].astype(np.float64)
        valid = (xs[1:] > xs[:-1]) & (left_counts >= min_leaf) & (n - left_counts >= min_leaf)
        if not valid.any():
            continue
        impurity = _weighted_gini(left_pos, left_counts) + _weighted_gini(
            total - left_pos, n - left_counts
        )
        impurity = np.where(valid, impurity, np.inf)
        i = int(np.argmin(impurity))
        if best is None or impurity[i] < best[2]:
            threshold = (xs[i] + xs[i + 1]) / 2.0
            if threshold >= xs[i + 1]:
                threshold = xs[i]
            best = (int(j), float(threshold), float(impurity[i]))
    return best


def _n_split_features(max_features: Union[str, int], n_features: int) -> int:
    if max_features == "all":
        return n_features
    if max_features == "sqrt":
        return max(1, int(math.sqrt(n_features)))
    return max(1, min(int(max_features), n_features))


def build_tree(
    X: np.ndarray,
    y: np.ndarray,
    max_depth: int = 12,
    min_leaf: int = 5,
    n_split_features: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
) -> Params:
    """Grow a CART classification tree with Gini impurity.

    A node splits while it is impure, shallower than ``max_depth``, and some split leaves at
    least ``min_leaf`` rows on each side while lowering the impurity. Rows with
    ``x[feature] <= threshold`` go left. When ``n_split_features`` is below the number of
    features, each split tries a random subset of that size.

    Returns:
        Flat node arrays ``feature``, ``threshold``, ``left``, ``right`` and ``value``. Leaves
        have ``left == -1`` and ``value`` holds the positive fraction of every node.
    """
    n_features = X.shape[1]
    n_split_features = n_features if n_split_features is None else n_split_features
    feature: List[int] = []
    threshold: List[float] = []
    left: List[int] = []
    right: List[int] = []
    value: List[float] = []

    def new_node(rows: np.ndarray) -> int:
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(float(y[rows].mean()))
        return len(value) - 1

    stack = [(new_node(np.arange(y.size)), np.arange(y.size), 0)]
    while stack:
        node, rows, depth = stack.pop()
        positives = float(y[rows].sum())
        if depth >= max_depth or positives in (0.0, float(rows.size)) or rows.size < 2 * min_leaf:
            continue
        if n_split_features < n_features:
            features = np.sort(rng.choice(n_features, size=n_split_features, replace=False))
        else:
            features = range(n_features)
        split = _best_split(X, y, rows, features, min_leaf)
        parent = float(_weighted_gini(np.array(positives), np.array(float(rows.size))))
        if split is None or split[2] >= parent - _MIN_DECREASE:
            continue
        j, cut, _ = split
        goes_left = X[rows, j] <= cut
        left_rows, right_rows = rows[goes_left], rows[~goes_left]
        feature[node], threshold[node] = j, cut
        left[node] = new_node(left_rows)
        right[node] = new_node(right_rows)
        stack.append((right[node], right_rows, depth + 1))
        stack.append((left[node], left_rows, depth + 1))
    return {
        "feature": np.array(feature, dtype=np.int64),
        "threshold": np.array(threshold, dtype=np.float64),
        "left": np.array(left, dtype=np.int64),
        "right": np.array(right, dtype=np.int64),
        "value": np.array(value, dtype=np.float64),
    }


def _score_tree(params: Params, X: np.ndarray) -> np.ndarray:
    feature, threshold = params["feature"], params["threshold"]
    left, right = params["left"], params["right"]
    node = np.zeros(X.shape[0], dtype=np.int64)
    rows = np.arange(X.shape[0])
    while True:
        internal = left[node] >= 0
        if not internal.any():
            break
        goes_left = X[rows, np.maximum(feature[node], 0)] <= threshold[node]
        node = np.where(internal, np.where(goes_left, left[node], right[node]), node)
    return params["value"][node]


def _score_forest(params: Params, X: np.ndarray) -> np.ndarray:
    return member_mean(params["members"], _score_tree, X)


@register_learner("tree", _score_tree)
def _train_tree(X, y, config: LearnerConfig, rng) -> Tuple[Params, Dict]:
    tree = build_tree(X, y, config.max_depth, config.min_leaf)
    return tree, {"n_nodes": int(tree["value"].size)}


@register_learner("random_forest", _score_forest)
def _train_random_forest(X, y, config: LearnerConfig, rng) -> Tuple[Params, Dict]:
    n_split_features = _n_split_features(config.max_features, X.shape[1])
    members = []
    for _ in range(config.n_estimators):
        rows = bootstrap_rows(y, rng, config.bootstrap)
        members.append(
            build_tree(X[rows], y[rows], config.max_depth, config.min_leaf, n_split_features, rng)
        )
    logger.debug(f"Forest of {len(members)} trees, {n_split_features} features per split.")
    return {"members": members}, {"n_split_features": n_split_features}
