# Copyright (C) 2024 socialgame-core developers
# SPDX-License-Identifier: MIT

import numpy as np
import pytest

import socialgame.core.errors as err
from socialgame.core.data.types import FeatureTag
from socialgame.core.features.smote import smote

TAGS = [FeatureTag.EXTERNAL, FeatureTag.EXTERNAL, FeatureTag.DUMMY]


@pytest.fixture()
def imbalanced(rng, feature_matrix_factory):
    majority = np.column_stack([rng.normal(size=(20, 2)), rng.integers(0, 2, size=20)])
    minority = np.column_stack([rng.normal(5.0, 0.5, size=(5, 2)), [0, 1, 0, 1, 1]])
    values = np.concatenate([majority, minority])
    y = np.array([0] * 20 + [1] * 5)
    return feature_matrix_factory(values, target=y, tags=TAGS), y


def test_smote_balances_the_classes(imbalanced, rng):
    X, y = imbalanced
    balanced, labels = smote(X, y, k_neighbors=3, rng=rng)
    assert np.bincount(labels).tolist() == [20, 20]
    np.testing.assert_array_equal(balanced.target, labels)
    np.testing.assert_array_equal(balanced.values[:25], X.values)
    np.testing.assert_array_equal(labels[25:], 1)


def test_synthetic_rows_stay_within_the_minority_class(imbalanced, rng):
    X, y = imbalanced
    balanced, _ = smote(X, y, k_neighbors=3, rng=rng)
    minority = X.values[y == 1]
    synthetic = balanced.values[25:]
    assert np.all(synthetic[:, :2] >= minority[:, :2].min(axis=0) - 1e-12)
    assert np.all(synthetic[:, :2] <= minority[:, :2].max(axis=0) + 1e-12)
    assert set(np.unique(synthetic[:, 2])) <= {0.0, 1.0}


def test_dummy_columns_take_the_nearer_endpoint(feature_matrix_factory, rng):
    """WHEN the two minority rows are (0, 0) and (1, 1) with the second column a dummy."""
    values = np.concatenate([np.full((12, 2), 5.0), [[0.0, 0.0], [1.0, 1.0]]])
    y = np.array([0] * 12 + [1] * 2)
    X = feature_matrix_factory(values, target=y, tags=[FeatureTag.EXTERNAL, FeatureTag.DUMMY])
    balanced, _ = smote(X, y, k_neighbors=1, rng=rng)
    synthetic = balanced.values[14:]
    np.testing.assert_array_equal(synthetic[:, 1], (synthetic[:, 0] > 0.5).astype(float))


def test_smote_is_reproducible(imbalanced):
    X, y = imbalanced
    first, _ = smote(X, y, rng=np.random.default_rng(5))
    second, _ = smote(X, y, rng=np.random.default_rng(5))
    np.testing.assert_array_equal(first.values, second.values)


def test_balanced_input_is_returned_unchanged(feature_matrix_factory):
    X = feature_matrix_factory([[0.0], [1.0], [2.0], [3.0]], target=[0, 1, 0, 1])
    balanced, labels = smote(X, X.target)
    np.testing.assert_array_equal(balanced.values, X.values)
    assert labels.tolist() == [0, 1, 0, 1]


def test_smote_errors(feature_matrix_factory):
    X = feature_matrix_factory([[0.0], [1.0], [2.0]])
    with pytest.raises(err.SingleClassError):
        smote(X, [0, 0, 0])
    with pytest.raises(err.MinorityTooSmallError):
        smote(X, [0, 0, 1])
    with pytest.raises(err.LengthMismatchError):
        smote(X, [0, 1])
