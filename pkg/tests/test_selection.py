# Copyright (C) 2024 socialgame-core developers
# SPDX-License-Identifier: MIT

import numpy as np
import pytest

import socialgame.core.errors as err
from socialgame.core.features.selection import mrmr_select, mutual_information


@pytest.fixture()
def and_gate(rng, feature_matrix_factory):
    """WHEN the label is the AND of two independent coins and column 1 copies column 0."""
    n = 4000
    a = rng.integers(0, 2, size=n)
    b = rng.integers(0, 2, size=n)
    noise = rng.normal(size=n)
    y = a & b
    X = feature_matrix_factory(np.column_stack([a, a, b, noise]), target=y)
    return X, y


def test_mutual_information_of_a_column_with_itself_is_its_entropy(rng):
    x = np.tile([0.0, 1.0], 500)
    assert mutual_information(x, x) == pytest.approx(np.log(2))
    assert mutual_information(x, 1 - x) == pytest.approx(np.log(2))


def test_columns_with_few_levels_keep_them():
    """WHEN a column has fewer distinct values than bins, its levels are used as they are."""
    x = np.tile([0.0, 1.0, 10.0], 300)
    assert mutual_information(x, x, bins=3) == pytest.approx(np.log(3))
    # Binned in two, 0 and 1 share the lower bin.
    merged = -(2 / 3 * np.log(2 / 3) + 1 / 3 * np.log(1 / 3))
    assert mutual_information(x, x, bins=2) == pytest.approx(merged)


def test_mutual_information_is_symmetric_and_non_negative(rng):
    x = rng.normal(size=300)
    y = x + rng.normal(size=300)
    assert mutual_information(x, y) == mutual_information(y, x)
    assert mutual_information(x, rng.normal(size=300)) >= 0.0
    assert mutual_information(x, np.ones(300)) == 0.0


def test_mutual_information_errors():
    with pytest.raises(err.LengthMismatchError):
        mutual_information([1.0, 2.0], [1.0, 2.0, 3.0])
    with pytest.raises(err.InvalidArguments):
        mutual_information([1.0], [1.0])


def test_mrmr_skips_the_redundant_copy(and_gate):
    X, y = and_gate
    picked = mrmr_select(X, y, k=2)
    assert sorted(picked) == [0, 2]


def test_mrmr_is_prefix_stable(and_gate):
    X, y = and_gate
    assert mrmr_select(X, y, k=4)[:2] == mrmr_select(X, y, k=2)
    assert sorted(mrmr_select(X, y, k=4)) == [0, 1, 2, 3]


def test_mrmr_errors(and_gate):
    X, y = and_gate
    with pytest.raises(err.KOutOfRangeError):
        mrmr_select(X, y, k=0)
    with pytest.raises(err.KOutOfRangeError):
        mrmr_select(X, y, k=5)
    with pytest.raises(err.LengthMismatchError):
        mrmr_select(X, y[:-1], k=1)
