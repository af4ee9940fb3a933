# Copyright (C) 2024 socialgame-core developers
# SPDX-License-Identifier: MIT

import math

import numpy as np
import pandas as pd
import pytest

import socialgame.core.errors as err
from socialgame.core.explain.granger import (
    GRANGER_COLUMNS,
    granger_table,
    granger_test,
    select_granger_lag,
)


@pytest.fixture()
def coupled(rng):
    """WHEN y follows its own past and the previous value of x."""
    n = 500
    x = rng.normal(size=n)
    y = np.zeros(n)
    for t in range(1, n):
        y[t] = 0.5 * y[t - 1] + 0.8 * x[t - 1] + rng.normal()
    return x, y


def test_planted_coupling_is_detected(coupled):
    x, y = coupled
    forward = granger_test(x, y, lag=1)
    assert forward.rejected
    assert forward.decision == "reject"
    assert forward.p_value < 1e-6
    assert forward.df_num == 1
    assert forward.df_den == 500 - 1 - 2 - 1
    assert forward.rss_unrestricted < forward.rss_restricted


def test_test_size_under_independence(rng):
    rejections = [
        granger_test(rng.normal(size=100), rng.normal(size=100), 2).rejected for _ in range(300)
    ]
    assert 0.02 <= np.mean(rejections) <= 0.09


def test_lag_selection_finds_the_planted_delay(rng):
    x = rng.normal(size=400)
    y = np.concatenate([np.zeros(3), x[:-3]]) + 0.1 * rng.normal(size=400)
    assert select_granger_lag(x, y, max_lag=5) == 3


def test_binary_series_enter_as_zero_one(rng):
    x = rng.integers(0, 2, size=300).astype(float)
    y = np.concatenate([[0.0], x[:-1]])
    flipped = np.where(rng.uniform(size=300) < 0.1, 1.0 - y, y)
    assert granger_test(x, flipped).rejected


def test_short_and_degenerate_series(rng):
    with pytest.raises(err.SeriesTooShortError):
        granger_test(rng.normal(size=7), rng.normal(size=7), lag=2)
    assert granger_test(rng.normal(size=8), rng.normal(size=8), lag=2).df_den == 1
    with pytest.raises(err.RankDeficientError):
        granger_test(np.ones(50), rng.normal(size=50))
    with pytest.raises(err.LengthMismatchError):
        granger_test(np.ones(10), np.ones(11))
    with pytest.raises(err.InvalidArguments):
        granger_test(np.ones(10), np.ones(10), lag=0)


def test_granger_table(coupled):
    x, y = coupled
    frame = pd.DataFrame({"x": x, "y": y, "flat": np.ones(x.size)})
    table = granger_table(frame, [("x", "y"), ("flat", "y")])
    assert list(table.columns) == GRANGER_COLUMNS
    assert table.loc[0, "decision"] == "reject"
    assert table.loc[1, "decision"] == "rank_deficient"
    assert math.isnan(table.loc[1, "p_value"])
    selected = granger_table(frame, [("x", "y")], lag=None, max_lag=4)
    assert 1 <= selected.loc[0, "lag"] <= 4
    with pytest.raises(err.UnknownColumnError):
        granger_table(frame, [("x", "z")])
