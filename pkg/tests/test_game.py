# Copyright (C) 2024 socialgame-core developers
# SPDX-License-Identifier: MIT

import datetime

import numpy as np
import pytest
from pydantic import ValidationError

import socialgame.core.errors as err
from socialgame.core.data.game import (
    DaytypeBaseline,
    GameConfig,
    compute_baselines,
    compute_daily_points,
    compute_points,
)
from socialgame.core.data.types import DateInterval

MONDAY = datetime.date(2017, 9, 11)
SATURDAY = datetime.date(2017, 9, 16)


def test_compute_points_matches_closed_form_on_random_grid():
    rng = np.random.default_rng(0)
    b = rng.uniform(1.0, 1000.0, 1000)
    u = rng.uniform(0.0, 2000.0, 1000)
    s = rng.uniform(0.1, 50.0, 1000)
    for bi, ui, si in zip(b, u, s):
        assert compute_points(bi, ui, si) == pytest.approx(si * (bi - ui) / bi, abs=1e-12)


def test_compute_points_examples():
    assert compute_points(100, 50, 10) == 5.0
    assert compute_points(100, 0, 10) == 10.0
    assert compute_points(100, 100, 10) == 0.0
    assert compute_points(100, 150, 10) == -5.0


@pytest.mark.parametrize(
    "b,u,s,error",
    [
        (0, 10, 1, err.InvalidBaselineError),
        (-5, 10, 1, err.InvalidBaselineError),
        (10, 10, 0, err.InvalidArguments),
        (10, -1, 1, err.InvalidArguments),
    ],
)
def test_compute_points_rejects_invalid_inputs(b, u, s, error):
    with pytest.raises(error):
        compute_points(b, u, s)


def test_game_config_points_use_daytype_and_booster():
    game = GameConfig(
        baselines={"desk_light": {"weekday": 400.0, "weekend": 100.0}},
        boosters={"desk_light": 10.0},
        holidays=[MONDAY],
    )
    assert game.daytype(MONDAY) == "weekend"
    assert game.daytype(MONDAY + datetime.timedelta(days=1)) == "weekday"
    assert game.points("desk_light", MONDAY, usage=50.0) == pytest.approx(5.0)
    assert game.points("desk_light", MONDAY + datetime.timedelta(days=1), 200.0) == 5.0
    assert game.booster("ceiling_fan") == 1.0
    with pytest.raises(err.InvalidArguments):
        game.baseline("ceiling_fan", MONDAY)


def test_game_config_rejects_non_positive_boosters_and_baselines():
    with pytest.raises(ValidationError):
        GameConfig(boosters={"desk_light": 0.0})
    with pytest.raises(ValidationError):
        DaytypeBaseline(weekday=0.0, weekend=1.0)


def test_compute_baselines_average_daily_usage_per_daytype(minute_table_factory):
    """WHEN a light is on half of every day of a week
    THEN both baselines are 720 minutes
    """
    table = minute_table_factory(days=7)
    baselines = compute_baselines(table, DateInterval(start=MONDAY, end=SATURDAY))
    baseline = baselines["occupant_01"]["desk_light"]
    assert baseline.weekday == 720.0
    assert baseline.weekend == 720.0


def test_compute_baselines_needs_both_daytypes(minute_table_factory):
    table = minute_table_factory(days=3)
    with pytest.raises(err.MissingBaselineDataError):
        compute_baselines(table, DateInterval(start=MONDAY, end=MONDAY + datetime.timedelta(2)))


def test_compute_baselines_rejects_unused_resource(minute_table_factory):
    table = minute_table_factory(days=7, states={"desk_light": lambda i, t: 0})
    with pytest.raises(err.InvalidBaselineError):
        compute_baselines(table, DateInterval(start=MONDAY, end=SATURDAY))


def test_compute_baselines_rejects_empty_range(minute_table_factory):
    table = minute_table_factory(days=1)
    with pytest.raises(err.InvalidArguments):
        compute_baselines(table, DateInterval.empty())


def test_compute_daily_points(minute_table_factory):
    table = minute_table_factory(days=2)
    game = GameConfig(baselines={"desk_light": {"weekday": 1440.0, "weekend": 1440.0}})
    daily = compute_daily_points(table, game)
    assert list(daily["points"]) == [0.5, 0.5]
    assert list(daily["baseline"]) == [1440.0, 1440.0]
