# Copyright (C) 2024 socialgame-core developers
# SPDX-License-Identifier: MIT

import datetime

import numpy as np
import pandas as pd
import pytest

import socialgame.core.errors as err
from socialgame.core.data.calendar import DUMMY_GROUPS, calendar_dummies, dummy_names
from socialgame.core.data.detection import DetectionThresholds, detect_device_state
from socialgame.core.data.types import DateInterval, daytype


def test_date_interval_is_inclusive():
    fall = DateInterval(start="2017-09-12", end="2017-11-19")
    assert fall.n_days == 69
    assert datetime.date(2017, 9, 12) in fall
    assert datetime.date(2017, 11, 19) in fall
    assert datetime.date(2017, 11, 20) not in fall
    assert len(list(fall.days())) == 69


def test_empty_date_interval():
    empty = DateInterval.empty()
    assert empty.is_empty
    assert empty.n_days == 0
    assert not empty.overlaps(DateInterval(start="1970-01-01", end="1970-01-05"))


def test_daytype_counts_holidays_as_weekend():
    monday = datetime.date(2017, 9, 11)
    assert daytype(monday) == "weekday"
    assert daytype(monday, holidays=[monday]) == "weekend"
    assert daytype(datetime.date(2017, 9, 16)) == "weekend"


def test_calendar_dummies_are_one_hot_per_group():
    timestamps = pd.Series(pd.date_range("2017-09-15", periods=3 * 1440, freq="17min", tz="UTC"))
    dummies = calendar_dummies(
        timestamps,
        academic_calendar={"midterm": [DateInterval(start="2017-09-16", end="2017-09-16")]},
    )
    assert list(dummies.columns) == dummy_names()
    for names in DUMMY_GROUPS.values():
        assert np.all(dummies[list(names)].sum(axis=1) == 1)
    saturday = timestamps.dt.date == datetime.date(2017, 9, 16)
    assert np.all(dummies.loc[saturday, "midterm"] == 1)
    assert np.all(dummies.loc[saturday, "weekend"] == 1)
    assert np.all(dummies.loc[~saturday, "midterm"] == 0)


def test_calendar_dummies_time_of_day_blocks():
    timestamps = pd.Series(pd.to_datetime(["2017-09-11 05:59", "2017-09-11 06:00", "2017-09-11 18:00"]))
    dummies = calendar_dummies(timestamps, groups=["time_of_day"])
    assert list(dummies["night"]) == [1, 0, 0]
    assert list(dummies["morning"]) == [0, 1, 0]
    assert list(dummies["evening"]) == [0, 0, 1]


def test_calendar_dummies_unknown_group():
    timestamps = pd.Series(pd.to_datetime(["2017-09-11 12:00"]))
    with pytest.raises(err.InvalidArguments, match="season"):
        calendar_dummies(timestamps, groups=["daytype", "season"])


def test_detect_device_state_reports_present_channels_only():
    thresholds = DetectionThresholds()
    rng = np.random.default_rng(0)
    states = detect_device_state(
        {
            "acceleration": rng.normal(0.0, 1.0, 20),
            "desk_illuminance": np.full(20, 500.0),
        },
        thresholds,
    )
    assert states == {"ceiling_fan": 1, "desk_light": 1}


def test_detect_device_state_air_conditioning_needs_both_channels():
    thresholds = DetectionThresholds()
    window = {"humidity": np.full(10, 50.0), "temperature": np.full(10, 24.0)}
    assert detect_device_state(window, thresholds) == {"ac": 1}
    assert detect_device_state({"humidity": np.full(10, 50.0)}, thresholds) == {}
    window["temperature"] = np.full(10, 30.0)
    assert detect_device_state(window, thresholds) == {"ac": 0}


def test_detect_device_state_does_not_depend_on_sample_order():
    thresholds = DetectionThresholds()
    rng = np.random.default_rng(1)
    window = {"acceleration": rng.normal(0.0, 0.1, 50), "ceiling_illuminance": rng.uniform(0, 400, 50)}
    shuffled = {name: rng.permutation(values) for name, values in window.items()}
    assert detect_device_state(window, thresholds) == detect_device_state(shuffled, thresholds)


def test_detect_device_state_rejects_short_windows():
    with pytest.raises(err.WindowTooShortError):
        detect_device_state({"acceleration": [0.0] * 5}, DetectionThresholds())
    with pytest.raises(err.InvalidArguments):
        detect_device_state({}, DetectionThresholds())
