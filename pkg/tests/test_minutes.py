# Copyright (C) 2024 socialgame-core developers
# SPDX-License-Identifier: MIT

import datetime
import io

import pandas as pd
import pytest

import socialgame.core.errors as err
from socialgame.core.data.minutes import (
    IngestSchema,
    MinuteTable,
    ingest_minutes,
    split_periods,
)
from socialgame.core.data.types import DateInterval

SCHEMA = IngestSchema(
    occupant_id="user",
    timestamp="time",
    states={"desk_light": "dl"},
    usages={"desk_light": "dl_minutes"},
    points_total="points",
    rank="position",
)


def _source(*rows, header="user,time,dl,dl_minutes,points,position"):
    return io.StringIO("\n".join([header, *rows]) + "\n")


def test_ingest_minutes_maps_columns_and_sorts_rows():
    table = ingest_minutes(
        _source(
            "b,2017-09-11T00:01:00,1,2,0.5,2",
            "a,2017-09-11T00:01:00,0,0,1.5,1",
            "a,2017-09-11T00:00:00,0,0,1.0,1",
        ),
        SCHEMA,
    )
    assert len(table) == 3
    assert table.resources == ("desk_light",)
    assert table.occupants == ["a", "b"]
    assert list(table.frame["state_desk_light"]) == [0, 0, 1]
    assert list(table.frame["points_total"]) == [1.0, 1.5, 0.5]
    assert "rank" in table.present
    assert "survey_points" not in table.present
    assert str(table.frame["timestamp"].dt.tz) == "UTC"


def test_ingest_minutes_reads_epoch_minutes_and_offsets():
    table = ingest_minutes(
        _source("a,0,0,0,0,1", "a,1970-01-01T02:01:00+02:00,1,1,0,1"),
        SCHEMA,
    )
    minutes = list(table.minute_of_day())
    assert minutes == [0, 1]


def test_ingest_minutes_converts_to_the_schema_timezone():
    schema = SCHEMA.model_copy(update={"timezone": "Asia/Singapore"})
    table = ingest_minutes(_source("a,2017-09-10T16:00:00Z,0,0,0,1"), schema)
    assert table.local_dates().iloc[0] == datetime.date(2017, 9, 11)
    assert table.timezone == "Asia/Singapore"


def test_ingest_minutes_reports_the_line_of_a_bad_cell():
    with pytest.raises(err.RowParseError) as e:
        ingest_minutes(
            _source("a,2017-09-11T00:00:00,0,0,0,1", "a,2017-09-11T00:01:00,on,0,0,1"),
            SCHEMA,
        )
    assert e.value.line == 3
    assert e.value.column == "dl"


def test_ingest_minutes_rejects_unparsable_timestamp():
    with pytest.raises(err.RowParseError):
        ingest_minutes(_source("a,yesterday,0,0,0,1"), SCHEMA)


def test_ingest_minutes_requires_mapped_columns():
    with pytest.raises(err.SchemaError):
        ingest_minutes(_source("a,0,0,0", header="user,time,dl,points"), SCHEMA)
    with pytest.raises(err.SchemaError):
        ingest_minutes(io.StringIO(""), SCHEMA)


def test_ingest_minutes_rejects_duplicate_keys():
    with pytest.raises(err.DuplicateKeyError):
        ingest_minutes(_source("a,0,0,0,0,1", "a,0,1,1,0,1"), SCHEMA)


def test_minute_table_rejects_decreasing_usage(minute_frame_factory):
    frame = minute_frame_factory(days=1)
    frame.loc[100, "usage_desk_light"] = 0.0
    frame.loc[99, "usage_desk_light"] = 50.0
    with pytest.raises(err.ProcessingError):
        MinuteTable(frame, ["desk_light"])


def test_minute_table_rejects_usage_beyond_elapsed_minutes(minute_frame_factory):
    frame = minute_frame_factory(days=1)
    frame.loc[10, "usage_desk_light"] = 30.0
    with pytest.raises(err.ProcessingError):
        MinuteTable(frame, ["desk_light"])


def test_minute_table_requires_canonical_columns(minute_frame_factory):
    frame = minute_frame_factory(days=1).drop(columns=["points_total"])
    with pytest.raises(err.SchemaError):
        MinuteTable(frame, ["desk_light"])


def test_minute_table_csv_is_read_back_by_the_canonical_schema(minute_table_factory):
    table = minute_table_factory(occupants=("a", "b"), days=1)
    text = table.to_csv(delimiter=";")
    schema = IngestSchema.canonical(["desk_light"]).model_copy(update={"delimiter": ";"})
    again = ingest_minutes(io.StringIO(text), schema)
    pd.testing.assert_frame_equal(again.frame, table.frame, check_exact=False)


def test_records_and_daily_usage(minute_table_factory):
    table = minute_table_factory(days=2)
    record = next(table.records())
    assert record.occupant_id == "occupant_01"
    assert record.device_states == {"desk_light": 0}
    assert record.rank is None
    daily = table.daily_usage()
    assert list(daily["minutes"]) == [720.0, 720.0]
    assert list(daily["daytype"]) == ["weekday", "weekday"]


def test_for_occupant_and_concat(minute_table_factory):
    table = minute_table_factory(occupants=("a", "b"), days=1)
    a, b = table.for_occupant("a"), table.for_occupant("b")
    assert len(a) == len(b) == 1440
    assert len(MinuteTable.concat([a, b])) == len(table)
    with pytest.raises(err.InvalidArguments):
        MinuteTable.concat([])


def test_split_periods(minute_table_factory):
    table = minute_table_factory(days=3)
    monday = DateInterval(start="2017-09-11", end="2017-09-11")
    wednesday = DateInterval(start="2017-09-13", end="2017-09-13")
    train, test = split_periods(table, monday, wednesday)
    assert len(train) == len(test) == 1440
    with pytest.raises(err.OverlapError):
        split_periods(table, monday, monday)
