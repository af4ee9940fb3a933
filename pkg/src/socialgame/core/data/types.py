# Copyright (C) 2024 socialgame-core developers
# SPDX-License-Identifier: MIT

import datetime
import os
import pathlib
from enum import Enum
from typing import Iterable, Literal, Tuple, Union

from pydantic import BaseModel, ConfigDict

Path = Union[pathlib.Path, str, os.PathLike]
"""
Path to a file or folder as an :obj:`pathlib.Path` object or a format supported by ``pathlib``.
"""

DayType = Literal["weekday", "weekend"]
"""Daytype of a calendar day: Saturday, Sunday and configured holidays are weekend days."""

Mode = Literal["step_ahead", "sensor_free"]
"""
Feature regime. ``step_ahead`` uses every available column, ``sensor_free`` drops
everything derived from the in-room sensors.
"""

DEFAULT_RESOURCES: Tuple[str, ...] = ("ceiling_light", "desk_light", "ceiling_fan", "ac")
"""Resources monitored in a single-occupant office."""

MINUTES_PER_DAY = 1440


class FeatureTag(str, Enum):
    """Provenance of a feature column."""

    IOT = "iot"
    "Reading of an in-room sensor."
    EXTERNAL = "external"
    "Weather or other exogenous quantity."
    ENGAGEMENT = "engagement"
    "Points, rank and portal activity."
    DUMMY = "dummy"
    "One-hot calendar indicator."
    RESOURCE = "resource"
    "Lagged device state or usage derived from the sensors."


class DateInterval(BaseModel):
    """Inclusive range of calendar days.

    An interval whose ``end`` precedes its ``start`` is empty.

    Example:
        .. code-block:: python

            fall = DateInterval(start="2017-09-12", end="2017-11-19")
            assert fall.n_days == 69
    """

    model_config = ConfigDict(frozen=True)

    start: datetime.date
    "First day of the interval."
    end: datetime.date
    "Last day of the interval, included."

    @classmethod
    def empty(cls) -> "DateInterval":
        return cls(start=datetime.date(1970, 1, 2), end=datetime.date(1970, 1, 1))

    @property
    def is_empty(self) -> bool:
        return self.end < self.start

    @property
    def n_days(self) -> int:
        return max(0, (self.end - self.start).days + 1)

    def __contains__(self, day: datetime.date) -> bool:
        return self.start <= day <= self.end

    def overlaps(self, other: "DateInterval") -> bool:
        if self.is_empty or other.is_empty:
            return False
        return self.start <= other.end and other.start <= self.end

    def days(self) -> Iterable[datetime.date]:
        for offset in range(self.n_days):
            yield self.start + datetime.timedelta(days=offset)


def daytype(day: datetime.date, holidays: Iterable[datetime.date] = ()) -> DayType:
    """Return the daytype of ``day``, counting ``holidays`` as weekend days."""
    if day.weekday() >= 5 or day in set(holidays):
        return "weekend"
    return "weekday"
