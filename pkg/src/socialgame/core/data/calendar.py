# Copyright (C) 2024 socialgame-core developers
# SPDX-License-Identifier: MIT

import datetime
from typing import Dict, Iterable, List, Mapping, Optional, Tuple

import numpy as np
import pandas as pd

from socialgame.core.data.types import DateInterval
from socialgame.core.errors import InvalidArguments

DUMMY_GROUPS: Dict[str, Tuple[str, ...]] = {
    "daytype": ("weekday", "weekend"),
    "time_of_day": ("night", "morning", "afternoon", "evening"),
    "academic": ("regular", "break", "midterm", "final"),
}
"""One-hot groups: exactly one column of each group is set for every minute."""

ACADEMIC_PERIODS = ("break", "midterm", "final")

_TIME_OF_DAY_START = {"night": 0, "morning": 6, "afternoon": 12, "evening": 18}


def dummy_names(groups: Iterable[str] = tuple(DUMMY_GROUPS)) -> List[str]:
    return [name for group in groups for name in DUMMY_GROUPS[group]]


def calendar_dummies(
    timestamps: pd.Series,
    holidays: Iterable[datetime.date] = (),
    academic_calendar: Optional[Mapping[str, List[DateInterval]]] = None,
    groups: Iterable[str] = tuple(DUMMY_GROUPS),
) -> pd.DataFrame:
    """One-hot calendar indicators for a series of local timestamps.

    Daytype counts Saturday, Sunday and ``holidays`` as weekend. Time of day splits the day in
    four blocks of six hours starting at midnight (night, morning, afternoon, evening). The
    academic group marks the first matching period of ``academic_calendar`` and falls back to
    ``regular``.

    Raises:
        InvalidArguments: A group is not one of :data:`DUMMY_GROUPS`.
    """
    academic_calendar = academic_calendar or {}
    dates = timestamps.dt.date
    columns: Dict[str, np.ndarray] = {}
    for group in groups:
        if group == "daytype":
            holiday_set = set(holidays)
            weekend = (timestamps.dt.dayofweek >= 5).to_numpy()
            weekend |= dates.isin(list(holiday_set)).to_numpy()
            columns["weekday"] = (~weekend).astype(np.float64)
            columns["weekend"] = weekend.astype(np.float64)
        elif group == "time_of_day":
            hours = timestamps.dt.hour.to_numpy()
            for name, start in _TIME_OF_DAY_START.items():
                columns[name] = ((hours >= start) & (hours < start + 6)).astype(np.float64)
        elif group == "academic":
            assigned = np.zeros(len(timestamps), dtype=bool)
            flags = {}
            for period in ACADEMIC_PERIODS:
                intervals = academic_calendar.get(period, [])
                by_day = {d: any(d in interval for interval in intervals) for d in set(dates)}
                hit = dates.map(by_day).to_numpy(dtype=bool)
                hit &= ~assigned
                assigned |= hit
                flags[period] = hit.astype(np.float64)
            columns["regular"] = (~assigned).astype(np.float64)
            columns.update(flags)
        else:
            raise InvalidArguments(f"unknown dummy group '{group}'")
    ordered = [name for group in groups for name in DUMMY_GROUPS[group]]
    return pd.DataFrame({name: columns[name] for name in ordered}, index=timestamps.index)
