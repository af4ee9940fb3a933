# Copyright (C) 2024 socialgame-core developers
# SPDX-License-Identifier: MIT

import datetime
import logging
from typing import Dict, Iterable, List, Optional

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field, field_validator

from socialgame.core.data.minutes import MinuteTable
from socialgame.core.data.types import DateInterval, DayType, daytype
from socialgame.core.errors import (
    InvalidArguments,
    InvalidBaselineError,
    MissingBaselineDataError,
)

logger = logging.getLogger(__name__)


class DaytypeBaseline(BaseModel, extra="forbid"):
    """Pre-game average usage of a resource, in minutes per day."""

    weekday: float = Field(gt=0)
    weekend: float = Field(gt=0)

    def for_daytype(self, kind: DayType) -> float:
        return self.weekday if kind == "weekday" else self.weekend


class GameConfig(BaseModel, extra="forbid"):
    """Points accounting of the game.

    Example:
        .. code-block:: python

            game = GameConfig(
                baselines={"desk_light": {"weekday": 402.2, "weekend": 180.0}},
                boosters={"desk_light": 10.0},
            )
            game.points("desk_light", datetime.date(2017, 9, 12), usage=157.5)
    """

    baselines: Dict[str, DaytypeBaseline] = Field(default_factory=dict)
    "Resource to weekday and weekend baselines."
    boosters: Dict[str, float] = Field(default_factory=dict)
    "Resource to points booster. Resources without an entry use a booster of 1."
    pre_game_range: Optional[DateInterval] = None
    "Days used to compute the baselines."
    holidays: List[datetime.date] = Field(default_factory=list)
    "Days counted as weekend days."

    @field_validator("boosters")
    @classmethod
    def boosters_are_positive(cls, boosters):
        for resource, value in boosters.items():
            if not value > 0:
                raise ValueError(f"booster of '{resource}' must be > 0 (got {value})")
        return boosters

    def daytype(self, day: datetime.date) -> DayType:
        return daytype(day, self.holidays)

    def booster(self, resource: str) -> float:
        return self.boosters.get(resource, 1.0)

    def baseline(self, resource: str, day: datetime.date) -> float:
        try:
            return self.baselines[resource].for_daytype(self.daytype(day))
        except KeyError:
            raise InvalidArguments(f"no baseline configured for resource '{resource}'") from None

    def points(self, resource: str, day: datetime.date, usage: float) -> float:
        return compute_points(self.baseline(resource, day), usage, self.booster(resource))


def compute_points(b: float, u: float, s: float) -> float:
    """Points earned for a day: ``s * (b - u) / b``.

    Negative when the usage exceeds the baseline.

    Args:
        b: Baseline, in minutes.
        u: Usage of the day, in minutes.
        s: Points booster.

    Raises:
        InvalidBaselineError: ``b`` is not strictly positive.
        InvalidArguments: ``s`` is not strictly positive or ``u`` is negative.
    """
    if not b > 0:
        raise InvalidBaselineError(f"baseline must be > 0 (got {b})")
    if not s > 0:
        raise InvalidArguments(f"booster must be > 0 (got {s})")
    if u < 0:
        raise InvalidArguments(f"usage must be >= 0 (got {u})")
    return s * (b - u) / b


def compute_baselines(
    table: MinuteTable,
    pre_game_range: DateInterval,
    holidays: Iterable[datetime.date] = (),
) -> Dict[str, Dict[str, DaytypeBaseline]]:
    """Weekday and weekend baselines per occupant and resource.

    A baseline is the arithmetic mean of the daily usage totals over the days of matching
    daytype inside ``pre_game_range``.

    Returns:
        Occupant to resource to baselines.

    Raises:
        InvalidArguments: ``pre_game_range`` is empty.
        MissingBaselineDataError: An occupant has no qualifying day of some daytype.
        InvalidBaselineError: A resource was never used on the qualifying days.
    """
    if pre_game_range.is_empty:
        raise InvalidArguments("pre-game range is empty")
    daily = table.daily_usage(holidays)
    daily = daily[[d in pre_game_range for d in daily["date"]]]
    baselines: Dict[str, Dict[str, DaytypeBaseline]] = {}
    for occupant in sorted(table.occupants):
        per_resource = {}
        for resource in table.resources:
            means = {}
            for kind in ("weekday", "weekend"):
                rows = daily[
                    (daily["occupant_id"] == occupant)
                    & (daily["resource"] == resource)
                    & (daily["daytype"] == kind)
                ]
                if rows.empty:
                    raise MissingBaselineDataError(occupant, resource, kind)
                means[kind] = float(np.mean(np.sort(rows["minutes"].to_numpy())))
                if means[kind] <= 0:
                    raise InvalidBaselineError(
                        f"'{resource}' of occupant '{occupant}' was never used on {kind} days"
                    )
            per_resource[resource] = DaytypeBaseline(**means)
        baselines[occupant] = per_resource
        logger.debug(f"Baselines of {occupant}: {per_resource}")
    return baselines


def compute_daily_points(table: MinuteTable, game: GameConfig) -> pd.DataFrame:
    """Points earned per occupant, day and resource with a configured baseline.

    Coin and survey points are not part of this accounting.
    """
    daily = table.daily_usage(game.holidays)
    daily = daily[daily["resource"].isin(list(game.baselines))].reset_index(drop=True)
    daily["baseline"] = [
        game.baselines[r].for_daytype(k) for r, k in zip(daily["resource"], daily["daytype"])
    ]
    daily["points"] = [
        compute_points(b, u, game.booster(r))
        for b, u, r in zip(daily["baseline"], daily["minutes"], daily["resource"])
    ]
    return daily
