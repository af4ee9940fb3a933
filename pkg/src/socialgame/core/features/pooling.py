# Copyright (C) 2024 socialgame-core developers
# SPDX-License-Identifier: MIT

import datetime
import logging
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field, field_validator

from socialgame.core.data.calendar import DUMMY_GROUPS, calendar_dummies
from socialgame.core.data.game import DaytypeBaseline, GameConfig
from socialgame.core.data.minutes import (
    ENGAGEMENT_COLUMNS,
    EXTERNAL_CHANNELS,
    INDOOR_CHANNELS,
    MinuteTable,
    external_column,
    state_column,
    usage_column,
)
from socialgame.core.data.types import DateInterval, FeatureTag, Mode, daytype
from socialgame.core.errors import EmptyTableError, InvalidArguments, UnknownColumnError
from socialgame.core.features.matrix import ColumnInfo, FeatureMatrix

logger = logging.getLogger(__name__)

Baselines = Mapping[str, Mapping[str, DaytypeBaseline]]
"""Occupant to resource to daytype baselines, as returned by ``compute_baselines``."""


class PoolingConfig(BaseModel, extra="forbid"):
    """Which candidate features the pool holds and how they are selected afterwards."""

    target_resource: Optional[str] = None
    "Resource whose on/off state is predicted. Defaults to the first resource of the table."
    lags: List[int] = Field(default_factory=lambda: [1, 2, 3])
    "Lag orders, in minutes, of the resource states."
    dummy_groups: List[str] = Field(default_factory=lambda: list(DUMMY_GROUPS))
    academic_calendar: Dict[str, List[DateInterval]] = Field(default_factory=dict)
    "Academic period (break, midterm, final) to its date intervals."
    holidays: List[datetime.date] = Field(default_factory=list)
    include_resource: bool = True
    include_usage_fraction: bool = True
    include_indoor: bool = True
    include_external: bool = True
    include_engagement: bool = True
    columns: Optional[List[str]] = None
    "Keep only these pooled columns, in this order."
    n_selected: int = Field(25, ge=1)
    "Number of features kept by mRMR. Clipped to the number of pooled columns."
    bins: int = Field(10, ge=2)
    "Equal-width bins of the mutual information estimates."
    smote_neighbors: int = Field(5, ge=1)

    @field_validator("lags")
    @classmethod
    def lags_are_positive(cls, lags):
        if any(k < 1 for k in lags):
            raise ValueError("lag orders must be >= 1")
        return sorted(set(lags))

    @field_validator("dummy_groups")
    @classmethod
    def groups_are_known(cls, groups):
        unknown = [g for g in groups if g not in DUMMY_GROUPS]
        if unknown:
            raise ValueError(f"unknown dummy groups: {unknown}")
        return groups

    @property
    def warmup(self) -> int:
        """Leading rows of every occupant dropped because their lagged values are undefined."""
        return max([1, *self.lags])


def _lagged(values: np.ndarray, k: int) -> np.ndarray:
    out = np.empty_like(values, dtype=np.float64)
    out[:k] = np.nan
    out[k:] = values[: values.size - k]
    return out


def _baseline_per_row(
    occupant: str,
    resource: str,
    dates: np.ndarray,
    holidays,
    baselines: Optional[Baselines],
    game: Optional[GameConfig],
) -> Optional[np.ndarray]:
    if baselines is not None and resource in baselines.get(occupant, {}):
        baseline = baselines[occupant][resource]
        by_day = {day: baseline.for_daytype(daytype(day, holidays)) for day in set(dates)}
    elif game is not None and resource in game.baselines:
        by_day = {day: game.baseline(resource, day) for day in set(dates)}
    else:
        return None
    return np.array([by_day[day] for day in dates], dtype=np.float64)


def _occupant_pool(
    frame: pd.DataFrame,
    table: MinuteTable,
    config: PoolingConfig,
    baselines: Optional[Baselines],
    game: Optional[GameConfig],
) -> Tuple[List[ColumnInfo], List[np.ndarray]]:
    occupant = frame["occupant_id"].iloc[0]
    columns: List[ColumnInfo] = []
    values: List[np.ndarray] = []

    def add(name: str, tag: FeatureTag, column: np.ndarray):
        columns.append(ColumnInfo(name, tag))
        values.append(np.asarray(column, dtype=np.float64))

    dummies = calendar_dummies(
        frame["timestamp"], config.holidays, config.academic_calendar, config.dummy_groups
    )
    for name in dummies.columns:
        add(name, FeatureTag.DUMMY, dummies[name].to_numpy())

    dates = frame["timestamp"].dt.date.to_numpy()
    for resource in table.resources:
        on = (frame[state_column(resource)].to_numpy() != 0).astype(np.float64)
        if config.include_resource:
            for k in config.lags:
                add(f"lag{k}_{resource}", FeatureTag.RESOURCE, _lagged(on, k))
        if config.include_usage_fraction:
            baseline = _baseline_per_row(
                occupant, resource, dates, config.holidays, baselines, game
            )
            if baseline is not None:
                before = frame[usage_column(resource)].to_numpy() - on
                add(f"usage_fraction_{resource}", FeatureTag.RESOURCE, before / baseline)

    present = table.present
    if config.include_indoor:
        for channel in INDOOR_CHANNELS:
            name = f"indoor_{channel}"
            if name in present:
                add(f"{name}_lag1", FeatureTag.IOT, _lagged(frame[name].to_numpy(), 1))
    if config.include_external:
        for channel in EXTERNAL_CHANNELS:
            name = external_column(channel)
            if name in present:
                add(name, FeatureTag.EXTERNAL, frame[name].to_numpy())
        for name in table.extras:
            add(name, FeatureTag.EXTERNAL, frame[name].to_numpy())
    if config.include_engagement:
        for name in ("points_total", *ENGAGEMENT_COLUMNS):
            if name == "points_total" or name in present:
                add(f"{name}_lag1", FeatureTag.ENGAGEMENT, _lagged(frame[name].to_numpy(), 1))
    return columns, values


def pool_features(
    table: MinuteTable,
    config: Optional[PoolingConfig] = None,
    mode: Mode = "step_ahead",
    game: Optional[GameConfig] = None,
    baselines: Optional[Baselines] = None,
) -> FeatureMatrix:
    """Build the candidate feature pool and the next-state target of a table.

    The pool holds calendar dummies, lagged on/off states and the usage fraction of the day
    (resource tag), lagged indoor readings (iot tag), weather and extra exogenous columns
    (external tag) and lagged engagement counters (engagement tag). In ``sensor_free`` mode the
    iot and resource columns are left out. The first ``config.warmup`` rows of every occupant
    are dropped.

    Args:
        table: Telemetry of one or more occupants.
        config: Pool definition.
        mode: ``step_ahead`` or ``sensor_free``.
        game: Source of the per-resource baselines of the usage fractions.
        baselines: Per-occupant baselines. They take precedence over ``game``.

    Raises:
        EmptyTableError: No row is left.
        UnknownColumnError: The target resource or a whitelisted column does not exist.
    """
    config = config or PoolingConfig()
    if mode not in ("step_ahead", "sensor_free"):
        raise InvalidArguments(f"unknown mode '{mode}'")
    if len(table) == 0:
        raise EmptyTableError("cannot pool features of an empty table")
    target_resource = config.target_resource or table.resources[0]
    if target_resource not in table.resources:
        raise UnknownColumnError(f"table has no resource '{target_resource}'")

    infos: Optional[List[ColumnInfo]] = None
    blocks: List[np.ndarray] = []
    targets: List[np.ndarray] = []
    for occupant, frame in table.frame.groupby("occupant_id", sort=False):
        if len(frame) <= config.warmup:
            logger.warning(f"Occupant {occupant} has no row left after the warm-up.")
            continue
        columns, values = _occupant_pool(frame, table, config, baselines, game)
        if infos is None:
            infos = columns
        elif columns != infos:
            raise InvalidArguments(f"occupant '{occupant}' lacks baselines other occupants have")
        blocks.append(np.column_stack(values)[config.warmup :])
        state = frame[state_column(target_resource)].to_numpy()[config.warmup :]
        targets.append((state != 0).astype(np.int64))
    if infos is None:
        raise EmptyTableError("no row is left after the warm-up")

    values = np.concatenate(blocks)
    keep = [
        j
        for j, info in enumerate(infos)
        if mode == "step_ahead" or info.tag not in (FeatureTag.IOT, FeatureTag.RESOURCE)
    ]
    if config.columns is not None:
        positions = {infos[j].name: j for j in keep}
        unknown = [name for name in config.columns if name not in positions]
        if unknown:
            raise UnknownColumnError(f"columns {unknown} are not in the {mode} pool")
        keep = [positions[name] for name in config.columns]
    pooled = FeatureMatrix(
        values=values[:, keep],
        columns=tuple(infos[j] for j in keep),
        target=np.concatenate(targets),
    )
    logger.debug(f"Pooled {pooled.n_cols} features over {pooled.n_rows} rows ({mode}).")
    return pooled
