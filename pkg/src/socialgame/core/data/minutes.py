# Copyright (C) 2024 socialgame-core developers
# SPDX-License-Identifier: MIT

import datetime
import io
import logging
import re
from dataclasses import dataclass, field
from typing import (
    Dict,
    FrozenSet,
    Iterable,
    Iterator,
    List,
    Optional,
    Sequence,
    TextIO,
    Tuple,
    Union,
)

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field, model_validator

from socialgame.core.data.types import DEFAULT_RESOURCES, DateInterval, Path, daytype
from socialgame.core.errors import (
    DuplicateKeyError,
    InvalidArguments,
    OverlapError,
    ProcessingError,
    RowParseError,
    SchemaError,
)
from socialgame.core.utils.files import _expand_user_path

logger = logging.getLogger(__name__)

INDOOR_CHANNELS = ("temperature", "humidity", "illuminance")
EXTERNAL_CHANNELS = ("temperature", "humidity", "solar_radiation")
ENGAGEMENT_COLUMNS = ("survey_points", "rank", "portal_visits_today")
OPTIONAL_COLUMNS = (
    *ENGAGEMENT_COLUMNS,
    *(f"indoor_{c}" for c in INDOOR_CHANNELS),
    *(f"external_{c}" if c != "solar_radiation" else c for c in EXTERNAL_CHANNELS),
)
"""Canonical names of the columns a table may lack."""

_OFFSET_SUFFIX = re.compile(r"(Z|[+-]\d{2}:?\d{2})$")


def state_column(resource: str) -> str:
    return f"state_{resource}"


def usage_column(resource: str) -> str:
    return f"usage_{resource}"


def external_column(channel: str) -> str:
    return "solar_radiation" if channel == "solar_radiation" else f"external_{channel}"


@dataclass(frozen=True)
class MinuteRecord:
    """One minute of telemetry for one occupant."""

    occupant_id: str
    timestamp: pd.Timestamp
    device_states: Dict[str, int]
    usage_today: Dict[str, float]
    points_total: float
    indoor: Dict[str, float] = field(default_factory=dict)
    external: Dict[str, float] = field(default_factory=dict)
    survey_points: float = 0.0
    rank: Optional[int] = None
    portal_visits_today: int = 0
    extras: Dict[str, float] = field(default_factory=dict)


class IngestSchema(BaseModel, extra="forbid"):
    """Mapping from canonical fields to the columns of a delimited source.

    ``occupant_id``, ``timestamp``, ``states``, ``usages`` and ``points_total`` are required and
    raise :class:`~socialgame.core.errors.SchemaError` when missing from the header. Every other
    mapped column is optional: when absent from the source it is marked absent on the table.
    """

    occupant_id: str = "occupant_id"
    "Column holding the opaque occupant identifier."
    timestamp: str = "timestamp"
    "Column holding ISO-8601 timestamps or integer epoch minutes."
    states: Dict[str, str] = Field(
        default_factory=lambda: {r: state_column(r) for r in DEFAULT_RESOURCES}
    )
    "Resource to device-state column."
    usages: Dict[str, str] = Field(
        default_factory=lambda: {r: usage_column(r) for r in DEFAULT_RESOURCES}
    )
    "Resource to accumulated-usage column."
    points_total: str = "points_total"
    "Column holding the running points total."
    survey_points: Optional[str] = "survey_points"
    rank: Optional[str] = "rank"
    portal_visits_today: Optional[str] = "portal_visits_today"
    indoor: Dict[str, str] = Field(
        default_factory=lambda: {c: f"indoor_{c}" for c in INDOOR_CHANNELS}
    )
    "Indoor channel (temperature, humidity, illuminance) to column."
    external: Dict[str, str] = Field(
        default_factory=lambda: {c: external_column(c) for c in EXTERNAL_CHANNELS}
    )
    "External channel (temperature, humidity, solar_radiation) to column."
    extras: Dict[str, str] = Field(default_factory=dict)
    "Additional numeric exogenous columns, name to column."
    delimiter: str = ","
    timezone: str = "UTC"
    "Timezone every timestamp is normalized to. Naive timestamps are read in this timezone."

    @model_validator(mode="after")
    def check_channels(self):
        if set(self.states) != set(self.usages):
            raise ValueError("'states' and 'usages' must map the same resources")
        if not self.states:
            raise ValueError("at least one resource must be mapped")
        unknown = set(self.indoor) - set(INDOOR_CHANNELS)
        unknown |= set(self.external) - set(EXTERNAL_CHANNELS)
        if unknown:
            raise ValueError(f"unknown sensor channels: {sorted(unknown)}")
        return self

    @property
    def resources(self) -> Tuple[str, ...]:
        return tuple(self.states)

    @classmethod
    def canonical(
        cls,
        resources: Sequence[str] = DEFAULT_RESOURCES,
        extras: Sequence[str] = (),
        timezone: str = "UTC",
    ) -> "IngestSchema":
        """Schema matching the columns written by :meth:`MinuteTable.to_csv`."""
        return cls(
            states={r: state_column(r) for r in resources},
            usages={r: usage_column(r) for r in resources},
            extras={name: name for name in extras},
            timezone=timezone,
        )


class MinuteTable:
    """Per-minute telemetry of one or more occupants.

    Rows are sorted by ``(occupant_id, timestamp)`` and keys are unique. Columns follow the
    canonical naming: ``state_<resource>``, ``usage_<resource>``, ``points_total``, plus
    whichever optional columns are present.

    Args:
        frame: Canonical data frame. It is copied and sorted.
        resources: Resources with a state and a usage column.
        extras: Additional numeric exogenous columns.
        timezone: Timezone of the timestamps.
    """

    def __init__(
        self,
        frame: pd.DataFrame,
        resources: Sequence[str],
        extras: Sequence[str] = (),
        timezone: str = "UTC",
    ):
        self._resources = tuple(resources)
        self._extras = tuple(extras)
        self._timezone = timezone
        required = ["occupant_id", "timestamp", "points_total"]
        required += [state_column(r) for r in self._resources]
        required += [usage_column(r) for r in self._resources]
        required += list(self._extras)
        missing = [c for c in required if c not in frame.columns]
        if missing:
            raise SchemaError(f"missing columns: {missing}")
        keep = required + [c for c in OPTIONAL_COLUMNS if c in frame.columns]
        frame = frame.loc[:, keep].sort_values(["occupant_id", "timestamp"], kind="mergesort")
        frame = frame.reset_index(drop=True)
        duplicated = frame.duplicated(["occupant_id", "timestamp"])
        if duplicated.any():
            row = frame.loc[duplicated.idxmax()]
            raise DuplicateKeyError(
                f"duplicate key (occupant '{row['occupant_id']}', {row['timestamp']})"
            )
        self._frame = frame
        self._check_usage()

    @classmethod
    def _trusted(cls, frame: pd.DataFrame, like: "MinuteTable") -> "MinuteTable":
        table = cls.__new__(cls)
        table._resources = like._resources
        table._extras = like._extras
        table._timezone = like._timezone
        table._frame = frame.reset_index(drop=True)
        return table

    def _check_usage(self):
        frame = self._frame
        if frame.empty:
            return
        for resource in self._resources:
            states = frame[state_column(resource)].to_numpy()
            if np.any(states < 0):
                raise ProcessingError(f"negative device state for resource '{resource}'")
        minute_of_day = self.minute_of_day()
        keys = [frame["occupant_id"], self.local_dates()]
        for resource in self._resources:
            usage = frame[usage_column(resource)]
            if np.any(usage.to_numpy() < 0) or np.any(usage.to_numpy() > minute_of_day + 1):
                raise ProcessingError(f"usage of '{resource}' exceeds the minutes elapsed today")
            if np.any(usage.groupby(keys, sort=False).diff().to_numpy() < 0):
                raise ProcessingError(f"usage of '{resource}' decreases within a day")

    def __len__(self) -> int:
        return len(self._frame)

    def __repr__(self) -> str:
        return (
            f"<MinuteTable: {len(self)} rows, {len(self.occupants)} occupants, "
            f"resources={list(self._resources)}>"
        )

    @property
    def frame(self) -> pd.DataFrame:
        """Underlying frame. Treat it as read-only."""
        return self._frame

    @property
    def resources(self) -> Tuple[str, ...]:
        return self._resources

    @property
    def extras(self) -> Tuple[str, ...]:
        return self._extras

    @property
    def timezone(self) -> str:
        return self._timezone

    @property
    def present(self) -> FrozenSet[str]:
        """Optional columns present in the table."""
        return frozenset(c for c in OPTIONAL_COLUMNS if c in self._frame.columns)

    @property
    def occupants(self) -> List[str]:
        return list(pd.unique(self._frame["occupant_id"]))

    def local_dates(self) -> pd.Series:
        return self._frame["timestamp"].dt.date

    def minute_of_day(self) -> np.ndarray:
        ts = self._frame["timestamp"]
        return (ts.dt.hour * 60 + ts.dt.minute).to_numpy()

    def subset(self, mask: Union[np.ndarray, pd.Series]) -> "MinuteTable":
        """Rows selected by a boolean mask, order preserved."""
        return MinuteTable._trusted(self._frame.loc[np.asarray(mask, dtype=bool)], like=self)

    def for_occupant(self, occupant_id: str) -> "MinuteTable":
        return self.subset(self._frame["occupant_id"] == occupant_id)

    def records(self) -> Iterator[MinuteRecord]:
        present = self.present
        for values in self._frame.to_dict("records"):
            yield MinuteRecord(
                occupant_id=values["occupant_id"],
                timestamp=values["timestamp"],
                device_states={r: int(values[state_column(r)]) for r in self._resources},
                usage_today={r: float(values[usage_column(r)]) for r in self._resources},
                points_total=float(values["points_total"]),
                indoor={
                    c: float(values[f"indoor_{c}"])
                    for c in INDOOR_CHANNELS
                    if f"indoor_{c}" in present
                },
                external={
                    c: float(values[external_column(c)])
                    for c in EXTERNAL_CHANNELS
                    if external_column(c) in present
                },
                survey_points=float(values.get("survey_points", 0.0)),
                rank=int(values["rank"]) if "rank" in present else None,
                portal_visits_today=int(values.get("portal_visits_today", 0)),
                extras={name: float(values[name]) for name in self._extras},
            )

    def daily_usage(self, holidays: Iterable[datetime.date] = ()) -> pd.DataFrame:
        """Daily usage totals, one row per occupant, day and resource.

        The total of a day is the last value of its ``usage_<resource>`` accumulator.
        """
        holidays = list(holidays)
        frame = self._frame.assign(date=self.local_dates())
        usage_columns = [usage_column(r) for r in self._resources]
        daily = frame.groupby(["occupant_id", "date"], sort=True)[usage_columns].max()
        daily = daily.rename(columns={usage_column(r): r for r in self._resources}).reset_index()
        long = daily.melt(
            id_vars=["occupant_id", "date"], var_name="resource", value_name="minutes"
        )
        long["daytype"] = [daytype(d, holidays) for d in long["date"]]
        return long.sort_values(["occupant_id", "resource", "date"], kind="mergesort").reset_index(
            drop=True
        )

    def to_csv(self, path_or_buffer: Union[Path, TextIO, None] = None, delimiter: str = ","):
        """Write the table in the delimited layout read by :func:`ingest_minutes`.

        Returns:
            The text when ``path_or_buffer`` is ``None``.
        """
        frame = self._frame.copy()
        frame["timestamp"] = frame["timestamp"].map(lambda ts: ts.isoformat())
        if path_or_buffer is None:
            buffer = io.StringIO()
            frame.to_csv(buffer, sep=delimiter, index=False, lineterminator="\n")
            return buffer.getvalue()
        if not hasattr(path_or_buffer, "write"):
            path_or_buffer = _expand_user_path(path_or_buffer)
            path_or_buffer.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path_or_buffer, sep=delimiter, index=False, lineterminator="\n")
        return None

    @staticmethod
    def concat(tables: Sequence["MinuteTable"]) -> "MinuteTable":
        if not tables:
            raise InvalidArguments("nothing to concatenate")
        first = tables[0]
        for table in tables[1:]:
            if table.resources != first.resources or table.extras != first.extras:
                raise InvalidArguments("tables with different resources cannot be concatenated")
        frame = pd.concat([t.frame for t in tables], ignore_index=True)
        return MinuteTable(frame, first.resources, first.extras, first.timezone)


def _first_bad_row(mask: pd.Series) -> int:
    """Line number in the source of the first flagged row: header is line 1."""
    return int(np.flatnonzero(mask.to_numpy())[0]) + 2


def _parse_timestamps(raw: pd.Series, column: str, timezone: str) -> pd.Series:
    raw = raw.str.strip()
    numeric = pd.to_numeric(raw, errors="coerce")
    is_epoch = numeric.notna()
    has_offset = raw.str.contains(_OFFSET_SUFFIX) & ~is_epoch
    naive = ~is_epoch & ~has_offset
    parts = []
    if is_epoch.any():
        minutes = numeric[is_epoch]
        if np.any(minutes.to_numpy() != np.round(minutes.to_numpy())):
            raise RowParseError(
                _first_bad_row(is_epoch & (numeric != numeric.round())), column, "fractional"
            )
        seconds = (minutes.astype("int64") * 60).astype("int64")
        parts.append(pd.to_datetime(seconds, unit="s", utc=True).dt.tz_convert(timezone))
    if has_offset.any():
        parsed = pd.to_datetime(raw[has_offset], format="ISO8601", utc=True, errors="coerce")
        parts.append(parsed.dt.tz_convert(timezone))
    if naive.any():
        parsed = pd.to_datetime(raw[naive], format="ISO8601", errors="coerce")
        parts.append(parsed.dt.tz_localize(timezone, ambiguous="NaT", nonexistent="NaT"))
    empty = pd.Series([], dtype=f"datetime64[ns, {timezone}]")
    parsed = pd.concat(parts).sort_index() if parts else empty
    bad = parsed.isna()
    if bad.any():
        line = _first_bad_row(bad)
        raise RowParseError(line, column, raw.iloc[line - 2])
    return parsed.dt.floor("min")


def _parse_numeric(raw: pd.Series, column: str, integer: bool = False) -> pd.Series:
    values = pd.to_numeric(raw.str.strip(), errors="coerce")
    bad = values.isna() | ~np.isfinite(values.fillna(0.0))
    if integer:
        bad |= values.fillna(0.0) != values.fillna(0.0).round()
    if bad.any():
        line = _first_bad_row(bad)
        raise RowParseError(line, column, raw.iloc[line - 2])
    return values.astype("int64") if integer else values.astype("float64")


def ingest_minutes(
    source: Union[Path, TextIO], schema: Optional[IngestSchema] = None
) -> MinuteTable:
    """Read a delimited per-minute export into a :class:`MinuteTable`.

    Args:
        source: Path or text stream with a header row.
        schema: Column mapping. Defaults to the canonical layout.

    Raises:
        SchemaError: A required mapped column is missing, or the source has no header.
        RowParseError: A cell could not be parsed. The line number counts the header as line 1.
        DuplicateKeyError: The same occupant and timestamp appear twice.
    """
    schema = schema or IngestSchema()
    if not hasattr(source, "read"):
        source = _expand_user_path(source)
    try:
        raw = pd.read_csv(
            source, sep=schema.delimiter, dtype=str, keep_default_na=False, na_filter=False
        )
    except pd.errors.EmptyDataError:
        raise SchemaError("source has no header row") from None
    header = set(raw.columns)
    required = [schema.occupant_id, schema.timestamp, schema.points_total]
    required += list(schema.states.values()) + list(schema.usages.values())
    missing = [c for c in required if c not in header]
    if missing:
        raise SchemaError(f"mapped columns missing from source: {missing}")

    frame = pd.DataFrame(index=raw.index)
    frame["occupant_id"] = raw[schema.occupant_id].str.strip()
    frame["timestamp"] = _parse_timestamps(raw[schema.timestamp], schema.timestamp, schema.timezone)
    for resource, column in schema.states.items():
        frame[state_column(resource)] = _parse_numeric(raw[column], column, integer=True)
    for resource, column in schema.usages.items():
        frame[usage_column(resource)] = _parse_numeric(raw[column], column)
    frame["points_total"] = _parse_numeric(raw[schema.points_total], schema.points_total)

    optional: Dict[str, Tuple[str, bool]] = {}
    for name in ENGAGEMENT_COLUMNS:
        column = getattr(schema, name)
        if column is not None:
            optional[name] = (column, name != "survey_points")
    for channel, column in schema.indoor.items():
        optional[f"indoor_{channel}"] = (column, False)
    for channel, column in schema.external.items():
        optional[external_column(channel)] = (column, False)
    for name, (column, integer) in optional.items():
        if column in header:
            frame[name] = _parse_numeric(raw[column], column, integer=integer)
        else:
            logger.debug(f"Optional column '{column}' absent from source, marked absent.")
    extras = []
    for name, column in schema.extras.items():
        if column in header:
            frame[name] = _parse_numeric(raw[column], column)
            extras.append(name)
    table = MinuteTable(frame, schema.resources, extras=extras, timezone=schema.timezone)
    logger.debug(f"Ingested {len(table)} rows for {len(table.occupants)} occupants.")
    return table


def split_periods(
    table: MinuteTable, train: DateInterval, test: DateInterval
) -> Tuple[MinuteTable, MinuteTable]:
    """Partition a table into train and test periods by local calendar day.

    Rows outside both intervals are dropped.

    Raises:
        OverlapError: The intervals share a day.
    """
    if train.overlaps(test):
        raise OverlapError(f"train {train} and test {test} intervals intersect")
    dates = table.local_dates()
    in_train = dates.map(lambda d: d in train).to_numpy(dtype=bool)
    in_test = dates.map(lambda d: d in test).to_numpy(dtype=bool)
    dropped = len(table) - int(in_train.sum()) - int(in_test.sum())
    if dropped:
        logger.debug(f"{dropped} rows fall outside both periods and are dropped.")
    return table.subset(in_train), table.subset(in_test)

