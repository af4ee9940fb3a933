# Copyright (C) 2024 socialgame-core developers
# SPDX-License-Identifier: MIT

import datetime
import logging
import math
import re
from typing import Dict, List, Literal, Optional, Sequence

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field, model_validator

from socialgame.core.data.calendar import calendar_dummies, dummy_names
from socialgame.core.data.types import DateInterval

logger = logging.getLogger(__name__)

WEATHER_FEATURES = ("external_temperature", "external_humidity", "solar_radiation")
LAG_FEATURE = re.compile(r"^lag(\d+)_(.+)$")
USAGE_FRACTION_FEATURE = re.compile(r"^usage_fraction_(.+)$")
SYNTHETIC_FEATURE = re.compile(r"^z(\d+)$")


class ResourceUtility(BaseModel, extra="forbid"):
    """Linear utilities of the alternatives of one resource.

    The first alternative is the "off" state. Alternatives without coefficients have zero
    utility, so a binary resource only needs the coefficients of ``"on"``.
    """

    alternatives: List[str] = Field(default_factory=lambda: ["off", "on"])
    "Choice set. Index 0 is the off state."
    coefficients: Dict[str, List[float]] = Field(default_factory=dict)
    "Alternative to utility weights, aligned with the profile's feature list."

    @model_validator(mode="after")
    def coefficients_name_alternatives(self):
        unknown = set(self.coefficients) - set(self.alternatives)
        if unknown:
            raise ValueError(f"coefficients given for unknown alternatives {sorted(unknown)}")
        return self

    @classmethod
    def binary(cls, beta: List[float]) -> "ResourceUtility":
        return cls(coefficients={"on": list(beta)})

    def weight_matrix(self, n_features: int) -> np.ndarray:
        """Weights as an ``(n_alternatives, n_features)`` array."""
        weights = np.zeros((len(self.alternatives), n_features))
        for k, alternative in enumerate(self.alternatives):
            if alternative in self.coefficients:
                weights[k] = self.coefficients[alternative]
        return weights


class OccupantProfile(BaseModel, extra="forbid"):
    """Random-utility behaviour of one occupant.

    The utility of alternative ``k`` of resource ``i`` at minute ``t`` is ``beta_ik . x_t`` plus
    Gumbel noise of scale ``noise_scale``. ``x_t`` is evaluated over ``features``, a list drawn
    from this vocabulary:

    * ``intercept``
    * calendar dummies: ``weekday``, ``weekend``, ``night``, ``morning``, ``afternoon``,
      ``evening``, ``regular``, ``break``, ``midterm``, ``final``
    * weather: ``external_temperature``, ``external_humidity``, ``solar_radiation``
    * synthetic standard-normal exogenous features ``z1`` ... ``zK``
    * ``lag{k}_{resource}``: on/off state of a resource ``k`` minutes earlier, ``k <= lag_order``
    * ``usage_fraction_{resource}``: usage so far today divided by the daytype baseline

    Example:
        .. code-block:: python

            profile = OccupantProfile(
                occupant_id="alice",
                features=["intercept", "z1", "z2"],
                utilities={"desk_light": ResourceUtility.binary([0.0, 2.0, -1.0])},
            )
    """

    occupant_id: str
    features: List[str] = Field(default_factory=lambda: ["intercept"])
    utilities: Dict[str, ResourceUtility] = Field(default_factory=dict)
    "Resource to utilities. Keys define the simulated resources."
    noise_scale: float = Field(1.0, gt=0)
    "Scale of the Gumbel noise."
    lag_order: int = Field(0, ge=0)
    "Number of past own states that may enter the features."
    engagement_rate: float = Field(0.002, ge=0, le=1)
    "Probability of a portal visit in any given minute."

    @model_validator(mode="after")
    def check_features(self):
        known = set(dummy_names()) | set(WEATHER_FEATURES) | {"intercept"}
        for name in self.features:
            if name in known or SYNTHETIC_FEATURE.match(name):
                continue
            lag = LAG_FEATURE.match(name)
            if lag:
                if not 1 <= int(lag.group(1)) <= self.lag_order:
                    raise ValueError(f"'{name}' exceeds the lag order {self.lag_order}")
                if lag.group(2) not in self.utilities:
                    raise ValueError(f"'{name}' refers to an unknown resource")
                continue
            fraction = USAGE_FRACTION_FEATURE.match(name)
            if fraction and fraction.group(1) in self.utilities:
                continue
            raise ValueError(f"unknown feature '{name}'")
        for resource, utility in self.utilities.items():
            for alternative, beta in utility.coefficients.items():
                if len(beta) != len(self.features):
                    raise ValueError(
                        f"'{resource}'/'{alternative}' has {len(beta)} weights "
                        f"for {len(self.features)} features"
                    )
        return self

    @property
    def resources(self) -> List[str]:
        return list(self.utilities)

    @property
    def is_dynamic(self) -> bool:
        """Whether the features depend on past choices."""
        return any(
            LAG_FEATURE.match(f) or USAGE_FRACTION_FEATURE.match(f) for f in self.features
        )


class ExogenousModel(BaseModel, extra="forbid"):
    """Weather and calendar shared by every occupant of a simulation.

    Weather follows a daily cosine cycle plus seeded Gaussian noise: temperature peaks at
    ``peak_hour``, humidity is in opposite phase and clipped to [0, 100], solar radiation is a
    half sine between 06:00 and 18:00.
    """

    start: datetime.datetime = datetime.datetime(2017, 9, 12)
    "Local start of the simulation."
    timezone: str = "UTC"
    temperature_mean: float = 28.0
    temperature_amplitude: float = 3.0
    temperature_noise: float = Field(0.3, ge=0)
    humidity_mean: float = 75.0
    humidity_amplitude: float = 12.0
    humidity_noise: float = Field(2.0, ge=0)
    solar_peak: float = Field(800.0, ge=0)
    solar_noise: float = Field(20.0, ge=0)
    peak_hour: float = 14.0
    n_synthetic: int = Field(0, ge=0)
    "Number of synthetic standard-normal features ``z1`` ... ``zK``."
    academic_calendar: Dict[Literal["break", "midterm", "final"], List[DateInterval]] = Field(
        default_factory=dict
    )
    holidays: List[datetime.date] = Field(default_factory=list)
    seed: Optional[int] = None
    "Seed of the weather draws. When unset, draws come from the generator passed to generate()."

    @property
    def synthetic_names(self) -> List[str]:
        return [f"z{k + 1}" for k in range(self.n_synthetic)]

    def timestamps(self, n_minutes: int) -> pd.Series:
        start = pd.Timestamp(self.start)
        start = start.tz_localize(self.timezone) if start.tzinfo is None else start.tz_convert(
            self.timezone
        )
        return pd.Series(pd.date_range(start, periods=n_minutes, freq="min"))

    def generate(self, n_minutes: int, rng: np.random.Generator) -> pd.DataFrame:
        """Draw ``n_minutes`` of weather, calendar flags and synthetic features."""
        if self.seed is not None:
            rng = np.random.default_rng(self.seed)
        timestamps = self.timestamps(n_minutes)
        hours = (timestamps.dt.hour + timestamps.dt.minute / 60.0).to_numpy()
        cycle = np.cos(2 * math.pi * (hours - self.peak_hour) / 24.0)
        frame = pd.DataFrame({"timestamp": timestamps})
        frame["external_temperature"] = (
            self.temperature_mean
            + self.temperature_amplitude * cycle
            + rng.normal(0.0, self.temperature_noise, n_minutes)
        )
        frame["external_humidity"] = np.clip(
            self.humidity_mean
            - self.humidity_amplitude * cycle
            + rng.normal(0.0, self.humidity_noise, n_minutes),
            0.0,
            100.0,
        )
        daylight = (hours >= 6) & (hours <= 18)
        solar = self.solar_peak * np.sin(math.pi * (hours - 6) / 12.0)
        solar = solar + rng.normal(0.0, self.solar_noise, n_minutes)
        frame["solar_radiation"] = np.where(daylight, np.maximum(solar, 0.0), 0.0)
        for name in self.synthetic_names:
            frame[name] = rng.standard_normal(n_minutes)
        dummies = calendar_dummies(timestamps, self.holidays, self.academic_calendar)
        return pd.concat([frame, dummies], axis=1)


def default_cohort(
    n_occupants: int = 3,
    resources: Sequence[str] = ("desk_light", "ceiling_fan"),
    seed: int = 0,
) -> List[OccupantProfile]:
    """Heterogeneous cohort used when a run lists no profile.

    Every occupant reacts to the time of day, the outdoor temperature and its own state one
    minute earlier, with weights drawn around shared means from ``seed``.
    """
    if n_occupants < 1:
        raise ValueError(f"n_occupants must be >= 1 (got {n_occupants})")
    features = ["intercept", "morning", "afternoon", "evening", "external_temperature"]
    features += [f"lag1_{r}" for r in resources]
    rng = np.random.default_rng(seed)
    profiles = []
    for index in range(n_occupants):
        utilities = {}
        for resource in resources:
            beta = [-3.0, 0.5, 1.0, 1.2, 0.05] + [0.0] * len(resources)
            beta[len(features) - len(resources) + list(resources).index(resource)] = 3.0
            beta = np.asarray(beta) + rng.normal(0.0, 0.2, len(features))
            utilities[resource] = ResourceUtility.binary([float(b) for b in beta])
        profiles.append(
            OccupantProfile(
                occupant_id=f"occupant_{index + 1:02d}",
                features=features,
                utilities=utilities,
                lag_order=1,
                engagement_rate=float(rng.uniform(0.0005, 0.005)),
            )
        )
    return profiles
