# Copyright (C) 2024 socialgame-core developers
# SPDX-License-Identifier: MIT

import logging
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.special import softmax
from tqdm import tqdm

from socialgame.core.data.calendar import calendar_dummies
from socialgame.core.data.game import GameConfig
from socialgame.core.data.minutes import MinuteTable, state_column, usage_column
from socialgame.core.data.types import MINUTES_PER_DAY
from socialgame.core.errors import (
    DegenerateLabelsError,
    DuplicateOccupantIdError,
    EmptyChoiceSetError,
    InvalidArguments,
    InvalidHorizonError,
    UnknownColumnError,
)
from socialgame.core.evaluation.roc import roc_auc
from socialgame.core.sim.choice import gumbel_noise
from socialgame.core.sim.models import (
    LAG_FEATURE,
    USAGE_FRACTION_FEATURE,
    ExogenousModel,
    OccupantProfile,
)

logger = logging.getLogger(__name__)

_Dynamic = Tuple[int, str, str, int]
"""(feature index, "lag" or "usage", resource, lag order)."""


def _split_features(
    profile: OccupantProfile, columns: Dict[str, np.ndarray], n_rows: int
) -> Tuple[np.ndarray, List[_Dynamic]]:
    """Fill the exogenous part of the design and list the features depending on past choices."""
    design = np.zeros((n_rows, len(profile.features)))
    dynamic: List[_Dynamic] = []
    for j, name in enumerate(profile.features):
        lag = LAG_FEATURE.match(name)
        fraction = USAGE_FRACTION_FEATURE.match(name)
        if name == "intercept":
            design[:, j] = 1.0
        elif lag:
            dynamic.append((j, "lag", lag.group(2), int(lag.group(1))))
        elif fraction:
            dynamic.append((j, "usage", fraction.group(1), 0))
        elif name in columns:
            design[:, j] = columns[name]
        else:
            raise UnknownColumnError(f"feature '{name}' is not available")
    return design, dynamic


def _baseline_per_minute(
    game: GameConfig, resource: str, dates: Sequence
) -> np.ndarray:
    by_day = {day: game.baseline(resource, day) for day in set(dates)}
    return np.array([by_day[day] for day in dates], dtype=np.float64)


def _day_index(dates: np.ndarray) -> np.ndarray:
    changes = np.concatenate([[False], dates[1:] != dates[:-1]])
    return np.cumsum(changes)


def _weights(profile: OccupantProfile) -> Dict[str, np.ndarray]:
    weights = {}
    for resource, utility in profile.utilities.items():
        if not utility.alternatives:
            raise EmptyChoiceSetError(f"resource '{resource}' has an empty choice set")
        weights[resource] = utility.weight_matrix(len(profile.features))
    return weights


def simulate_occupant(
    profile: OccupantProfile,
    exo: ExogenousModel,
    horizon: int,
    game: GameConfig,
    rng: np.random.Generator,
    exogenous: Optional[pd.DataFrame] = None,
) -> MinuteTable:
    """Simulate the minute-by-minute choices of one occupant.

    Each minute, every resource independently picks the alternative maximizing its linear
    utility plus Gumbel noise. With noise independent across resources, maximizing the sum of
    the resources' utilities decomposes exactly into these per-resource maximizations. Usage
    accumulators reset at each local midnight and the running points total follows
    :func:`~socialgame.core.data.game.compute_points` for every resource with a baseline.

    Args:
        profile: Behaviour of the occupant.
        exo: Weather and calendar model.
        horizon: Number of simulated minutes, at least one day.
        game: Points accounting.
        rng: Generator of the choice noise, and of the weather unless ``exogenous`` is given.
        exogenous: Pre-drawn output of ``exo.generate``, shared across a cohort.

    Raises:
        InvalidHorizonError: ``horizon`` is shorter than one day.
        EmptyChoiceSetError: A resource has no alternative.
    """
    if horizon < MINUTES_PER_DAY:
        raise InvalidHorizonError(f"horizon must cover at least one day (got {horizon} minutes)")
    if not profile.utilities:
        raise InvalidArguments(f"profile '{profile.occupant_id}' has no resource")
    weights = _weights(profile)
    if exogenous is None:
        exogenous = exo.generate(horizon, rng)
    exogenous = exogenous.iloc[:horizon].reset_index(drop=True)
    if len(exogenous) < horizon:
        raise InvalidHorizonError("exogenous draws are shorter than the horizon")

    columns = {
        name: exogenous[name].to_numpy() for name in exogenous.columns if name != "timestamp"
    }
    design, dynamic = _split_features(profile, columns, horizon)
    dates = exogenous["timestamp"].dt.date.to_numpy()
    day = _day_index(dates)
    noise = {
        r: gumbel_noise(rng, (horizon, w.shape[0]), profile.noise_scale) for r, w in weights.items()
    }
    baselines = {
        resource: _baseline_per_minute(game, resource, dates)
        for _, kind, resource, _ in dynamic
        if kind == "usage"
    }

    choices = {r: np.zeros(horizon, dtype=np.int64) for r in weights}
    if not dynamic:
        for resource, w in weights.items():
            choices[resource] = np.argmax(design @ w.T + noise[resource], axis=1)
    else:
        usage = dict.fromkeys(weights, 0.0)
        x = np.empty(len(profile.features))
        for t in range(horizon):
            if t > 0 and day[t] != day[t - 1]:
                usage = dict.fromkeys(weights, 0.0)
            x[:] = design[t]
            for j, kind, resource, k in dynamic:
                if kind == "lag":
                    x[j] = float(t >= k and choices[resource][t - k] != 0)
                else:
                    x[j] = usage[resource] / baselines[resource][t]
            for resource, w in weights.items():
                choice = int(np.argmax(w @ x + noise[resource][t]))
                choices[resource][t] = choice
                usage[resource] += float(choice != 0)

    frame = pd.DataFrame({"occupant_id": profile.occupant_id, "timestamp": exogenous["timestamp"]})
    on = {}
    for resource in weights:
        on[resource] = (choices[resource] != 0).astype(np.float64)
        frame[state_column(resource)] = choices[resource]
        frame[usage_column(resource)] = pd.Series(on[resource]).groupby(day).cumsum().to_numpy()

    today = np.zeros(horizon)
    for resource in weights:
        if resource in game.baselines:
            b = _baseline_per_minute(game, resource, dates)
            s = game.booster(resource)
            today += s * (b - frame[usage_column(resource)].to_numpy()) / b
    final = pd.Series(today).groupby(day).last()
    carried = final.cumsum().shift(1, fill_value=0.0).to_numpy()
    frame["points_total"] = today + carried[day]

    off = np.zeros(horizon)
    frame["portal_visits_today"] = (
        pd.Series((rng.random(horizon) < profile.engagement_rate).astype(np.int64))
        .groupby(day)
        .cumsum()
        .to_numpy()
    )
    frame["indoor_temperature"] = (
        columns["external_temperature"]
        - 3.0 * on.get("ac", off)
        - 0.5 * on.get("ceiling_fan", off)
        + rng.normal(0.0, 0.2, horizon)
    )
    frame["indoor_humidity"] = np.clip(
        columns["external_humidity"] - 20.0 * on.get("ac", off) + rng.normal(0.0, 1.0, horizon),
        0.0,
        100.0,
    )
    frame["indoor_illuminance"] = (
        0.05 * columns["solar_radiation"]
        + 300.0 * on.get("desk_light", off)
        + 350.0 * on.get("ceiling_light", off)
        + np.abs(rng.normal(0.0, 5.0, horizon))
    )
    for name in ("external_temperature", "external_humidity", "solar_radiation"):
        frame[name] = columns[name]
    for name in exo.synthetic_names:
        frame[name] = columns[name]
    logger.debug(f"Simulated {horizon} minutes for occupant {profile.occupant_id}.")
    return MinuteTable(
        frame, list(weights), extras=exo.synthetic_names, timezone=exo.timezone
    )


def _daily_ranks(frame: pd.DataFrame, order: Dict[str, int]) -> np.ndarray:
    """Rank of every row's occupant at the end of the row's day, 1 for the most points."""
    dates = frame["timestamp"].dt.date
    grouped = frame.assign(date=dates).groupby(["date", "occupant_id"], sort=False)
    day_end = grouped["points_total"].last()
    day_end = day_end.reset_index()
    day_end["order"] = day_end["occupant_id"].map(order)
    day_end = day_end.sort_values(["date", "points_total", "order"], ascending=[True, False, True])
    day_end["rank"] = day_end.groupby("date").cumcount() + 1
    ranks = day_end.set_index(["date", "occupant_id"])["rank"]
    keys = pd.MultiIndex.from_arrays([dates, frame["occupant_id"]])
    return ranks.reindex(keys).to_numpy(dtype=np.int64)


def simulate_cohort(
    profiles: Sequence[OccupantProfile],
    exo: ExogenousModel,
    horizon: int,
    game: GameConfig,
    rng: np.random.Generator,
    show_progress: bool = False,
) -> MinuteTable:
    """Simulate a cohort sharing the same weather, and rank it every day on points.

    Each occupant gets its own generator seeded from ``rng``. Ties in points are ranked by the
    order of ``profiles``.

    Raises:
        DuplicateOccupantIdError: Two profiles share an occupant id.
    """
    ids = [p.occupant_id for p in profiles]
    if len(set(ids)) != len(ids):
        raise DuplicateOccupantIdError(f"occupant ids must be unique (got {ids})")
    if not profiles:
        raise InvalidArguments("cohort has no occupant")
    if horizon < MINUTES_PER_DAY:
        raise InvalidHorizonError(f"horizon must cover at least one day (got {horizon} minutes)")
    exogenous = exo.generate(horizon, rng)
    seeds = rng.integers(0, 2**63 - 1, size=len(profiles))
    tables = []
    for profile, seed in tqdm(
        zip(profiles, seeds), total=len(profiles), disable=not show_progress
    ):
        tables.append(
            simulate_occupant(
                profile, exo, horizon, game, np.random.default_rng(int(seed)), exogenous=exogenous
            )
        )
    resources = tables[0].resources
    for table in tables[1:]:
        if table.resources != resources:
            raise InvalidArguments("every profile of a cohort must simulate the same resources")
    frame = pd.concat([t.frame for t in tables], ignore_index=True)
    frame["rank"] = _daily_ranks(frame, {occupant: k for k, occupant in enumerate(ids)})
    return MinuteTable(frame, resources, extras=exo.synthetic_names, timezone=exo.timezone)


def evaluate_features(
    profile: OccupantProfile,
    table: MinuteTable,
    game: Optional[GameConfig] = None,
    exo: Optional[ExogenousModel] = None,
) -> np.ndarray:
    """Rebuild the profile's feature vectors from the rows of a single-occupant table.

    Lagged states before the first row count as off, like at the start of a simulation.
    """
    exo = exo or ExogenousModel()
    frame = table.frame
    n_rows = len(frame)
    columns = {"intercept": np.ones(n_rows)}
    dummies = calendar_dummies(frame["timestamp"], exo.holidays, exo.academic_calendar)
    columns.update({name: dummies[name].to_numpy() for name in dummies.columns})
    for name in ("external_temperature", "external_humidity", "solar_radiation", *table.extras):
        if name in frame.columns:
            columns[name] = frame[name].to_numpy()
    design, dynamic = _split_features(profile, columns, n_rows)
    dates = table.local_dates().to_numpy()
    for j, kind, resource, k in dynamic:
        if resource not in table.resources:
            raise UnknownColumnError(f"table has no resource '{resource}'")
        on = (frame[state_column(resource)].to_numpy() != 0).astype(np.float64)
        if kind == "lag":
            design[:, j] = np.concatenate([np.zeros(min(k, n_rows)), on[: max(n_rows - k, 0)]])
        else:
            if game is None:
                raise InvalidArguments("usage fractions need a game configuration")
            before = frame[usage_column(resource)].to_numpy() - on
            design[:, j] = before / _baseline_per_minute(game, resource, dates)
    return design


def bayes_optimal_auc(
    profile: OccupantProfile,
    table: MinuteTable,
    game: Optional[GameConfig] = None,
    exo: Optional[ExogenousModel] = None,
    resource: Optional[str] = None,
) -> float:
    """AUC of the true choice probability as a scorer of the realized on/off states.

    No learner beats this value in expectation on data generated by ``profile``.

    Args:
        profile: Profile that generated the table.
        table: Simulated table. Rows of other occupants are ignored.
        game: Needed when the profile uses usage fractions.
        exo: Calendar settings used for the simulation.
        resource: Scored resource. Defaults to the profile's first resource.

    Raises:
        DegenerateLabelsError: The resource never changes state.
    """
    resource = resource or profile.resources[0]
    if profile.occupant_id not in table.occupants:
        raise InvalidArguments(f"table has no row for occupant '{profile.occupant_id}'")
    table = table.for_occupant(profile.occupant_id)
    design = evaluate_features(profile, table, game, exo)
    weights = profile.utilities[resource].weight_matrix(len(profile.features))
    probabilities = softmax(design @ weights.T / profile.noise_scale, axis=1)
    scores = 1.0 - probabilities[:, 0]
    labels = (table.frame[state_column(resource)].to_numpy() != 0).astype(np.int64)
    if labels.min() == labels.max():
        raise DegenerateLabelsError(f"'{resource}' never changes state")
    return roc_auc(scores, labels).auc
