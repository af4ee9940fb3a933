# Copyright (C) 2024 socialgame-core developers
# SPDX-License-Identifier: MIT

import numpy as np
import pandas as pd
import pytest

from socialgame.core.data.minutes import MinuteTable, state_column, usage_column
from socialgame.core.data.types import FeatureTag
from socialgame.core.features.matrix import ColumnInfo, FeatureMatrix
from socialgame.core.utils.configuration import RunConfig


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)


@pytest.fixture()
def minute_frame_factory():
    """Returns a function building a canonical per-minute frame.

    ``states`` maps a resource to a function of ``(occupant_index, minute_index)`` returning 0
    or 1. Usage accumulators are derived from the states so the frame is always consistent.
    """

    def _factory(
        occupants=("occupant_01",),
        days=2,
        start="2017-09-11",
        resources=("desk_light",),
        states=None,
        points=None,
        **extra_columns,
    ) -> pd.DataFrame:
        states = states or {}
        frames = []
        for index, occupant in enumerate(occupants):
            timestamps = pd.date_range(start, periods=days * 1440, freq="min", tz="UTC")
            n = len(timestamps)
            frame = pd.DataFrame({"occupant_id": occupant, "timestamp": timestamps})
            dates = timestamps.date
            for resource in resources:
                state_fn = states.get(resource, lambda i, t: int((t // 30) % 2))
                values = np.array([state_fn(index, t) for t in range(n)], dtype=np.int64)
                frame[state_column(resource)] = values
                usage = pd.Series(values).groupby(dates).cumsum().to_numpy()
                frame[usage_column(resource)] = usage.astype(np.float64)
            frame["points_total"] = (
                np.linspace(0.0, 10.0 * (index + 1), n) if points is None else points[index]
            )
            for name, fn in extra_columns.items():
                frame[name] = [fn(index, t) for t in range(n)]
            frames.append(frame)
        return pd.concat(frames, ignore_index=True)

    return _factory


@pytest.fixture()
def minute_table_factory(minute_frame_factory):
    """Returns a function building a :class:`MinuteTable` from ``minute_frame_factory`` arguments."""

    def _factory(resources=("desk_light",), **kwargs) -> MinuteTable:
        frame = minute_frame_factory(resources=resources, **kwargs)
        return MinuteTable(frame, resources)

    return _factory


@pytest.fixture()
def feature_matrix_factory():
    """Returns a function wrapping arrays in a :class:`FeatureMatrix`."""

    def _factory(values, target=None, names=None, tags=None) -> FeatureMatrix:
        values = np.asarray(values, dtype=np.float64)
        names = names or [f"f{j}" for j in range(values.shape[1])]
        tags = tags or [FeatureTag.EXTERNAL] * len(names)
        columns = tuple(ColumnInfo(n, FeatureTag(t)) for n, t in zip(names, tags))
        return FeatureMatrix(values=values, columns=columns, target=target)

    return _factory


@pytest.fixture()
def small_run_config(tmp_path):
    """Returns a function building a fast end-to-end configuration writing under ``tmp_path``."""

    def _factory(**overrides) -> RunConfig:
        raw = {
            "seed": 3,
            "output_dir": str(tmp_path / "run"),
            "simulation": {"n_occupants": 3, "horizon_days": 4, "resources": ["desk_light"]},
            "features": {"lags": [1], "n_selected": 6},
            "learners": {"kinds": ["logistic"], "hyperparameters": {"max_iter": 200}},
            "explain": {"max_rows": 400, "folds": 3, "one_standard_error": True},
            "generate": {"n_samples": 50, "n_perm": 10, "max_rows": 20},
            "deep": {"vae": {"epochs": 2, "hidden": [8, 4], "latent": 2}},
        }
        raw.update(overrides)
        return RunConfig.model_validate(raw)

    return _factory
