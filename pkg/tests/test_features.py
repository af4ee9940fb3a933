# Copyright (C) 2024 socialgame-core developers
# SPDX-License-Identifier: MIT

import numpy as np
import pytest

import socialgame.core.errors as err
from socialgame.core.data.game import DaytypeBaseline, GameConfig
from socialgame.core.data.types import FeatureTag
from socialgame.core.features.matrix import drop_constant_columns, standardize
from socialgame.core.features.pooling import PoolingConfig, pool_features


@pytest.fixture()
def sensor_table(minute_table_factory):
    return minute_table_factory(
        days=1,
        indoor_temperature=lambda i, t: 25.0 + (t % 7),
        external_temperature=lambda i, t: 30.0 - (t % 5),
        rank=lambda i, t: 1,
    )


def test_step_ahead_pool_holds_every_family(sensor_table):
    pooled = pool_features(sensor_table, PoolingConfig(lags=[1, 2]))
    names = pooled.names
    assert "lag1_desk_light" in names
    assert "lag2_desk_light" in names
    assert "indoor_temperature_lag1" in names
    assert "external_temperature" in names
    assert "rank_lag1" in names
    assert "points_total_lag1" in names
    assert "weekday" in names
    assert pooled.n_rows == 1440 - 2


def test_sensor_free_pool_drops_iot_and_resource_columns(sensor_table):
    pooled = pool_features(sensor_table, PoolingConfig(lags=[1, 2]), mode="sensor_free")
    assert FeatureTag.IOT not in pooled.tags
    assert FeatureTag.RESOURCE not in pooled.tags
    assert "external_temperature" in pooled.names
    assert pooled.n_rows == 1440 - 2


def test_lagged_states_and_target_are_aligned(sensor_table):
    pooled = pool_features(sensor_table, PoolingConfig(lags=[1, 3]))
    states = sensor_table.frame["state_desk_light"].to_numpy()
    lag1 = pooled.values[:, pooled.names.index("lag1_desk_light")]
    lag3 = pooled.values[:, pooled.names.index("lag3_desk_light")]
    np.testing.assert_array_equal(pooled.target, states[3:])
    np.testing.assert_array_equal(lag1, states[2:-1])
    np.testing.assert_array_equal(lag3, states[:-3])


def test_usage_fraction_prefers_occupant_baselines(sensor_table):
    baselines = {"occupant_01": {"desk_light": DaytypeBaseline(weekday=720.0, weekend=720.0)}}
    game = GameConfig(baselines={"desk_light": {"weekday": 1440.0, "weekend": 1440.0}})
    pooled = pool_features(sensor_table, PoolingConfig(lags=[1]), game=game, baselines=baselines)
    fraction = pooled.values[:, pooled.names.index("usage_fraction_desk_light")]
    frame = sensor_table.frame
    before = frame["usage_desk_light"].to_numpy() - frame["state_desk_light"].to_numpy()
    np.testing.assert_allclose(fraction, before[1:] / 720.0)
    without = pool_features(sensor_table, PoolingConfig(lags=[1]))
    assert "usage_fraction_desk_light" not in without.names


def test_column_whitelist_keeps_the_given_order(sensor_table):
    config = PoolingConfig(lags=[1], columns=["external_temperature", "lag1_desk_light"])
    pooled = pool_features(sensor_table, config)
    assert pooled.names == ["external_temperature", "lag1_desk_light"]
    with pytest.raises(err.UnknownColumnError):
        pool_features(sensor_table, config, mode="sensor_free")


def test_pool_features_errors(sensor_table):
    with pytest.raises(err.UnknownColumnError):
        pool_features(sensor_table, PoolingConfig(target_resource="ac"))
    with pytest.raises(err.InvalidArguments):
        pool_features(sensor_table, mode="tomorrow")
    short = sensor_table.subset(np.arange(len(sensor_table)) < 2)
    with pytest.raises(err.EmptyTableError):
        pool_features(short, PoolingConfig(lags=[3]))


def test_standardize_and_scaler(feature_matrix_factory):
    X = feature_matrix_factory(
        [[1.0, 0.0], [3.0, 1.0], [5.0, 1.0]],
        names=["x", "weekday"],
        tags=[FeatureTag.EXTERNAL, FeatureTag.DUMMY],
    )
    scaled, scaler = standardize(X)
    np.testing.assert_allclose(scaled.values[:, 0].mean(), 0.0, atol=1e-12)
    np.testing.assert_allclose(scaled.values[:, 0].std(), 1.0)
    np.testing.assert_array_equal(scaled.values[:, 1], [0.0, 1.0, 1.0])
    np.testing.assert_allclose(scaler.inverse_transform(scaled).values, X.values)
    np.testing.assert_allclose(scaler.transform(np.array([[3.0, 1.0]])), [[0.0, 1.0]])
    with pytest.raises(err.ArityMismatchError):
        scaler.transform(np.zeros((1, 3)))


def test_standardize_rejects_constant_columns(feature_matrix_factory):
    X = feature_matrix_factory([[1.0, 2.0], [1.0, 3.0]])
    with pytest.raises(err.ConstantColumnError):
        standardize(X)
    kept = drop_constant_columns(X)
    assert kept.names == ["f1"]


def test_feature_matrix_invariants(feature_matrix_factory):
    with pytest.raises(err.InvalidArguments):
        feature_matrix_factory([[0.5]], tags=[FeatureTag.DUMMY])
    with pytest.raises(err.InvalidArguments):
        feature_matrix_factory([[np.nan]])
    with pytest.raises(err.InvalidArguments):
        feature_matrix_factory([[1.0], [2.0]], target=[0, 2])
    X = feature_matrix_factory([[1.0, 2.0], [3.0, 4.0]], target=[0, 1])
    assert X.select_names(["f1"]).values.tolist() == [[2.0], [4.0]]
    assert X.take_rows([1]).target.tolist() == [1]
    assert list(X.to_frame().columns) == ["f0", "f1", "target"]
    with pytest.raises(err.ArityMismatchError):
        X.select_names(["f9"])
