# Copyright (C) 2024 socialgame-core developers
# SPDX-License-Identifier: MIT

import json

import numpy as np
import pandas as pd
import pytest

import socialgame.core.errors as err
from socialgame.core.pipeline import AUC_COLUMNS, Pipeline, run_pipeline, stage_rng


def test_evaluate_is_deterministic(small_run_config):
    config = small_run_config()
    Pipeline(config).run("evaluate")
    out = Pipeline(config).output_dir
    first = (out / "auc_table.csv").read_bytes()
    first_minutes = (out / "minutes.csv").read_bytes()
    Pipeline(config).run("evaluate")
    assert (out / "auc_table.csv").read_bytes() == first
    assert (out / "minutes.csv").read_bytes() == first_minutes


def test_auc_table_covers_every_task(small_run_config):
    config = small_run_config()
    table = run_pipeline(config)
    assert list(table.columns) == AUC_COLUMNS
    assert set(table["mode"]) == {"step_ahead", "sensor_free"}
    assert set(table["occupant"]) <= {"occupant_01", "occupant_02", "occupant_03"}
    assert (table["config_hash"] == config.config_hash()).all()
    assert (table["seed"] == 3).all()
    assert table["auc"].dropna().between(0.0, 1.0).all()
    out = Pipeline(config).output_dir
    manifest = json.loads((out / "manifest.json").read_text())
    assert "auc_table.csv" in manifest
    assert manifest["auc_table.csv"] == {"config_hash": config.config_hash(), "seed": 3}
    assert json.loads((out / "effective_config.json").read_text())["seed"] == 3
    assert list((out / "models").glob("*.json"))
    assert list((out / "roc").glob("*.csv"))


def test_sensor_free_tasks_never_use_sensor_or_device_features(small_run_config):
    pipeline = Pipeline(small_run_config())
    pipeline.run("features")
    selected = pd.read_csv(pipeline.output_dir / "selected_features.txt", sep="\t")
    assert list(selected.columns) == ["occupant", "resource", "mode", "rank", "feature", "tag"]
    sensor_free = selected[selected["mode"] == "sensor_free"]
    assert not sensor_free.empty
    assert not sensor_free["tag"].isin(["iot", "resource"]).any()
    for dataset in pipeline.features():
        assert dataset.train.n_cols <= 6
        means = dataset.train.values.mean(axis=0)[~dataset.train.dummy_mask]
        np.testing.assert_allclose(means, 0.0, atol=1e-9)


def test_report_writes_every_artifact(small_run_config):
    pipeline = Pipeline(small_run_config(modes=["step_ahead"]))
    summary = pipeline.run("report")
    out = pipeline.output_dir
    for name in ("summary.json", "samples.csv", "dtw.csv", "auc_table.csv", "minutes.csv"):
        assert (out / name).is_file(), name
    assert sorted(p.name for p in out.glob("edges_*.tsv")) == [
        "edges_high.tsv",
        "edges_low.tsv",
        "edges_medium.tsv",
    ]
    adjacency = json.loads((out / "adjacency_high.json").read_text())
    assert set(adjacency) == {"vertices", "combine", "adjacency", "penalties"}
    assert summary["seed"] == 3
    assert summary["occupants"] == ["occupant_01", "occupant_02", "occupant_03"]
    assert list(summary["mean_auc"]) == ["logistic/step_ahead"]
    assert len(pd.read_csv(out / "samples.csv")) == 50
    assert list(pd.read_csv(out / "dtw.csv").columns) == ["feature", "dtw", "p_value"]


def test_granger_tests_of_device_pairs(small_run_config):
    config = small_run_config(
        modes=["step_ahead"],
        simulation={"n_occupants": 3, "horizon_days": 2, "resources": ["desk_light", "ac"]},
        features={"lags": [1], "n_selected": 6, "target_resource": "desk_light"},
        generate={"enabled": False},
    )
    pipeline = Pipeline(config)
    pipeline.run("explain")
    granger = pd.read_csv(pipeline.output_dir / "granger.csv")
    assert set(granger["class"]) == {"high", "medium", "low"}
    assert set(zip(granger["X"], granger["Y"])) == {
        ("state_desk_light", "state_ac"),
        ("state_ac", "state_desk_light"),
    }


def test_failures_name_their_stage(small_run_config, tmp_path):
    config = small_run_config(data={"path": str(tmp_path / "missing.csv")})
    with pytest.raises(err.StageError) as excinfo:
        Pipeline(config).run("features")
    assert excinfo.value.stage == "ingest"
    assert isinstance(excinfo.value.cause, FileNotFoundError)


def test_pipeline_arguments(small_run_config):
    with pytest.raises(err.InvalidArguments):
        Pipeline(small_run_config(), seed=1)
    with pytest.raises(err.InvalidConfigurationError):
        Pipeline(modes=[])
    with pytest.raises(err.InvalidArguments):
        Pipeline(small_run_config()).run("deploy")


def test_stage_generators_depend_on_the_seed_and_task():
    def draw(*args):
        return stage_rng(*args).integers(0, 2**32, size=4).tolist()

    assert draw(1, "train", "a") == draw(1, "train", "a")
    assert draw(1, "train", "a") != draw(2, "train", "a")
    assert draw(1, "train", "a") != draw(1, "train", "b")
