# Copyright (C) 2024 socialgame-core developers
# SPDX-License-Identifier: MIT

import json

import numpy as np
import pytest

import socialgame.core.errors as err
from socialgame.core.learners.base import LearnerConfig, train_baseline_classifier
from socialgame.core.learners.serialization import dump_model, load_model, save_model


@pytest.fixture()
def forest(rng):
    X = rng.normal(size=(200, 4))
    y = (X[:, 0] + 0.5 * rng.normal(size=200) > 0).astype(np.int64)
    model = train_baseline_classifier("random_forest", X, y, LearnerConfig(n_estimators=3), rng)
    return model, X


def test_saved_model_predicts_identically(forest, tmp_path):
    model, X = forest
    path = tmp_path / "models" / "forest.json"
    save_model(model, path)
    loaded = load_model(path)
    assert loaded.kind == "random_forest"
    np.testing.assert_array_equal(loaded.predict_proba(X), model.predict_proba(X))
    assert loaded.metadata["hyperparameters"]["n_estimators"] == 3


def test_document_survives_json_text(forest):
    model, X = forest
    document = json.loads(json.dumps(dump_model(model)))
    member = load_model(document).params["members"][0]
    assert member["feature"].dtype == np.int64
    assert not member["threshold"].flags.writeable


def test_documents_of_another_major_version_are_rejected(forest):
    model, _ = forest
    document = dump_model(model)
    with pytest.raises(err.InvalidArguments):
        load_model({**document, "format_version": "2.0.0"})
    with pytest.raises(err.InvalidArguments):
        load_model({**document, "format_version": "one"})
    with pytest.raises(err.InvalidArguments):
        load_model({"kind": "tree"})
    assert load_model({**document, "format_version": "1.4.0"}).kind == "random_forest"
