# Copyright (C) 2024 socialgame-core developers
# SPDX-License-Identifier: MIT

import numpy as np
import pytest

import socialgame.core.errors as err
from socialgame.core.evaluation.roc import roc_auc
from socialgame.core.learners.base import (
    BASELINE_KINDS,
    LearnerConfig,
    LearnerSpec,
    predict_proba,
    train_baseline_classifier,
)
from socialgame.core.learners.linear import fit_logistic
from socialgame.core.learners.trees import build_tree

BETA = np.array([1.5, -2.0, 0.0])


@pytest.fixture()
def logistic_data(rng):
    """WHEN labels follow a logistic model of three standard normal features."""

    def _draw(n):
        X = rng.normal(size=(n, 3))
        p = 1.0 / (1.0 + np.exp(-(X @ BETA + 0.3)))
        return X, (rng.uniform(size=n) < p).astype(np.int64)

    return _draw


@pytest.mark.parametrize("kind", BASELINE_KINDS)
def test_every_baseline_learner_ranks_held_out_rows(kind, logistic_data, rng):
    X, y = logistic_data(1500)
    X_test, y_test = logistic_data(1000)
    config = LearnerConfig(
        n_estimators=5, max_iter=2000, l1_penalty=0.001, max_depth=4, min_leaf=20
    )
    model = train_baseline_classifier(kind, X, y, config, rng)
    scores = model.predict_proba(X_test)
    assert scores.shape == (1000,)
    assert np.all((scores >= 0.0) & (scores <= 1.0))
    assert roc_auc(scores, y_test).auc > 0.75
    assert model.n_features == 3
    assert model.feature_names == ["x0", "x1", "x2"]


def test_logistic_regression_recovers_the_coefficients(logistic_data):
    X, y = logistic_data(20_000)
    fit = fit_logistic(X, y)
    assert fit.converged
    assert fit.gradient_norm < 1e-6
    np.testing.assert_allclose(fit.coef, BETA, atol=0.1)
    assert fit.intercept == pytest.approx(0.3, abs=0.1)
    assert np.all(np.diff(fit.loss_history) <= 1e-12)


def test_strong_l1_penalty_zeroes_every_coefficient(logistic_data):
    X, y = logistic_data(500)
    fit = fit_logistic(X, y, l1_penalty=10.0)
    np.testing.assert_array_equal(fit.coef, 0.0)
    assert fit.converged
    assert fit.intercept == pytest.approx(np.log(y.mean() / (1 - y.mean())), abs=1e-4)


def test_iteration_cap_warns_and_flags_the_fit(logistic_data):
    X, y = logistic_data(200)
    with pytest.warns(err.NonConvergenceWarning):
        fit = fit_logistic(X, y, max_iter=1)
    assert not fit.converged
    with pytest.warns(err.NonConvergenceWarning):
        model = train_baseline_classifier("logistic", X, y, LearnerConfig(max_iter=1))
    assert model.metadata["converged"] is False


def test_lda_adds_a_ridge_to_a_singular_covariance(logistic_data):
    X, y = logistic_data(300)
    duplicated = np.column_stack([X, X[:, 0]])
    model = train_baseline_classifier("lda", duplicated, y)
    assert model.metadata["ridge_applied"] is True
    assert roc_auc(model.predict_proba(duplicated), y).auc > 0.8


def test_tree_separates_a_threshold_exactly():
    X = np.arange(20, dtype=np.float64).reshape(-1, 1)
    y = (X[:, 0] >= 10).astype(np.int64)
    tree = build_tree(X, y, max_depth=3, min_leaf=1)
    assert tree["feature"][0] == 0
    assert tree["threshold"][0] == pytest.approx(9.5)
    model = train_baseline_classifier("tree", X, y, LearnerConfig(min_leaf=1))
    np.testing.assert_array_equal(model.predict_proba(X), y)


def test_knn_scores_are_neighbour_fractions():
    X = np.array([[0.0], [1.0], [2.0], [10.0], [11.0], [12.0]])
    y = np.array([0, 0, 1, 1, 1, 1])
    model = train_baseline_classifier("knn", X, y, LearnerConfig(n_neighbors=3))
    np.testing.assert_allclose(model.predict_proba([[0.5], [11.0]]), [1 / 3, 1.0])


def test_trained_parameters_are_read_only(logistic_data):
    X, y = logistic_data(200)
    model = train_baseline_classifier("logistic", X, y)
    with pytest.raises(ValueError):
        model.params["coef"][0] = 1.0


def test_learner_errors(logistic_data):
    X, y = logistic_data(100)
    with pytest.raises(err.SingleClassError):
        train_baseline_classifier("logistic", X, np.zeros(100))
    with pytest.raises(err.InvalidArguments):
        train_baseline_classifier("boosting", X, y)
    with pytest.raises(err.InvalidArguments):
        train_baseline_classifier("mlp", X, y)
    with pytest.raises(err.InvalidArguments):
        train_baseline_classifier("logistic", X, np.full(100, 2))
    model = train_baseline_classifier("logistic", X, y)
    with pytest.raises(err.ArityMismatchError):
        predict_proba(model, X[:, :2])


def test_learner_spec_overrides_hyperparameters(logistic_data, rng):
    spec = LearnerSpec("knn", LearnerConfig(n_neighbors=5))
    tuned = spec.with_params({"n_neighbors": 7})
    assert tuned.config.n_neighbors == 7
    assert spec.config.n_neighbors == 5
    X, y = logistic_data(50)
    assert tuned.fit(X, y, rng).params["k"] == 7
