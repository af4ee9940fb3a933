# Copyright (C) 2024 socialgame-core developers
# SPDX-License-Identifier: MIT

import numpy as np
import pytest
from pydantic import ValidationError

import socialgame.core.errors as err
from socialgame.core.data.game import GameConfig
from socialgame.core.evaluation.roc import roc_auc
from socialgame.core.learners.base import train_baseline_classifier
from socialgame.core.sim.choice import gumbel_noise, logit_probabilities, sample_gumbel_choice
from socialgame.core.sim.models import (
    ExogenousModel,
    OccupantProfile,
    ResourceUtility,
    default_cohort,
)
from socialgame.core.sim.simulator import (
    bayes_optimal_auc,
    evaluate_features,
    simulate_cohort,
    simulate_occupant,
)


def _static_profile(occupant_id="alice", beta=(-1.0, 1.0, -2.0)):
    return OccupantProfile(
        occupant_id=occupant_id,
        features=["intercept", "z1", "z2"],
        utilities={"desk_light": ResourceUtility.binary(list(beta))},
    )


def test_gumbel_choice_frequencies_follow_the_logit_probabilities():
    rng = np.random.default_rng(0)
    utilities = [0.0, 1.0, -0.5]
    counts = np.bincount([sample_gumbel_choice(utilities, rng) for _ in range(20_000)], minlength=3)
    np.testing.assert_allclose(counts / 20_000, logit_probabilities(utilities), atol=0.015)


def test_gumbel_noise_moments():
    draws = gumbel_noise(np.random.default_rng(0), 200_000)
    assert np.all(np.isfinite(draws))
    assert draws.mean() == pytest.approx(np.euler_gamma, abs=0.01)
    assert draws.var() == pytest.approx(np.pi**2 / 6, abs=0.03)


def test_sample_gumbel_choice_rejects_bad_inputs():
    rng = np.random.default_rng(0)
    with pytest.raises(err.EmptyChoiceSetError):
        sample_gumbel_choice([], rng)
    with pytest.raises(err.InvalidArguments):
        sample_gumbel_choice([0.0, np.nan], rng)
    with pytest.raises(err.InvalidArguments):
        sample_gumbel_choice([0.0, 1.0], rng, scale=0.0)


def test_profile_validation():
    with pytest.raises(ValidationError):
        OccupantProfile(
            occupant_id="a",
            features=["intercept", "lag2_desk_light"],
            utilities={"desk_light": ResourceUtility.binary([0.0, 1.0])},
            lag_order=1,
        )
    with pytest.raises(ValidationError):
        OccupantProfile(
            occupant_id="a",
            features=["intercept", "shoe_size"],
            utilities={"desk_light": ResourceUtility.binary([0.0, 1.0])},
        )
    with pytest.raises(ValidationError):
        OccupantProfile(
            occupant_id="a",
            features=["intercept"],
            utilities={"desk_light": ResourceUtility.binary([0.0, 1.0])},
        )


def test_logistic_regression_recovers_the_simulated_utilities():
    """WHEN an occupant with a known binary logit utility is simulated over 50,000 minutes
    THEN logistic regression recovers the weights within 5% and the Bayes-optimal AUC
    """
    profile = _static_profile()
    exo = ExogenousModel(n_synthetic=2)
    table = simulate_occupant(profile, exo, 50_000, GameConfig(), np.random.default_rng(7))
    X = table.frame[["z1", "z2"]].to_numpy()
    y = table.frame["state_desk_light"].to_numpy()
    model = train_baseline_classifier("logistic", X, y)
    np.testing.assert_allclose(model.params["coef"], [1.0, -2.0], rtol=0.05)
    assert model.params["intercept"] == pytest.approx(-1.0, rel=0.05)
    optimal = bayes_optimal_auc(profile, table, exo=exo)
    assert roc_auc(model.predict_proba(X), y).auc == pytest.approx(optimal, abs=0.02)


def test_lagged_states_are_rebuilt_from_the_table():
    profile = OccupantProfile(
        occupant_id="bob",
        features=["intercept", "lag1_desk_light", "morning"],
        utilities={"desk_light": ResourceUtility.binary([-1.0, 3.0, 0.5])},
        lag_order=1,
    )
    table = simulate_occupant(profile, ExogenousModel(), 1440, GameConfig(), np.random.default_rng(1))
    design = evaluate_features(profile, table)
    states = table.frame["state_desk_light"].to_numpy()
    assert design[0, 1] == 0.0
    np.testing.assert_array_equal(design[1:, 1], states[:-1])
    np.testing.assert_array_equal(design[:, 0], 1.0)


def test_usage_resets_at_midnight_and_points_accumulate():
    profile = _static_profile(beta=(0.0, 0.0, 0.0))
    game = GameConfig(baselines={"desk_light": {"weekday": 720.0, "weekend": 720.0}})
    table = simulate_occupant(
        profile, ExogenousModel(n_synthetic=2), 2 * 1440, game, np.random.default_rng(3)
    )
    frame = table.frame
    usage = frame["usage_desk_light"].to_numpy()
    assert usage[1440] <= 1.0
    assert usage[1439] == frame["state_desk_light"].iloc[:1440].ne(0).sum()
    day_one_points = (720.0 - usage[1439]) / 720.0
    assert frame["points_total"].iloc[1439] == pytest.approx(day_one_points)


def test_simulate_cohort_ranks_every_day():
    profiles = default_cohort(n_occupants=3, resources=("desk_light",), seed=0)
    table = simulate_cohort(
        profiles, ExogenousModel(), 2 * 1440, GameConfig(), np.random.default_rng(0)
    )
    assert sorted(table.occupants) == ["occupant_01", "occupant_02", "occupant_03"]
    frame = table.frame
    last_minute = frame.groupby("occupant_id").tail(1)
    assert sorted(last_minute["rank"]) == [1, 2, 3]
    assert "portal_visits_today" in table.present


def test_simulate_cohort_is_reproducible():
    profiles = default_cohort(n_occupants=2, seed=4)
    first = simulate_cohort(profiles, ExogenousModel(), 1440, GameConfig(), np.random.default_rng(9))
    second = simulate_cohort(profiles, ExogenousModel(), 1440, GameConfig(), np.random.default_rng(9))
    assert first.to_csv() == second.to_csv()


def test_simulate_cohort_rejects_duplicates_and_short_horizons():
    profiles = [_static_profile("same"), _static_profile("same")]
    exo = ExogenousModel(n_synthetic=2)
    with pytest.raises(err.DuplicateOccupantIdError):
        simulate_cohort(profiles, exo, 1440, GameConfig(), np.random.default_rng(0))
    with pytest.raises(err.InvalidHorizonError):
        simulate_cohort(profiles[:1], exo, 60, GameConfig(), np.random.default_rng(0))


def test_bayes_optimal_auc_needs_both_states():
    profile = _static_profile(beta=(-50.0, 0.0, 0.0))
    exo = ExogenousModel(n_synthetic=2)
    table = simulate_occupant(profile, exo, 1440, GameConfig(), np.random.default_rng(0))
    with pytest.raises(err.DegenerateLabelsError):
        bayes_optimal_auc(profile, table, exo=exo)
