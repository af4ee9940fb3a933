# Copyright (C) 2024 socialgame-core developers
# SPDX-License-Identifier: MIT

import numpy as np
import pytest
from scipy.optimize import minimize

import socialgame.core.errors as err
from socialgame.core.explain.lasso import LassoProblem, lambda_grid, lasso_cd


@pytest.fixture()
def correlated(rng):
    design = rng.normal(size=(200, 3))
    response = design @ np.array([2.0, -1.0, 0.0]) + 0.5 * rng.normal(size=200)
    return np.column_stack([response, design])


def test_zero_penalty_gives_least_squares(correlated):
    problem = LassoProblem.from_matrix(correlated, 0, 0.0, tolerance=1e-13, max_sweeps=10_000)
    solution = lasso_cd(problem)
    expected, *_ = np.linalg.lstsq(problem.design, problem.response, rcond=None)
    assert solution.converged
    np.testing.assert_allclose(solution.coefficients, expected, atol=1e-8)


def test_largest_penalty_gives_zero(correlated):
    problem = LassoProblem.from_matrix(correlated, 0, 0.0)
    at_max = LassoProblem.from_matrix(correlated, 0, problem.lambda_max)
    assert np.all(lasso_cd(at_max).coefficients == 0.0)
    below = LassoProblem.from_matrix(correlated, 0, 0.9 * problem.lambda_max)
    assert np.count_nonzero(lasso_cd(below).coefficients) == 1


def test_lambda_max_gives_exact_zeros():
    """WHEN the penalty is the first grid value, rounding must not leave a coefficient."""
    for seed in range(200):
        Y = np.random.default_rng(seed).normal(size=(50, 4))
        Y[:, 0] += 0.7 * Y[:, 1] - 0.3 * Y[:, 2]
        for h in range(Y.shape[1]):
            solution = lasso_cd(LassoProblem.from_matrix(Y, h, lambda_grid(Y, h)[0]))
            assert np.all(solution.coefficients == 0.0), (seed, h)
            assert solution.sweeps == 0


def test_coordinate_descent_reaches_the_minimum(rng):
    Y = rng.normal(size=(30, 3))
    Y[:, 0] += Y[:, 1]
    problem = LassoProblem.from_matrix(Y, 0, 0.05, tolerance=1e-12)
    solution = lasso_cd(problem)
    brute = minimize(
        problem.objective,
        np.zeros(2),
        method="Nelder-Mead",
        options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 20_000},
    )
    assert problem.objective(solution.coefficients) <= brute.fun + 1e-9
    assert np.all(np.diff(solution.objective_history) <= 1e-12)


def test_inputs_are_centered(rng):
    problem = LassoProblem(
        response=rng.normal(5.0, size=20), design=rng.normal(3.0, size=20), penalty=0.1
    )
    assert problem.response.mean() == pytest.approx(0.0, abs=1e-12)
    assert problem.design.shape == (20, 1)
    assert problem.design.mean() == pytest.approx(0.0, abs=1e-12)


def test_warm_start_converges_to_the_same_solution(correlated):
    problem = LassoProblem.from_matrix(correlated, 0, 0.05, tolerance=1e-12)
    cold = lasso_cd(problem).coefficients
    warm = lasso_cd(problem, warm_start=np.array([1.0, 1.0, 1.0])).coefficients
    np.testing.assert_allclose(warm, cold, atol=1e-9)
    with pytest.raises(err.InvalidArguments):
        lasso_cd(problem, warm_start=np.zeros(2))


def test_sweep_budget_warns(correlated):
    problem = LassoProblem.from_matrix(correlated, 0, 0.0, tolerance=1e-15, max_sweeps=1)
    with pytest.warns(err.NonConvergenceWarning):
        solution = lasso_cd(problem)
    assert not solution.converged
    assert solution.sweeps == 1


def test_grid_is_geometric_with_exact_endpoints(correlated):
    grid = lambda_grid(correlated, 0)
    largest = LassoProblem.from_matrix(correlated, 0, 0.0).lambda_max
    assert grid.size == 10
    assert grid[0] == largest
    assert grid[-1] == largest / 100.0
    ratios = grid[1:] / grid[:-1]
    np.testing.assert_allclose(ratios, ratios[0])


def test_grid_errors():
    orthogonal = np.array([[1.0, 1.0], [-1.0, 1.0], [1.0, -1.0], [-1.0, -1.0]])
    with pytest.raises(err.DegenerateDesignError):
        lambda_grid(orthogonal, 0)
    with pytest.raises(err.InvalidArguments):
        lambda_grid(np.ones((1, 3)), 0)
    with pytest.raises(err.InvalidArguments):
        LassoProblem.from_matrix(orthogonal, 2, 0.1)
    with pytest.raises(err.InvalidArguments):
        LassoProblem.from_matrix(orthogonal, 0, -0.1)
