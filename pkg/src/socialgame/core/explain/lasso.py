# Copyright (C) 2024 socialgame-core developers
# SPDX-License-Identifier: MIT

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from socialgame.core.errors import DegenerateDesignError, InvalidArguments, NonConvergenceWarning
from socialgame.core.utils.numerical import soft_threshold

__all__ = [
    "LassoProblem",
    "LassoSolution",
    "lambda_grid",
    "lasso_cd",
    "soft_threshold",
]

logger = logging.getLogger(__name__)

GRID_SIZE = 10
GRID_RATIO = 100.0
# Inner products below this share of the column norms count as zero.
ORTHOGONALITY_TOLERANCE = 1e-10
# Penalties within this relative distance below lambda_max still give the zero solution.
ZERO_SOLUTION_RTOL = 1e-12


def _centered(values: np.ndarray) -> np.ndarray:
    return values - values.mean(axis=0)


@dataclass(frozen=True)
class LassoProblem:
    """Regression of one column on the others with an L1 penalty.

    The objective is ``(1/2N) ||response - design @ beta||^2 + penalty * ||beta||_1``. Both
    the response and the design columns are centered on construction.
    """

    response: np.ndarray
    design: np.ndarray
    penalty: float
    tolerance: float = 1e-8
    "Stop when no coefficient moved more than this during a sweep."
    max_sweeps: int = 1000

    def __post_init__(self):
        response = np.asarray(self.response, dtype=np.float64).reshape(-1)
        design = np.asarray(self.design, dtype=np.float64)
        if design.ndim == 1:
            design = design.reshape(-1, 1)
        if design.shape[0] != response.size:
            raise InvalidArguments(
                f"design has {design.shape[0]} rows, the response {response.size}"
            )
        if response.size < 2:
            raise InvalidArguments(f"at least 2 samples are needed (got {response.size})")
        if not (np.all(np.isfinite(response)) and np.all(np.isfinite(design))):
            raise InvalidArguments("the lasso inputs hold non-finite values")
        if not self.penalty >= 0:
            raise InvalidArguments(f"penalty must be >= 0 (got {self.penalty})")
        if self.max_sweeps < 1:
            raise InvalidArguments(f"max_sweeps must be >= 1 (got {self.max_sweeps})")
        object.__setattr__(self, "response", _centered(response))
        object.__setattr__(self, "design", _centered(design))

    @classmethod
    def from_matrix(cls, Y: np.ndarray, h: int, penalty: float, **kwargs) -> "LassoProblem":
        """Regress column ``h`` of ``Y`` on every other column."""
        Y = np.asarray(Y, dtype=np.float64)
        if not 0 <= h < Y.shape[1]:
            raise InvalidArguments(f"vertex {h} is out of range for {Y.shape[1]} columns")
        return cls(response=Y[:, h], design=np.delete(Y, h, axis=1), penalty=penalty, **kwargs)

    @property
    def n_samples(self) -> int:
        return self.response.size

    @property
    def lambda_max(self) -> float:
        """Smallest penalty giving the all-zero solution."""
        if self.design.shape[1] == 0:
            return 0.0
        return float(np.max(np.abs(self.design.T @ self.response)) / self.n_samples)

    def objective(self, coefficients: np.ndarray) -> float:
        residual = self.response - self.design @ coefficients
        return float(
            residual @ residual / (2.0 * self.n_samples)
            + self.penalty * np.abs(coefficients).sum()
        )


@dataclass(frozen=True)
class LassoSolution:
    coefficients: np.ndarray
    converged: bool
    sweeps: int
    last_delta: float
    "Largest coefficient change of the last sweep."
    objective_history: np.ndarray = field(repr=False)
    "Objective after every sweep."


def lasso_cd(problem: LassoProblem, warm_start: Optional[np.ndarray] = None) -> LassoSolution:
    """Solve a lasso problem by cyclic coordinate descent.

    Every coordinate is set to the minimizer of the objective with the others held fixed,
    ``beta_j = S(<r_j, Y_j> / N, penalty) / (<Y_j, Y_j> / N)`` where ``r_j`` is the partial
    residual without column ``j``. The objective never increases from one sweep to the next.
    A penalty at or above :attr:`LassoProblem.lambda_max` returns the exact zero vector.

    Args:
        problem: The problem to solve.
        warm_start: Starting coefficients, typically the solution at a larger penalty.

    Returns:
        The last iterate. When the sweep budget runs out first, a
        :class:`NonConvergenceWarning` is emitted and ``converged`` is False.
    """
    X, y, n = problem.design, problem.response, problem.n_samples
    n_columns = X.shape[1]
    beta = np.zeros(n_columns) if warm_start is None else np.array(warm_start, dtype=np.float64)
    if beta.shape != (n_columns,):
        raise InvalidArguments(f"warm start has shape {beta.shape}, expected ({n_columns},)")
    if n_columns == 0 or problem.penalty >= problem.lambda_max * (1.0 - ZERO_SOLUTION_RTOL):
        zeros = np.zeros(n_columns)
        logger.debug(f"Penalty {problem.penalty:.4g} is at or above lambda_max, zero solution.")
        return LassoSolution(
            coefficients=zeros,
            converged=True,
            sweeps=0,
            last_delta=0.0,
            objective_history=np.array([problem.objective(zeros)]),
        )
    scales = np.einsum("ij,ij->j", X, X) / n
    residual = y - X @ beta
    history = []
    delta = 0.0
    converged = False
    sweeps = 0
    for sweeps in range(1, problem.max_sweeps + 1):
        delta = 0.0
        for j in range(n_columns):
            old = beta[j]
            if scales[j] == 0:
                new = 0.0
            else:
                rho = X[:, j] @ residual / n + scales[j] * old
                new = soft_threshold(rho, problem.penalty) / scales[j]
            if new != old:
                residual -= X[:, j] * (new - old)
                beta[j] = new
                delta = max(delta, abs(new - old))
        history.append(problem.objective(beta))
        if delta < problem.tolerance:
            converged = True
            break
    if not converged:
        message = f"lasso did not converge in {sweeps} sweeps (last change {delta:.3g})"
        logger.warning(message)
        warnings.warn(message, NonConvergenceWarning, stacklevel=2)
    return LassoSolution(
        coefficients=beta,
        converged=converged,
        sweeps=sweeps,
        last_delta=float(delta),
        objective_history=np.array(history),
    )


def lambda_grid(Y: np.ndarray, h: int, n: int = GRID_SIZE) -> np.ndarray:
    """Log-spaced penalties from ``lambda_max`` of column ``h`` down to ``lambda_max / 100``.

    ``lambda_max = max_{j != h} |<Y_j, Y_h>| / N`` on the centered columns. Both endpoints are
    exact and the ratio between consecutive values is constant.

    Raises:
        DegenerateDesignError: Column ``h`` is orthogonal to every other column.
    """
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim != 2 or Y.shape[0] < 2 or Y.shape[1] < 2:
        raise InvalidArguments(f"need at least 2 rows and 2 columns (got shape {Y.shape})")
    if n < 2:
        raise InvalidArguments(f"the grid needs at least 2 values (got {n})")
    problem = LassoProblem.from_matrix(Y, h, 0.0)
    largest = problem.lambda_max
    scale = math.sqrt(
        np.mean(problem.response**2) * np.max(np.mean(problem.design**2, axis=0))
    )
    if not largest > ORTHOGONALITY_TOLERANCE * scale or not math.isfinite(largest):
        raise DegenerateDesignError(f"column {h} has a zero inner product with every other column")
    grid = np.geomspace(largest, largest / GRID_RATIO, n)
    grid[0] = largest
    grid[-1] = largest / GRID_RATIO
    return grid
