# Copyright (C) 2024 socialgame-core developers
# SPDX-License-Identifier: MIT

import json
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from socialgame.core.data.types import Path
from socialgame.core.errors import (
    DegenerateDesignError,
    FoldTooSmallError,
    InvalidArguments,
)
from socialgame.core.explain.lasso import LassoProblem, lambda_grid, lasso_cd
from socialgame.core.features.matrix import FeatureMatrix
from socialgame.core.utils.files import file_path_to_obj_file

logger = logging.getLogger(__name__)

CombineRule = Literal["OR", "AND"]
# Smallest standardized coefficient that keeps a vertex in a neighborhood.
MIN_COEFFICIENT = 0.1


@dataclass(frozen=True)
class DependenceGraph:
    """Undirected conditional-dependence graph between feature columns."""

    names: Tuple[str, ...]
    edges: Tuple[Tuple[int, int], ...]
    "Sorted vertex pairs ``(i, j)`` with ``i < j``."
    coefficients: np.ndarray = field(repr=False)
    "Row ``h`` holds the lasso coefficients of vertex ``h`` on the others, zero on the diagonal."
    penalties: np.ndarray = field(repr=False)
    "Penalty chosen for every vertex. NaN when the vertex is orthogonal to all others."
    combine: CombineRule = "OR"

    def __post_init__(self):
        n = len(self.names)
        for i, j in self.edges:
            if not 0 <= i < j < n:
                raise InvalidArguments(f"invalid edge ({i}, {j}) for {n} vertices")
        if self.coefficients.shape != (n, n):
            raise InvalidArguments(f"coefficients must be {n}x{n}")

    @property
    def n_vertices(self) -> int:
        return len(self.names)

    def neighborhood(self, h: int) -> List[int]:
        """Vertices with a nonzero coefficient in the regression of ``h``."""
        return [int(j) for j in np.flatnonzero(self.coefficients[h])]

    def edge_names(self) -> List[Tuple[str, str]]:
        return [(self.names[i], self.names[j]) for i, j in self.edges]

    def to_edge_list(self, delimiter: str = "\t") -> str:
        """One line per edge: both names and the two coefficients linking them."""
        lines = [delimiter.join(["source", "target", "weight_source", "weight_target"])]
        for i, j in self.edges:
            weights = f"{self.coefficients[i, j]:.10g}", f"{self.coefficients[j, i]:.10g}"
            lines.append(delimiter.join([self.names[i], self.names[j], *weights]))
        return "\n".join(lines) + "\n"

    def to_adjacency(self) -> Dict:
        adjacency: Dict[str, List[str]] = {name: [] for name in self.names}
        for i, j in self.edges:
            adjacency[self.names[i]].append(self.names[j])
            adjacency[self.names[j]].append(self.names[i])
        return {
            "vertices": list(self.names),
            "combine": self.combine,
            "adjacency": adjacency,
            "penalties": {
                name: None if math.isnan(value) else float(value)
                for name, value in zip(self.names, self.penalties)
            },
        }

    def write_edge_list(self, path: Path):
        with file_path_to_obj_file(path, "w") as f:
            f.write(self.to_edge_list())

    def write_adjacency(self, path: Path):
        with file_path_to_obj_file(path, "w") as f:
            json.dump(self.to_adjacency(), f, indent=1)


def _as_matrix(
    Y: Union[FeatureMatrix, pd.DataFrame, np.ndarray], names: Optional[Sequence[str]]
) -> Tuple[np.ndarray, Tuple[str, ...]]:
    if isinstance(Y, FeatureMatrix):
        values, default_names = Y.values, Y.names
    elif isinstance(Y, pd.DataFrame):
        values, default_names = Y.to_numpy(dtype=np.float64), [str(c) for c in Y.columns]
    else:
        values = np.asarray(Y, dtype=np.float64)
        if values.ndim != 2:
            raise InvalidArguments(f"expected a 2-D matrix (got {values.ndim}-D)")
        default_names = [f"x{h}" for h in range(values.shape[1])]
    names = tuple(names) if names is not None else tuple(default_names)
    if len(names) != values.shape[1]:
        raise InvalidArguments(f"{len(names)} names for {values.shape[1]} columns")
    if not np.all(np.isfinite(values)):
        raise InvalidArguments("the matrix holds non-finite values")
    return values, names


def _fold_bounds(n_rows: int, folds: int) -> List[np.ndarray]:
    if folds < 2:
        raise InvalidArguments(f"at least 2 folds are needed (got {folds})")
    if n_rows < folds:
        raise FoldTooSmallError(f"{n_rows} rows cannot fill {folds} folds")
    held_out = np.array_split(np.arange(n_rows), folds)
    if n_rows - max(part.size for part in held_out) < 2:
        raise FoldTooSmallError("a training fold would hold fewer than 2 rows")
    return held_out


def _path(Y: np.ndarray, h: int, grid: np.ndarray, tolerance: float, max_sweeps: int):
    """Lasso solutions of vertex ``h`` along the grid, warm-started from the previous one."""
    solutions = []
    previous = None
    for penalty in grid:
        problem = LassoProblem.from_matrix(
            Y, h, penalty, tolerance=tolerance, max_sweeps=max_sweeps
        )
        previous = lasso_cd(problem, warm_start=previous).coefficients
        solutions.append(previous)
    return solutions


def cross_validated_penalty(
    Y: np.ndarray,
    h: int,
    grid: np.ndarray,
    held_out: List[np.ndarray],
    one_standard_error: bool = False,
    tolerance: float = 1e-8,
    max_sweeps: int = 1000,
) -> Tuple[int, np.ndarray]:
    """Grid index minimizing the held-out squared prediction error of column ``h``.

    With ``one_standard_error`` the largest penalty whose mean error is within one standard
    error of the minimum is picked instead.

    Returns:
        The chosen index and the ``(folds, grid)`` matrix of held-out errors.
    """
    errors = np.empty((len(held_out), grid.size))
    for k, rows in enumerate(held_out):
        train = np.ones(Y.shape[0], dtype=bool)
        train[rows] = False
        means = Y[train].mean(axis=0)
        solutions = _path(Y[train], h, grid, tolerance, max_sweeps)
        validation = Y[rows] - means
        response, design = validation[:, h], np.delete(validation, h, axis=1)
        for i, beta in enumerate(solutions):
            errors[k, i] = np.mean((response - design @ beta) ** 2)
    mean = errors.mean(axis=0)
    best = int(np.argmin(mean))
    if one_standard_error:
        standard_error = errors[:, best].std(ddof=1) / math.sqrt(len(held_out))
        best = int(np.flatnonzero(mean <= mean[best] + standard_error)[0])
    return best, errors


def neighborhood_glasso(
    Y: Union[FeatureMatrix, pd.DataFrame, np.ndarray],
    folds: int = 5,
    combine: CombineRule = "OR",
    names: Optional[Sequence[str]] = None,
    one_standard_error: bool = False,
    tolerance: float = 1e-8,
    max_sweeps: int = 1000,
    min_coefficient: float = MIN_COEFFICIENT,
) -> DependenceGraph:
    """Estimate the conditional-dependence graph of the columns by neighborhood selection.

    Every column is lasso-regressed on the others, with its penalty chosen on the
    :func:`lambda_grid` by contiguous ``folds``-fold cross-validation. The neighborhood of a
    column is the support of its solution at that penalty on all rows, without the
    coefficients whose standardized size ``|beta_j| * sd_j / sd_h`` is below
    ``min_coefficient`` (0 keeps the whole support). Neighborhoods are combined into edges
    with ``OR`` (either endpoint selects the other) or ``AND`` (both do).

    Columns should be standardized beforehand.

    Raises:
        FoldTooSmallError: Fewer rows than folds.
    """
    if combine not in ("OR", "AND"):
        raise InvalidArguments(f"combine must be 'OR' or 'AND' (got '{combine}')")
    if not min_coefficient >= 0:
        raise InvalidArguments(f"min_coefficient must be >= 0 (got {min_coefficient})")
    values, names = _as_matrix(Y, names)
    n_rows, n_vertices = values.shape
    coefficients = np.zeros((n_vertices, n_vertices))
    penalties = np.full(n_vertices, math.nan)
    if n_vertices < 2:
        logger.info("A single column has no candidate neighbors.")
        return DependenceGraph(names, (), coefficients, penalties, combine)
    held_out = _fold_bounds(n_rows, folds)
    centered = values - values.mean(axis=0)
    scales = np.sqrt(np.mean(centered**2, axis=0))
    for h in range(n_vertices):
        try:
            grid = lambda_grid(centered, h)
        except DegenerateDesignError:
            logger.info(f"Column '{names[h]}' is orthogonal to every other column.")
            continue
        best, _ = cross_validated_penalty(
            centered, h, grid, held_out, one_standard_error, tolerance, max_sweeps
        )
        problem = LassoProblem.from_matrix(
            centered, h, grid[best], tolerance=tolerance, max_sweeps=max_sweeps
        )
        beta = lasso_cd(problem).coefficients
        others = [j for j in range(n_vertices) if j != h]
        small = np.abs(beta) * scales[others] < min_coefficient * scales[h]
        beta = np.where(small, 0.0, beta)
        coefficients[h, others] = beta
        penalties[h] = grid[best]
        logger.debug(
            f"Column '{names[h]}': penalty {grid[best]:.4g}, {np.count_nonzero(beta)} neighbors"
        )

    selected = coefficients != 0
    linked = selected | selected.T if combine == "OR" else selected & selected.T
    edges = tuple((int(i), int(j)) for i, j in zip(*np.nonzero(np.triu(linked, k=1))))
    logger.info(f"Dependence graph over {n_vertices} columns has {len(edges)} edges ({combine}).")
    return DependenceGraph(names, edges, coefficients, penalties, combine)
