# Copyright (C) 2024 socialgame-core developers
# SPDX-License-Identifier: MIT

import logging
from typing import Literal, Sequence

import numpy as np
import pandas as pd
from tqdm import tqdm

from socialgame.core.errors import EmptySeriesError, InvalidArguments
from socialgame.core.evaluation.stats import StatTestResult
from socialgame.core.utils.numerical import ensure_finite

logger = logging.getLogger(__name__)

PermutationScheme = Literal["within", "swap"]


def _as_series(name: str, values) -> np.ndarray:
    values = ensure_finite(name, np.asarray(values, dtype=np.float64).reshape(-1))
    if values.size == 0:
        raise EmptySeriesError(f"{name} is empty")
    return values


def _canonical_order(a: np.ndarray, b: np.ndarray):
    """Order the pair so that ``dtw(a, b)`` and ``dtw(b, a)`` run the same computation."""
    if a.size != b.size:
        return (a, b) if a.size < b.size else (b, a)
    differ = np.flatnonzero(a != b)
    if differ.size == 0 or a[differ[0]] < b[differ[0]]:
        return a, b
    return b, a


def dtw(a: Sequence[float], b: Sequence[float]) -> float:
    """Dynamic time warping distance with absolute local cost and no warping window.

    The cost is the unnormalized sum along the cheapest monotone alignment.

    Raises:
        EmptySeriesError: A series is empty.
    """
    a, b = _canonical_order(_as_series("a", a), _as_series("b", b))
    m = b.size
    # Row i of the cumulative cost D satisfies D[i, j] = c[i, j] + min(m_j, D[i, j - 1]) where
    # m_j = min(D[i-1, j-1], D[i-1, j]); unrolling the left dependency gives a prefix minimum.
    previous = np.full(m + 1, np.inf)
    previous[0] = 0.0
    for value in a:
        cost = np.abs(value - b)
        best_above = np.minimum(previous[:-1], previous[1:])
        prefix = np.concatenate([[0.0], np.cumsum(cost)])
        current = prefix[1:] + np.minimum.accumulate(best_above - prefix[:-1])
        previous = np.concatenate([[np.inf], np.maximum(current, 0.0)])
    return float(previous[-1])


def dtw_permutation_test(
    original: Sequence[float],
    generated: Sequence[float],
    n_perm: int,
    rng: np.random.Generator,
    scheme: PermutationScheme = "within",
    show_progress: bool = False,
) -> StatTestResult:
    """Permutation test of the DTW similarity between two series.

    The p-value is the raw fraction of permuted DTW scores lower than or equal to the observed
    one, so a p-value of 0 means that no permutation came as close as the observed pair.

    Args:
        original: Observed series.
        generated: Series compared to it.
        n_perm: Number of permutations.
        rng: Generator of the permutations.
        scheme: ``within`` shuffles the time order of each series independently; ``swap`` pools
            both series and deals the values back at random.
        show_progress: Display a progress bar.

    Raises:
        EmptySeriesError: A series is empty.
    """
    if n_perm < 1:
        raise InvalidArguments(f"n_perm must be >= 1 (got {n_perm})")
    a = _as_series("original", original)
    b = _as_series("generated", generated)
    observed = dtw(a, b)
    pooled = np.concatenate([a, b])
    at_most_observed = 0
    for _ in tqdm(range(n_perm), disable=not show_progress):
        if scheme == "within":
            pa, pb = rng.permutation(a), rng.permutation(b)
        elif scheme == "swap":
            shuffled = rng.permutation(pooled)
            pa, pb = shuffled[: a.size], shuffled[a.size :]
        else:
            raise InvalidArguments(f"unknown permutation scheme '{scheme}'")
        at_most_observed += int(dtw(pa, pb) <= observed)
    p_value = at_most_observed / n_perm
    logger.debug(f"DTW {observed:.4g}, permutation p-value {p_value:.4g} over {n_perm} draws.")
    return StatTestResult(
        statistic=observed,
        p_value=p_value,
        sample_sizes=(a.size, b.size),
        effect={"n_perm": float(n_perm)},
    )


def dtw_fidelity(
    original: pd.DataFrame,
    generated: pd.DataFrame,
    columns: Sequence[str],
    n_perm: int,
    rng: np.random.Generator,
    scheme: PermutationScheme = "within",
) -> pd.DataFrame:
    """DTW permutation test of every column of generated data against the original."""
    rows = []
    for column in columns:
        result = dtw_permutation_test(
            original[column].to_numpy(), generated[column].to_numpy(), n_perm, rng, scheme
        )
        rows.append({"feature": column, "dtw": result.statistic, "p_value": result.p_value})
    return pd.DataFrame(rows)
