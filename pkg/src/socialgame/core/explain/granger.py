# Copyright (C) 2024 socialgame-core developers
# SPDX-License-Identifier: MIT

import logging
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Tuple

import numpy as np
import pandas as pd

from socialgame.core.errors import (
    InvalidArguments,
    LengthMismatchError,
    RankDeficientError,
    SeriesTooShortError,
    UnknownColumnError,
)
from socialgame.core.utils.numerical import ensure_finite, f_survival

logger = logging.getLogger(__name__)

GRANGER_COLUMNS = ["X", "Y", "lag", "p_value", "f_statistic", "decision"]


@dataclass(frozen=True)
class GrangerResult:
    """F-test of "``x`` does not Granger-cause ``y``"."""

    f_statistic: float
    p_value: float
    lag: int
    rss_restricted: float
    rss_unrestricted: float
    df_num: int
    df_den: int
    alpha: float = 0.05

    @property
    def rejected(self) -> bool:
        """Whether the null hypothesis is rejected at ``alpha``."""
        return self.p_value < self.alpha

    @property
    def decision(self) -> str:
        return "reject" if self.rejected else "accept"


def _lag_matrix(series: np.ndarray, lag: int, start: int) -> np.ndarray:
    """Columns ``series[t - k]`` for ``k = 1..lag`` and ``t >= start``."""
    n = series.size
    return np.column_stack([series[start - k : n - k] for k in range(1, lag + 1)])


def _rss(design: np.ndarray, response: np.ndarray) -> float:
    coefficients, *_ = np.linalg.lstsq(design, response, rcond=None)
    residual = response - design @ coefficients
    return float(residual @ residual)


def _check_pair(x, y) -> Tuple[np.ndarray, np.ndarray]:
    x = ensure_finite("x", np.asarray(x, dtype=np.float64).reshape(-1))
    y = ensure_finite("y", np.asarray(y, dtype=np.float64).reshape(-1))
    if x.size != y.size:
        raise LengthMismatchError(f"series lengths differ ({x.size} and {y.size})")
    return x, y


def granger_test(x, y, lag: int = 1, alpha: float = 0.05) -> GrangerResult:
    """Test whether past values of ``x`` help predict ``y`` beyond the past of ``y``.

    The restricted model regresses ``y_t`` on an intercept and ``y_{t-1}..y_{t-lag}``; the
    unrestricted one adds ``x_{t-1}..x_{t-lag}``. Over the ``n = len - lag`` usable rows,
    ``F = ((RSS_r - RSS_u) / lag) / (RSS_u / (n - 2 lag - 1))``. Binary series enter as 0/1.

    Raises:
        SeriesTooShortError: No residual degree of freedom is left.
        RankDeficientError: The unrestricted design is collinear.
    """
    if int(lag) != lag or lag < 1:
        raise InvalidArguments(f"lag must be an integer >= 1 (got {lag})")
    if not 0 < alpha < 1:
        raise InvalidArguments(f"alpha must be within (0, 1) (got {alpha})")
    lag = int(lag)
    x, y = _check_pair(x, y)
    n_obs = y.size - lag
    df_den = n_obs - 2 * lag - 1
    if df_den < 1:
        raise SeriesTooShortError(
            f"{y.size} values leave no residual degree of freedom at lag {lag} "
            f"(at least {3 * lag + 2} are needed)"
        )
    return _granger_fit(x, y, lag, alpha, start=lag)


def _granger_fit(x: np.ndarray, y: np.ndarray, lag: int, alpha: float, start: int):
    response = y[start:]
    intercept = np.ones((response.size, 1))
    y_lags = _lag_matrix(y, lag, start)
    restricted = np.hstack([intercept, y_lags])
    unrestricted = np.hstack([restricted, _lag_matrix(x, lag, start)])
    if np.linalg.matrix_rank(unrestricted) < unrestricted.shape[1]:
        raise RankDeficientError(f"lagged design at lag {lag} is rank deficient")
    rss_r = _rss(restricted, response)
    rss_u = _rss(unrestricted, response)
    df_den = response.size - 2 * lag - 1
    numerator = max(rss_r - rss_u, 0.0) / lag
    if rss_u <= 0:
        f = math.inf if numerator > 0 else 0.0
    else:
        f = numerator / (rss_u / df_den)
    return GrangerResult(
        f_statistic=float(f),
        p_value=f_survival(f, lag, df_den),
        lag=lag,
        rss_restricted=rss_r,
        rss_unrestricted=rss_u,
        df_num=lag,
        df_den=df_den,
        alpha=alpha,
    )


def select_granger_lag(x, y, max_lag: int) -> int:
    """Lag in ``[1, max_lag]`` minimizing the BIC of the unrestricted model.

    Every candidate is fitted on the same rows, those from ``max_lag`` on.
    """
    if max_lag < 1:
        raise InvalidArguments(f"max_lag must be >= 1 (got {max_lag})")
    x, y = _check_pair(x, y)
    n_obs = y.size - max_lag
    if n_obs - 2 * max_lag - 1 < 1:
        raise SeriesTooShortError(f"{y.size} values are too few to compare lags up to {max_lag}")
    response = y[max_lag:]
    best_lag, best_bic = 1, math.inf
    for lag in range(1, max_lag + 1):
        design = np.hstack(
            [np.ones((n_obs, 1)), _lag_matrix(y, lag, max_lag), _lag_matrix(x, lag, max_lag)]
        )
        rss = max(_rss(design, response), np.finfo(float).tiny)
        bic = n_obs * math.log(rss / n_obs) + design.shape[1] * math.log(n_obs)
        logger.debug(f"Granger lag {lag}: BIC {bic:.4f}")
        if bic < best_bic:
            best_lag, best_bic = lag, bic
    return best_lag


def granger_table(
    frame: pd.DataFrame,
    pairs: Iterable[Tuple[str, str]],
    lag: Optional[int] = 1,
    alpha: float = 0.05,
    max_lag: int = 10,
) -> pd.DataFrame:
    """Granger tests of the ``(cause, effect)`` column pairs of ``frame``.

    Columns are X, Y, lag, p_value, f_statistic and decision. A pair whose lagged design is
    rank deficient is kept with empty statistics and the decision ``rank_deficient``. With
    ``lag=None`` every pair gets the BIC-selected lag up to ``max_lag``.
    """
    rows = []
    for cause, effect in pairs:
        missing = [c for c in (cause, effect) if c not in frame.columns]
        if missing:
            raise UnknownColumnError(f"unknown columns {missing}")
        x = frame[cause].to_numpy(dtype=np.float64)
        y = frame[effect].to_numpy(dtype=np.float64)
        pair_lag = lag if lag is not None else select_granger_lag(x, y, max_lag)
        try:
            result = granger_test(x, y, pair_lag, alpha)
        except RankDeficientError:
            logger.warning(f"Granger design of {cause} -> {effect} is rank deficient.")
            rows.append([cause, effect, pair_lag, math.nan, math.nan, "rank_deficient"])
            continue
        rows.append(
            [cause, effect, pair_lag, result.p_value, result.f_statistic, result.decision]
        )
    return pd.DataFrame(rows, columns=GRANGER_COLUMNS)
