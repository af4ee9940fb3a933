# Copyright (C) 2024 socialgame-core developers
# SPDX-License-Identifier: MIT

import logging
import math

import numpy as np
from scipy.special import betainc, expit

from socialgame.core.errors import InvalidArguments

logger = logging.getLogger(__name__)


def sigmoid(z: np.ndarray) -> np.ndarray:
    return expit(z)


def f_survival(f: float, df_num: float, df_den: float) -> float:
    """Upper tail probability of the F distribution.

    Uses the regularized incomplete beta identity
    ``P(F > f) = I_{d2 / (d2 + d1 f)}(d2 / 2, d1 / 2)``.
    """
    if df_num <= 0 or df_den <= 0:
        raise InvalidArguments(f"degrees of freedom must be positive (got {df_num}, {df_den})")
    if f <= 0:
        return 1.0
    if math.isinf(f):
        return 0.0
    x = df_den / (df_den + df_num * f)
    return float(np.clip(betainc(df_den / 2.0, df_num / 2.0, x), 0.0, 1.0))


def t_two_sided_pvalue(t: float, df: float) -> float:
    """Two-sided p-value of a Student t statistic, ``I_{df / (df + t^2)}(df / 2, 1 / 2)``."""
    if df <= 0:
        raise InvalidArguments(f"degrees of freedom must be positive (got {df})")
    if math.isinf(t):
        return 0.0
    x = df / (df + t * t)
    return float(np.clip(betainc(df / 2.0, 0.5, x), 0.0, 1.0))


def ensure_finite(name: str, values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    if not np.all(np.isfinite(values)):
        raise InvalidArguments(f"{name} contains NaN or infinite values")
    return values


def soft_threshold(theta, penalty):
    """Soft-thresholding operator ``sign(theta) * max(|theta| - penalty, 0)``, elementwise."""
    if np.any(np.asarray(penalty) < 0):
        raise InvalidArguments(f"threshold must be >= 0 (got {penalty})")
    if np.ndim(theta) == 0:
        theta = float(theta)
        return math.copysign(max(abs(theta) - float(penalty), 0.0), theta) if theta else 0.0
    theta = np.asarray(theta, dtype=np.float64)
    return np.sign(theta) * np.maximum(np.abs(theta) - penalty, 0.0)
