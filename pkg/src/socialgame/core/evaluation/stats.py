# Copyright (C) 2024 socialgame-core developers
# SPDX-License-Identifier: MIT

import datetime
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Dict, Iterable, Optional, Tuple

import numpy as np
import pandas as pd

from socialgame.core.data.minutes import MinuteTable
from socialgame.core.data.types import DateInterval
from socialgame.core.errors import SampleTooSmallError, ZeroVarianceError
from socialgame.core.utils.numerical import ensure_finite, t_two_sided_pvalue

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class StatTestResult:
    """Outcome of a hypothesis test."""

    statistic: float
    p_value: float
    sample_sizes: Tuple[int, ...]
    effect: Dict[str, Optional[float]] = field(default_factory=dict)
    "Means, Δ% or any other summary relevant to the test."
    alpha: float = 0.05

    def __post_init__(self):
        if not 0.0 <= self.p_value <= 1.0:
            raise ValueError(f"p-value {self.p_value} outside [0, 1]")

    @property
    def rejected(self) -> bool:
        return self.p_value < self.alpha

    def to_dict(self) -> Dict:
        return {**asdict(self), "rejected": self.rejected}


def percent_change(before: float, after: float) -> Optional[float]:
    """Reduction from ``before`` to ``after`` in percent of ``before``.

    Returns ``None`` when ``before`` is 0.
    """
    if before == 0:
        return None
    return 100.0 * (before - after) / before


def two_sample_ttest(before, after, alpha: float = 0.05) -> StatTestResult:
    """Welch two-sample t-test with Welch-Satterthwaite degrees of freedom.

    The p-value is two-sided, so swapping the samples only flips the sign of the statistic.

    Raises:
        SampleTooSmallError: A sample has fewer than two observations.
        ZeroVarianceError: Both samples have zero variance.
    """
    before = ensure_finite("before", np.asarray(before, dtype=np.float64).reshape(-1))
    after = ensure_finite("after", np.asarray(after, dtype=np.float64).reshape(-1))
    n1, n2 = before.size, after.size
    if n1 < 2 or n2 < 2:
        raise SampleTooSmallError(f"each sample needs at least 2 observations (got {n1}, {n2})")
    m1, m2 = float(np.mean(before)), float(np.mean(after))
    v1, v2 = float(np.var(before, ddof=1)), float(np.var(after, ddof=1))
    if v1 == 0 and v2 == 0:
        raise ZeroVarianceError("both samples have zero variance")
    a, b = v1 / n1, v2 / n2
    t = (m1 - m2) / math.sqrt(a + b)
    df = (a + b) ** 2 / (a**2 / (n1 - 1) + b**2 / (n2 - 1))
    p_value = t_two_sided_pvalue(t, df)
    return StatTestResult(
        statistic=t,
        p_value=p_value,
        sample_sizes=(n1, n2),
        effect={
            "mean_before": m1,
            "mean_after": m2,
            "delta_pct": percent_change(m1, m2),
            "df": df,
        },
        alpha=alpha,
    )


def savings_table(
    table: MinuteTable,
    before: DateInterval,
    after: DateInterval,
    holidays: Iterable[datetime.date] = (),
    alpha: float = 0.05,
) -> pd.DataFrame:
    """Before/after usage comparison per resource and daytype.

    Daily usage totals of every occupant form the samples. Rows whose samples are too small or
    degenerate carry NaN statistics.
    """
    daily = table.daily_usage(holidays)
    in_before = np.array([d in before for d in daily["date"]], dtype=bool)
    in_after = np.array([d in after for d in daily["date"]], dtype=bool)
    rows = []
    for resource in table.resources:
        for kind in ("weekday", "weekend"):
            selected = (daily["resource"] == resource).to_numpy()
            selected &= (daily["daytype"] == kind).to_numpy()
            x = daily["minutes"].to_numpy()[selected & in_before]
            y = daily["minutes"].to_numpy()[selected & in_after]
            row = {"resource": resource, "daytype": kind, "n_before": x.size, "n_after": y.size}
            try:
                result = two_sample_ttest(x, y, alpha=alpha)
            except (SampleTooSmallError, ZeroVarianceError) as e:
                logger.warning(f"No savings test for {resource}/{kind}: {e}")
                row.update(
                    mean_before=float(np.mean(x)) if x.size else math.nan,
                    mean_after=float(np.mean(y)) if y.size else math.nan,
                    t=math.nan,
                    p_value=math.nan,
                    delta_pct=math.nan,
                )
            else:
                delta = result.effect["delta_pct"]
                row.update(
                    mean_before=result.effect["mean_before"],
                    mean_after=result.effect["mean_after"],
                    t=result.statistic,
                    p_value=result.p_value,
                    delta_pct=math.nan if delta is None else delta,
                )
            rows.append(row)
    return pd.DataFrame(rows)
