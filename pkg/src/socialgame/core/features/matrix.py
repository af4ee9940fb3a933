# Copyright (C) 2024 socialgame-core developers
# SPDX-License-Identifier: MIT

import logging
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from socialgame.core.data.types import FeatureTag
from socialgame.core.errors import ArityMismatchError, ConstantColumnError, InvalidArguments

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ColumnInfo:
    name: str
    tag: FeatureTag


@dataclass(frozen=True)
class FeatureMatrix:
    """Row-major feature values with per-column provenance and an optional binary target.

    Values are 64-bit, finite, and dummy-tagged columns only hold 0 and 1.
    """

    values: np.ndarray
    columns: Tuple[ColumnInfo, ...]
    target: Optional[np.ndarray] = None

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64, copy=True)
        if values.ndim != 2:
            raise InvalidArguments(f"feature values must be 2-D (got {values.ndim}-D)")
        if len(self.columns) != values.shape[1]:
            raise ArityMismatchError(
                f"{len(self.columns)} column infos for {values.shape[1]} columns"
            )
        if not np.all(np.isfinite(values)):
            raise InvalidArguments("feature values contain NaN or infinite values")
        for j, column in enumerate(self.columns):
            binary = np.all((values[:, j] == 0) | (values[:, j] == 1))
            if column.tag == FeatureTag.DUMMY and not binary:
                raise InvalidArguments(f"dummy column '{column.name}' holds values other than 0/1")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "columns", tuple(self.columns))
        if self.target is not None:
            target = np.array(self.target, dtype=np.int64, copy=True).reshape(-1)
            if target.size != values.shape[0]:
                raise InvalidArguments(f"{target.size} targets for {values.shape[0]} rows")
            if not np.all((target == 0) | (target == 1)):
                raise InvalidArguments("target must be binary")
            target.setflags(write=False)
            object.__setattr__(self, "target", target)

    @classmethod
    def from_arrays(
        cls,
        values,
        names: Sequence[str],
        tags: Union[FeatureTag, Sequence[FeatureTag]] = FeatureTag.EXTERNAL,
        target=None,
    ) -> "FeatureMatrix":
        if isinstance(tags, FeatureTag):
            tags = [tags] * len(names)
        return cls(
            values=np.asarray(values, dtype=np.float64),
            columns=tuple(ColumnInfo(n, FeatureTag(t)) for n, t in zip(names, tags)),
            target=target,
        )

    def __len__(self) -> int:
        return self.values.shape[0]

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_cols(self) -> int:
        return self.values.shape[1]

    @property
    def names(self) -> List[str]:
        return [c.name for c in self.columns]

    @property
    def tags(self) -> List[FeatureTag]:
        return [c.tag for c in self.columns]

    @property
    def dummy_mask(self) -> np.ndarray:
        return np.array([c.tag == FeatureTag.DUMMY for c in self.columns], dtype=bool)

    def select(self, indices: Iterable[int]) -> "FeatureMatrix":
        """Columns at ``indices``, in that order."""
        indices = list(indices)
        return FeatureMatrix(
            values=self.values[:, indices],
            columns=tuple(self.columns[j] for j in indices),
            target=self.target,
        )

    def select_names(self, names: Iterable[str]) -> "FeatureMatrix":
        positions = {name: j for j, name in enumerate(self.names)}
        missing = [name for name in names if name not in positions]
        if missing:
            raise ArityMismatchError(f"columns {missing} are missing")
        return self.select(positions[name] for name in names)

    def take_rows(self, rows) -> "FeatureMatrix":
        return FeatureMatrix(
            values=self.values[rows],
            columns=self.columns,
            target=None if self.target is None else self.target[rows],
        )

    def with_values(self, values, target=None) -> "FeatureMatrix":
        return FeatureMatrix(values=values, columns=self.columns, target=target)

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.values, columns=self.names)
        if self.target is not None:
            frame["target"] = self.target
        return frame


@dataclass(frozen=True)
class Scaler:
    """Per-column centering and scaling. Dummy columns keep mean 0 and std 1, so pass through."""

    means: np.ndarray
    stds: np.ndarray

    def __post_init__(self):
        if np.any(self.stds <= 0):
            raise InvalidArguments("scaler standard deviations must be > 0")

    def _check(self, values: np.ndarray):
        if values.shape[1] != self.means.size:
            raise ArityMismatchError(
                f"scaler fitted on {self.means.size} columns, got {values.shape[1]}"
            )

    def transform(self, X: Union[FeatureMatrix, np.ndarray]):
        values = X.values if isinstance(X, FeatureMatrix) else np.asarray(X, dtype=np.float64)
        self._check(values)
        scaled = (values - self.means) / self.stds
        return X.with_values(scaled, target=X.target) if isinstance(X, FeatureMatrix) else scaled

    def inverse_transform(self, X: Union[FeatureMatrix, np.ndarray]):
        values = X.values if isinstance(X, FeatureMatrix) else np.asarray(X, dtype=np.float64)
        self._check(values)
        restored = values * self.stds + self.means
        if isinstance(X, FeatureMatrix):
            return X.with_values(restored, target=X.target)
        return restored


def standardize(X: FeatureMatrix) -> Tuple[FeatureMatrix, Scaler]:
    """Center and scale every non-dummy column to mean 0 and population std 1.

    Raises:
        ConstantColumnError: A non-dummy column has zero variance.
    """
    values = X.values
    dummy = X.dummy_mask
    means = np.where(dummy, 0.0, values.mean(axis=0)) if X.n_rows else np.zeros(X.n_cols)
    stds = np.where(dummy, 1.0, values.std(axis=0)) if X.n_rows else np.ones(X.n_cols)
    constant = (np.ptp(values, axis=0) == 0) if X.n_rows else np.ones(X.n_cols, dtype=bool)
    for j, std in enumerate(stds):
        if not dummy[j] and (constant[j] or not std > 0):
            raise ConstantColumnError(X.names[j])
    scaler = Scaler(means=means, stds=stds)
    return scaler.transform(X), scaler


def drop_constant_columns(X: FeatureMatrix) -> FeatureMatrix:
    """Drop the non-dummy columns with zero variance."""
    if X.n_rows == 0:
        return X
    constant = (np.ptp(X.values, axis=0) == 0) & ~X.dummy_mask
    if constant.any():
        dropped = [name for name, c in zip(X.names, constant) if c]
        logger.warning(f"Dropping constant columns {dropped}.")
    return X.select(np.flatnonzero(~constant))
