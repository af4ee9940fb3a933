# Copyright (C) 2024 socialgame-core developers
# SPDX-License-Identifier: MIT

from typing import Any, Callable, Iterable, List, Optional, TypeVar


class SocialGameError(Exception):
    """Provides the base exception for all errors of the social-game toolkit.

    To catch any expected error that the library might throw, use this exception.
    """


class ConfigurationError(SocialGameError):
    """Run could not be configured properly."""


class ConfigurationNotFoundError(ConfigurationError):
    """Configuration file does not exist."""


class InvalidConfigurationError(ConfigurationError, ValueError):
    """Given configuration is not valid."""


class ProcessingError(SocialGameError):
    """Data could not be processed."""


class InvalidArguments(SocialGameError, ValueError):
    """Invalid arguments were provided."""


class StageError(ProcessingError):
    """A pipeline stage failed."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause


class MultipleErrors(SocialGameError):
    """Multiple errors occurred."""

    def __init__(self, exceptions: List[SocialGameError]):
        super().__init__("; ".join(str(e) for e in exceptions))
        self.exceptions = exceptions


class NonConvergenceWarning(UserWarning):
    """An iterative solver hit its iteration cap before reaching its tolerance."""


# Ingestion and table invariants


class RowParseError(ProcessingError):
    """A cell of a delimited source could not be parsed."""

    def __init__(self, line: int, column: str, value: Optional[str] = None):
        super().__init__(f"line {line}, column '{column}': cannot parse {value!r}")
        self.line = line
        self.column = column


class DuplicateKeyError(ProcessingError):
    """The same (occupant, timestamp) key appears twice."""


class SchemaError(ProcessingError):
    """A mapped column is missing from the source."""


class WindowTooShortError(InvalidArguments):
    """Sensor window is shorter than the configured minimum."""


class MissingBaselineDataError(ProcessingError):
    """No qualifying day exists to compute a baseline."""

    def __init__(self, occupant: str, resource: str, daytype: str):
        super().__init__(
            f"no {daytype} day in the pre-game range for occupant '{occupant}', "
            f"resource '{resource}'"
        )
        self.occupant = occupant
        self.resource = resource
        self.daytype = daytype


class InvalidBaselineError(InvalidArguments):
    """Baseline must be strictly positive."""


class OverlapError(InvalidArguments):
    """Train and test intervals intersect."""


class EmptyTableError(InvalidArguments):
    """Table has no rows."""


class UnknownColumnError(InvalidArguments):
    """A configured column or resource does not exist."""


# Simulation


class EmptyChoiceSetError(InvalidArguments):
    """Choice set has no alternatives."""


class InvalidHorizonError(InvalidArguments):
    """Simulation horizon is shorter than one day."""


class DuplicateOccupantIdError(InvalidArguments):
    """Two profiles share an occupant id."""


class DegenerateLabelsError(ProcessingError):
    """All realized states are identical."""


# Features and learners


class ConstantColumnError(ProcessingError):
    """A non-dummy column has zero variance."""

    def __init__(self, name: str):
        super().__init__(f"column '{name}' is constant")
        self.name = name


class LengthMismatchError(InvalidArguments):
    """Inputs do not have the same length."""


class KOutOfRangeError(InvalidArguments):
    """Requested count is outside the valid range."""


class MinorityTooSmallError(ProcessingError):
    """Minority class is too small to interpolate."""


class SingleClassError(ProcessingError):
    """Labels contain a single class."""


class SingularCovarianceError(ProcessingError):
    """Pooled covariance cannot be inverted even after ridge regularization."""


class ArityMismatchError(InvalidArguments):
    """Number of feature columns does not match the trained model."""


class NonFiniteLossError(ProcessingError):
    """Training loss became NaN or infinite."""


class TooFewRowsError(InvalidArguments):
    """Fewer rows than the window length."""


# Explainability and evaluation


class DegenerateDesignError(ProcessingError):
    """All inner products with the response are zero."""


class FoldTooSmallError(ProcessingError):
    """A cross-validation fold is empty or lost a class."""


class SeriesTooShortError(InvalidArguments):
    """Series leaves no residual degrees of freedom for the requested lag."""


class RankDeficientError(ProcessingError):
    """Regression design is rank deficient."""


class TooFewPlayersError(InvalidArguments):
    """Stratification needs at least three occupants."""


class EmptySpaceError(InvalidArguments):
    """Search space has no values to draw from."""


class EmptySeriesError(InvalidArguments):
    """Series has no elements."""


class SampleTooSmallError(InvalidArguments):
    """Sample has fewer than two observations."""


class ZeroVarianceError(ProcessingError):
    """Both samples have zero variance."""


T = TypeVar("T")


def _map_despite_errors(
    function: Callable[[T], Any],
    iterable: Iterable[T],
):
    """Like the map() method, this method applies the function for
    each item in the iterable and returns the result. On an exception,
    it continues with the next items. At the end, it raises either the
    exception or the ``MultipleErrors`` exception.
    """
    results: List[Any] = []
    errors: List[SocialGameError] = []
    for item in iterable:
        try:
            results.append(function(item))
        except SocialGameError as e:
            errors.append(e)
    if errors:
        if len(errors) == 1:
            raise errors[0]
        raise MultipleErrors(errors)
    return results
