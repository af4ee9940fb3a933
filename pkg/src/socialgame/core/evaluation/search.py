# Copyright (C) 2024 socialgame-core developers
# SPDX-License-Identifier: MIT

import logging
import math
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Literal, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field, TypeAdapter, model_validator
from tqdm import tqdm
from typing_extensions import Annotated

from socialgame.core.errors import EmptySpaceError, InvalidArguments

logger = logging.getLogger(__name__)


class UniformRange(BaseModel, extra="forbid"):
    type: Literal["uniform"] = "uniform"
    low: float
    high: float
    log: bool = False
    "Draw uniformly in log space. Both bounds must then be positive."

    @model_validator(mode="after")
    def check_bounds(self):
        if self.log and self.low <= 0:
            raise ValueError("log-uniform ranges need positive bounds")
        return self

    def draw(self, rng: np.random.Generator) -> float:
        if self.low > self.high:
            raise EmptySpaceError(f"empty range [{self.low}, {self.high}]")
        if self.log:
            return float(math.exp(rng.uniform(math.log(self.low), math.log(self.high))))
        return float(rng.uniform(self.low, self.high))


class IntRange(BaseModel, extra="forbid"):
    type: Literal["int"] = "int"
    low: int
    high: int
    "Upper bound, included."

    def draw(self, rng: np.random.Generator) -> int:
        if self.low > self.high:
            raise EmptySpaceError(f"empty range [{self.low}, {self.high}]")
        return int(rng.integers(self.low, self.high + 1))


class Choice(BaseModel, extra="forbid"):
    type: Literal["choice"] = "choice"
    values: List[Any] = Field(default_factory=list)

    def draw(self, rng: np.random.Generator) -> Any:
        if not self.values:
            raise EmptySpaceError("choice without values")
        return self.values[int(rng.integers(len(self.values)))]


ParamRange = Union[UniformRange, IntRange, Choice]
SearchSpace = Dict[str, ParamRange]

_SPACE_ADAPTER = TypeAdapter(Dict[str, Annotated[ParamRange, Field(discriminator="type")]])


def parse_space(raw: Dict[str, Any]) -> SearchSpace:
    """Build a search space from a config mapping such as ``{"C": {"type": "uniform", ...}}``."""
    return _SPACE_ADAPTER.validate_python(raw)


@dataclass(frozen=True)
class SearchResult:
    best_config: Dict[str, Any]
    best_score: float
    trace: Tuple[Tuple[Dict[str, Any], float], ...]


def random_search(
    space: SearchSpace,
    budget: int,
    objective: Callable[[Dict[str, Any]], float],
    rng: np.random.Generator,
    show_progress: bool = False,
) -> SearchResult:
    """Randomized search maximizing ``objective``.

    Hyperparameters are drawn in sorted name order so a seed always produces the same trace.
    The first of several equal best scores wins.

    Raises:
        EmptySpaceError: The space or one of its ranges is empty.
    """
    if budget < 1:
        raise InvalidArguments(f"budget must be >= 1 (got {budget})")
    if not space:
        raise EmptySpaceError("search space has no hyperparameter")
    trace = []
    best_index = 0
    for draw in tqdm(range(budget), disable=not show_progress):
        config = {name: space[name].draw(rng) for name in sorted(space)}
        score = float(objective(config))
        trace.append((config, score))
        if score > trace[best_index][1] or math.isnan(trace[best_index][1]):
            best_index = draw
        logger.debug(f"Draw {draw + 1}/{budget}: {config} -> {score:.4f}")
    best_config, best_score = trace[best_index]
    return SearchResult(best_config=best_config, best_score=best_score, trace=tuple(trace))
