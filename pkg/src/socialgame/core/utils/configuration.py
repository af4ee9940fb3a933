# Copyright (C) 2024 socialgame-core developers
# SPDX-License-Identifier: MIT

import hashlib
import json
import logging
import os
import pathlib
from typing import Any, Dict, List, Literal, Mapping, Optional, Tuple

from pydantic import BaseModel, Field, field_validator, model_validator

from socialgame.core.data.game import GameConfig
from socialgame.core.data.minutes import IngestSchema
from socialgame.core.data.types import DateInterval, Mode
from socialgame.core.deep.bilstm import LstmConfig
from socialgame.core.deep.mlp import MlpConfig
from socialgame.core.deep.vae import VaeConfig
from socialgame.core.evaluation.search import parse_space
from socialgame.core.features.pooling import PoolingConfig
from socialgame.core.learners.base import LearnerConfig, LearnerKind
from socialgame.core.sim.models import ExogenousModel, OccupantProfile
from socialgame.core.utils.misc import deep_update

logger = logging.getLogger(__name__)

DATA_DIR_VARIABLE = "SOCIALGAME_DATA_DIR"
SEED_VARIABLE = "SOCIALGAME_SEED"


class DataConfig(BaseModel, extra="forbid"):
    path: Optional[str] = None
    "Per-minute export to ingest. Without it the telemetry is simulated."
    data_dir: Optional[str] = None
    "Base directory of a relative ``path``."
    ingest: IngestSchema = Field(default_factory=IngestSchema)
    pre_game: Optional[DateInterval] = None
    "Days the baselines are computed on. No baseline is computed when unset."
    train: Optional[DateInterval] = None
    test: Optional[DateInterval] = None
    "Held-out days. With ``train`` unset, every earlier day after the pre-game period trains."
    test_fraction: float = Field(0.25, gt=0, lt=1)
    "Share of the last days held out when ``test`` is unset."

    @model_validator(mode="after")
    def periods_are_disjoint(self):
        periods = [p for p in (self.pre_game, self.train, self.test) if p is not None]
        for i, first in enumerate(periods):
            for second in periods[i + 1 :]:
                if first.overlaps(second):
                    raise ValueError(f"periods {first} and {second} overlap")
        return self

    def resolved_path(self) -> Optional[pathlib.Path]:
        if self.path is None:
            return None
        path = pathlib.Path(self.path).expanduser()
        if not path.is_absolute() and self.data_dir:
            path = pathlib.Path(self.data_dir).expanduser() / path
        return path


class SimulationConfig(BaseModel, extra="forbid"):
    profiles: List[OccupantProfile] = Field(default_factory=list)
    "Simulated occupants. A default cohort of ``n_occupants`` is used when empty."
    n_occupants: int = Field(3, ge=1)
    resources: List[str] = Field(default_factory=lambda: ["desk_light", "ceiling_fan"])
    "Resources of the default cohort."
    exogenous: ExogenousModel = Field(default_factory=ExogenousModel)
    horizon_days: int = Field(14, ge=1)


class LearnersConfig(BaseModel, extra="forbid"):
    kinds: List[LearnerKind] = Field(default_factory=lambda: ["logistic"])
    hyperparameters: LearnerConfig = Field(default_factory=LearnerConfig)
    search_space: Dict[str, Any] = Field(default_factory=dict)
    "Hyperparameter to the range random search draws it from, as read by ``parse_space``."
    search_budget: int = Field(0, ge=0)
    "Number of random-search draws. 0 keeps the hyperparameters as given."
    cv_folds: int = Field(5, ge=2)
    smote: bool = True
    "Balance the training rows of every non-sequence learner."
    per_occupant: bool = True
    "Train one model per occupant instead of one on the pooled cohort."

    @field_validator("search_space")
    @classmethod
    def space_parses(cls, space):
        parse_space(space)
        unknown = set(space) - set(LearnerConfig.model_fields)
        if unknown:
            raise ValueError(f"search space names unknown hyperparameters {sorted(unknown)}")
        return space


class DeepConfig(BaseModel, extra="forbid"):
    mlp: MlpConfig = Field(default_factory=MlpConfig)
    lstm: LstmConfig = Field(default_factory=LstmConfig)
    vae: VaeConfig = Field(default_factory=VaeConfig)


class ExplainConfig(BaseModel, extra="forbid"):
    folds: int = Field(5, ge=2)
    combine: Literal["OR", "AND"] = "OR"
    one_standard_error: bool = False
    min_coefficient: float = Field(0.1, ge=0)
    "Standardized coefficients below this are left out of the neighborhoods. 0 keeps them all."
    max_rows: int = Field(5000, ge=10)
    "Last rows of every representative the graph is estimated on."
    granger_lag: Optional[int] = Field(1, ge=1)
    "Lag of the Granger tests. When unset, every pair gets its BIC-selected lag."
    granger_max_lag: int = Field(10, ge=1)
    alpha: float = Field(0.05, gt=0, lt=1)
    granger_pairs: List[Tuple[str, str]] = Field(default_factory=list)
    "(cause, effect) column pairs. Defaults to every ordered pair of device states."


class GenerateConfig(BaseModel, extra="forbid"):
    enabled: bool = True
    n_samples: int = Field(500, ge=1)
    n_perm: int = Field(200, ge=1)
    scheme: Literal["within", "swap"] = "within"
    columns: Optional[List[str]] = None
    "Columns compared by DTW. Defaults to every generated column."
    max_rows: int = Field(300, ge=2)
    "Length of the compared series."


class ReportConfig(BaseModel, extra="forbid"):
    delimiter: str = ","
    write_models: bool = True
    write_roc: bool = True


class RunConfig(BaseModel, extra="forbid"):
    """Everything a run depends on besides its input files.

    Example:
        .. code-block:: toml

            [default]
            seed = 7
            output_dir = "runs/spring"
            modes = ["step_ahead"]

            [default.learners]
            kinds = ["logistic", "random_forest"]

            [default.explain]
            combine = "AND"
    """

    seed: int = 0
    "Global seed. Every stage derives its own generator from it."
    output_dir: str = "runs/default"
    modes: List[Mode] = Field(default_factory=lambda: ["step_ahead", "sensor_free"])
    show_progress: bool = False
    data: DataConfig = Field(default_factory=DataConfig)
    game: GameConfig = Field(default_factory=GameConfig)
    simulation: SimulationConfig = Field(default_factory=SimulationConfig)
    features: PoolingConfig = Field(default_factory=PoolingConfig)
    learners: LearnersConfig = Field(default_factory=LearnersConfig)
    deep: DeepConfig = Field(default_factory=DeepConfig)
    explain: ExplainConfig = Field(default_factory=ExplainConfig)
    generate: GenerateConfig = Field(default_factory=GenerateConfig)
    report: ReportConfig = Field(default_factory=ReportConfig)

    @field_validator("modes")
    @classmethod
    def modes_are_unique(cls, modes):
        if not modes:
            raise ValueError("at least one mode is needed")
        return list(dict.fromkeys(modes))

    def canonical_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        """SHA-256 of the canonical JSON form of the effective configuration."""
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()


def environment_overrides(environ: Optional[Mapping[str, str]] = None) -> Dict[str, Any]:
    """Overrides read from ``SOCIALGAME_DATA_DIR`` and ``SOCIALGAME_SEED``."""
    environ = os.environ if environ is None else environ
    overrides: Dict[str, Any] = {}
    if environ.get(DATA_DIR_VARIABLE):
        overrides["data"] = {"data_dir": environ[DATA_DIR_VARIABLE]}
    if environ.get(SEED_VARIABLE):
        overrides["seed"] = environ[SEED_VARIABLE]
    if overrides:
        logger.debug(f"Environment overrides: {overrides}")
    return overrides


def build_run_config(
    raw: Mapping[str, Any], environ: Optional[Mapping[str, str]] = None, **overrides
) -> RunConfig:
    """Validate a configuration mapping after the environment and keyword overrides.

    Keyword overrides win over the environment, which wins over ``raw``.
    """
    merged = deep_update(raw, environment_overrides(environ), overrides)
    merged.pop("_config_file_profile", None)
    return RunConfig.model_validate(merged)
