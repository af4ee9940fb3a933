# Copyright (C) 2024 socialgame-core developers
# SPDX-License-Identifier: MIT

import datetime
import functools
import itertools
import json
import logging
import math
import pathlib
import re
import zlib
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from pydantic import ValidationError

from socialgame.core import __version__
from socialgame.core.data.game import compute_baselines
from socialgame.core.data.minutes import MinuteTable, ingest_minutes, state_column
from socialgame.core.data.types import MINUTES_PER_DAY, DateInterval, Mode
from socialgame.core.deep.bilstm import make_windows, train_bilstm
from socialgame.core.deep.mlp import train_mlp
from socialgame.core.deep.vae import train_vae, vae_sample
from socialgame.core.errors import (
    InvalidArguments,
    InvalidConfigurationError,
    MinorityTooSmallError,
    SingleClassError,
    StageError,
    TooFewPlayersError,
    TooFewRowsError,
    _map_despite_errors,
)
from socialgame.core.evaluation.crossval import kfold_cv
from socialgame.core.evaluation.dtw import dtw_fidelity
from socialgame.core.evaluation.roc import RocResult, roc_auc
from socialgame.core.evaluation.search import parse_space, random_search
from socialgame.core.evaluation.stats import savings_table
from socialgame.core.explain.granger import granger_table
from socialgame.core.explain.graph import neighborhood_glasso
from socialgame.core.explain.players import final_ranks, stratify_players
from socialgame.core.features.matrix import (
    FeatureMatrix,
    Scaler,
    drop_constant_columns,
    standardize,
)
from socialgame.core.features.pooling import Baselines, pool_features
from socialgame.core.features.selection import mrmr_select
from socialgame.core.features.smote import smote
from socialgame.core.learners.base import BASELINE_KINDS, LearnerSpec, TrainedModel
from socialgame.core.learners.serialization import dump_model
from socialgame.core.sim.models import default_cohort
from socialgame.core.sim.simulator import simulate_cohort
from socialgame.core.utils.config_file import get_config
from socialgame.core.utils.configuration import RunConfig, build_run_config
from socialgame.core.utils.files import file_path_to_obj_file, output_lock

logger = logging.getLogger(__name__)

COMMANDS = (
    "simulate",
    "ingest",
    "baseline",
    "features",
    "train",
    "evaluate",
    "explain",
    "generate",
    "report",
)
AUC_COLUMNS = ["occupant", "resource", "learner", "mode", "auc", "n_test", "config_hash", "seed"]
POOLED_COHORT = "all"


def stage_rng(seed: int, *keys: str) -> np.random.Generator:
    """Generator of one pipeline task, independent of the order tasks run in."""
    return np.random.default_rng([seed, zlib.crc32("/".join(keys).encode())])


def _slug(*parts: str) -> str:
    return "_".join(re.sub(r"[^A-Za-z0-9.-]+", "-", str(p)) for p in parts)


def _stage(name: str):
    """Log the boundaries of a stage and re-raise its failures as :class:`StageError`."""

    def decorator(method: Callable) -> Callable:
        @functools.wraps(method)
        def wrapper(self, *args, **kwargs):
            logger.info(f"Stage {name}: started.")
            try:
                result = method(self, *args, **kwargs)
            except StageError:
                raise
            except Exception as e:
                raise StageError(name, e) from e
            logger.info(f"Stage {name}: done.")
            return result

        return wrapper

    return decorator


@dataclass(frozen=True)
class Dataset:
    """Standardized, selected train and test rows of one prediction task."""

    occupant: str
    resource: str
    mode: Mode
    train: FeatureMatrix
    test: FeatureMatrix
    train_groups: np.ndarray
    "Occupant of every training row. Sequence windows never straddle two occupants."
    test_groups: np.ndarray
    scaler: Scaler

    @property
    def key(self) -> str:
        return _slug(self.occupant, self.resource, self.mode)


class Pipeline:
    """Orchestrates a run, one method per command.

    Every method runs the stages it depends on first, caches its result and writes its
    artifacts under ``config.output_dir``.

    Args:
        config: Run configuration. Built from ``**kwargs`` when not given.
        **kwargs: Configuration fields, as in a profile of a configuration file.

    Example:
        .. code-block:: python

            pipeline = Pipeline.from_config("socialgame.toml", profile="spring")
            auc_table = pipeline.evaluate()
    """

    def __init__(self, config: Optional[RunConfig] = None, **kwargs):
        if config is None:
            try:
                config = build_run_config(kwargs)
            except ValidationError as e:
                raise InvalidConfigurationError(f"Invalid configuration: {e}") from None
        elif kwargs:
            raise InvalidArguments("pass either a configuration or keyword fields, not both")
        self.config = config
        self.output_dir = pathlib.Path(config.output_dir).expanduser()
        self.config_hash = config.config_hash()
        self._lock = None
        self._artifacts: Dict[str, Dict[str, Any]] = {}
        self._table: Optional[MinuteTable] = None
        self._baselines: Optional[Baselines] = None
        self._baselines_done = False
        self._datasets: Optional[List[Dataset]] = None
        self._models: Optional[Dict[Tuple[str, str], TrainedModel]] = None
        self._auc_table: Optional[pd.DataFrame] = None
        self._explained = False
        self._generated = False

    @classmethod
    def from_config(
        cls, path=None, profile: str = "default", ignore_missing: bool = False, **overrides
    ) -> "Pipeline":
        """Build a pipeline from a profile of a TOML file, the environment and overrides."""
        raw = get_config(path, profile, ignore_missing=ignore_missing)
        try:
            config = build_run_config(raw, **overrides)
        except ValidationError as e:
            raise InvalidConfigurationError(f"Invalid configuration: {e}") from None
        return cls(config)

    # Outputs

    def _write(self, name: str, write: Callable[[Any], None]):
        if self._lock is None:
            self._lock = output_lock(self.output_dir)
        with self._lock, file_path_to_obj_file(self.output_dir / name, "w") as f:
            write(f)
        self._artifacts[name] = {"config_hash": self.config_hash, "seed": self.config.seed}
        logger.debug(f"Wrote {self.output_dir / name}.")

    def _write_frame(self, name: str, frame: pd.DataFrame, delimiter: Optional[str] = None):
        delimiter = delimiter or self.config.report.delimiter
        self._write(name, lambda f: frame.to_csv(f, sep=delimiter, index=False, lineterminator="\n"))

    def _write_json(self, name: str, document: Any):
        def dump(f):
            json.dump(document, f, indent=1, sort_keys=True, allow_nan=True)
            f.write("\n")

        self._write(name, dump)

    def write_run_files(self):
        """Write the effective configuration and the manifest of every artifact written so far."""
        self._write_json("effective_config.json", self.config.model_dump(mode="json"))
        manifest = dict(sorted(self._artifacts.items()))
        manifest["manifest.json"] = {"config_hash": self.config_hash, "seed": self.config.seed}
        self._write_json("manifest.json", manifest)

    def run(self, command: str):
        """Run a command and write the run files."""
        if command not in COMMANDS:
            raise InvalidArguments(f"unknown command '{command}'")
        result = getattr(self, command)()
        self.write_run_files()
        return result

    # Data

    @_stage("simulate")
    def simulate(self) -> MinuteTable:
        """Simulate the cohort and write ``minutes.csv``."""
        if self._table is not None:
            return self._table
        sim = self.config.simulation
        profiles = sim.profiles or default_cohort(
            sim.n_occupants, sim.resources, seed=self.config.seed
        )
        self._table = simulate_cohort(
            profiles,
            sim.exogenous,
            sim.horizon_days * MINUTES_PER_DAY,
            self.config.game,
            stage_rng(self.config.seed, "simulate"),
            show_progress=self.config.show_progress,
        )
        self._write("minutes.csv", lambda f: self._table.to_csv(f, self.config.report.delimiter))
        return self._table

    @_stage("ingest")
    def ingest(self) -> MinuteTable:
        """Read the configured export and write its canonical copy to ``minutes.csv``."""
        if self._table is not None:
            return self._table
        path = self.config.data.resolved_path()
        if path is None:
            raise InvalidArguments("no data path is configured")
        self._table = ingest_minutes(path, self.config.data.ingest)
        logger.info(f"Ingested {self._table!r}.")
        self._write("minutes.csv", lambda f: self._table.to_csv(f, self.config.report.delimiter))
        return self._table

    def table(self) -> MinuteTable:
        return self.ingest() if self.config.data.path is not None else self.simulate()

    def _days(self) -> List[datetime.date]:
        return sorted(set(self.table().local_dates()))

    @_stage("baseline")
    def baseline(self) -> Optional[Baselines]:
        """Baselines over the pre-game days, and the before/after savings table."""
        if self._baselines_done:
            return self._baselines
        table = self.table()
        pre_game = self._pre_game()
        self._baselines_done = True
        if pre_game is None:
            logger.info("No pre-game period configured, skipping the baselines.")
            return None
        holidays = self.config.game.holidays
        self._baselines = compute_baselines(table, pre_game, holidays)
        rows = [
            {"occupant": o, "resource": r, "weekday": b.weekday, "weekend": b.weekend}
            for o, per_resource in self._baselines.items()
            for r, b in per_resource.items()
        ]
        self._write_frame("baselines.csv", pd.DataFrame(rows))
        after = DateInterval(start=pre_game.end + datetime.timedelta(days=1), end=self._days()[-1])
        if after.is_empty:
            logger.info("No day follows the pre-game period, skipping the savings table.")
            return self._baselines
        self._write_frame("savings.csv", savings_table(table, pre_game, after, holidays))
        return self._baselines

    def _pre_game(self) -> Optional[DateInterval]:
        return self.config.data.pre_game or self.config.game.pre_game_range

    def _split(self, dates: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        data = self.config.data
        pre_game = self._pre_game()
        days = [d for d in self._days() if pre_game is None or d not in pre_game]
        if data.test is not None:
            test_days = {d for d in days if d in data.test}
        else:
            n_test = max(1, math.ceil(data.test_fraction * len(days)))
            test_days = set(days[-n_test:]) if len(days) > 1 else set()
        if data.train is not None:
            train_days = {d for d in days if d in data.train}
        else:
            train_days = {d for d in days if d not in test_days}
        if not train_days or not test_days:
            raise InvalidArguments(
                f"{len(train_days)} training and {len(test_days)} test days; both must be > 0"
            )
        train = np.array([d in train_days for d in dates], dtype=bool)
        test = np.array([d in test_days for d in dates], dtype=bool)
        return train, test

    # Features

    def _pooled_parts(self, resource: str, mode: Mode, occupants: List[str]):
        table = self.table()
        config = self.config.features.model_copy(update={"target_resource": resource})
        parts = []
        for occupant in occupants:
            subset = table.for_occupant(occupant)
            if len(subset) <= config.warmup:
                logger.warning(f"Occupant {occupant} has too few rows, left out.")
                continue
            pooled = pool_features(subset, config, mode, self.config.game, self._baselines)
            dates = subset.local_dates().to_numpy()[config.warmup :]
            parts.append((occupant, pooled, dates))
        return parts

    def _dataset(self, label: str, resource: str, mode: Mode, occupants: List[str]):
        train_parts, test_parts, train_groups, test_groups = [], [], [], []
        for occupant, pooled, dates in self._pooled_parts(resource, mode, occupants):
            train_rows, test_rows = self._split(dates)
            train_parts.append(pooled.take_rows(train_rows))
            test_parts.append(pooled.take_rows(test_rows))
            train_groups.append(np.full(int(train_rows.sum()), occupant, dtype=object))
            test_groups.append(np.full(int(test_rows.sum()), occupant, dtype=object))
        if not train_parts:
            return None
        train, test = _stack(train_parts), _stack(test_parts)
        if train.n_rows == 0 or train.target.min() == train.target.max():
            logger.warning(f"Training rows of {label}/{resource}/{mode} hold one class, skipped.")
            return None
        train = drop_constant_columns(train)
        test = test.select_names(train.names)
        k = min(self.config.features.n_selected, train.n_cols)
        order = mrmr_select(train, train.target, k, self.config.features.bins)
        train, test = train.select(order), test.select(order)
        train, scaler = standardize(train)
        return Dataset(
            occupant=label,
            resource=resource,
            mode=mode,
            train=train,
            test=scaler.transform(test),
            train_groups=np.concatenate(train_groups),
            test_groups=np.concatenate(test_groups),
            scaler=scaler,
        )

    @_stage("features")
    def features(self) -> List[Dataset]:
        """Pool, split, select and standardize the features of every task.

        A task is an occupant (or the whole cohort), a target resource and a mode. The split
        is by day and mRMR only sees the training rows. ``selected_features.txt`` lists the
        kept columns of every task in selection order.
        """
        if self._datasets is not None:
            return self._datasets
        table = self.table()
        self.baseline()
        target = self.config.features.target_resource
        resources = [target] if target else list(table.resources)
        occupants = sorted(table.occupants)
        cohorts = (
            [(o, [o]) for o in occupants]
            if self.config.learners.per_occupant
            else [(POOLED_COHORT, occupants)]
        )
        datasets = []
        for (label, members), resource, mode in itertools.product(
            cohorts, resources, self.config.modes
        ):
            dataset = self._dataset(label, resource, mode, members)
            if dataset is not None:
                datasets.append(dataset)
        if not datasets:
            raise SingleClassError("no task has both classes in its training rows")
        lines = ["occupant\tresource\tmode\trank\tfeature\ttag"]
        for dataset in datasets:
            for rank, column in enumerate(dataset.train.columns, start=1):
                lines.append(
                    f"{dataset.occupant}\t{dataset.resource}\t{dataset.mode}\t{rank}"
                    f"\t{column.name}\t{column.tag.value}"
                )
        self._write("selected_features.txt", lambda f: f.write("\n".join(lines) + "\n"))
        self._datasets = datasets
        return datasets

    # Learning

    def _balanced(self, dataset: Dataset, rng: np.random.Generator):
        X, y = dataset.train, dataset.train.target
        if not self.config.learners.smote:
            return X, y
        try:
            return smote(X, y, self.config.features.smote_neighbors, rng)
        except MinorityTooSmallError as e:
            logger.warning(f"No oversampling for {dataset.key}: {e}")
            return X, y

    def _fit_baseline(self, kind: str, dataset: Dataset, rng: np.random.Generator):
        learners = self.config.learners
        X, y = self._balanced(dataset, rng)
        spec = LearnerSpec(kind, learners.hyperparameters)
        if learners.search_budget and learners.search_space:

            def objective(params):
                cv_rng = stage_rng(self.config.seed, "search", dataset.key, kind, repr(params))
                return kfold_cv(X.values, y, learners.cv_folds, spec.with_params(params), cv_rng).mean

            result = random_search(
                parse_space(learners.search_space),
                learners.search_budget,
                objective,
                rng,
                show_progress=self.config.show_progress,
            )
            logger.info(f"Best {kind} draw for {dataset.key}: {result.best_config}")
            spec = spec.with_params(result.best_config)
        return spec.fit(X, y, rng)

    def _windows(self, X: FeatureMatrix, groups: np.ndarray):
        window = self.config.deep.lstm.window
        windows, labels = [], []
        for group in pd.unique(groups):
            rows = groups == group
            if rows.sum() < window:
                logger.warning(f"Occupant {group} has fewer rows than the window, left out.")
                continue
            w, y = make_windows(X.values[rows], X.target[rows], window)
            windows.append(w)
            labels.append(y)
        if not windows:
            raise TooFewRowsError(f"no occupant has {window} consecutive rows")
        return np.concatenate(windows), np.concatenate(labels)

    def _fit(self, kind: str, dataset: Dataset) -> TrainedModel:
        rng = stage_rng(self.config.seed, "train", dataset.key, kind)
        show_progress = self.config.show_progress
        if kind in BASELINE_KINDS:
            return self._fit_baseline(kind, dataset, rng)
        if kind == "mlp":
            X, y = self._balanced(dataset, rng)
            return train_mlp(X, y, self.config.deep.mlp, rng, show_progress)
        windows, labels = self._windows(dataset.train, dataset.train_groups)
        return train_bilstm(
            windows, labels, self.config.deep.lstm, rng, dataset.train.names, show_progress
        )

    @_stage("train")
    def train(self) -> Dict[Tuple[str, str], TrainedModel]:
        """Train every configured learner on every task.

        Non-sequence learners train on SMOTE-balanced rows; the bi-directional LSTM trains on
        the windows of each occupant. Models go to ``models/`` and training logs to
        ``history/``.
        """
        if self._models is not None:
            return self._models
        models = {}
        for dataset in self.features():
            for kind in self.config.learners.kinds:
                model = self._fit(kind, dataset)
                models[(dataset.key, kind)] = model
                name = _slug(dataset.key, kind)
                if self.config.report.write_models:
                    self._write(
                        f"models/{name}.json",
                        lambda f, m=model: f.write(_model_json(m)),
                    )
                if "history" in model.metadata:
                    history = pd.DataFrame(model.metadata["history"])
                    self._write_frame(f"history/{name}.csv", history)
        self._models = models
        return models

    def _test_scores(self, kind: str, model: TrainedModel, dataset: Dataset):
        if kind != "bilstm":
            return model.predict_proba(dataset.test.values), dataset.test.target
        windows, labels = self._windows(dataset.test, dataset.test_groups)
        return model.predict_proba(windows), labels

    @_stage("evaluate")
    def evaluate(self) -> pd.DataFrame:
        """AUC of every model on its held-out days, one row per occupant, resource, learner
        and mode, written to ``auc_table.csv``. ROC curves go to ``roc/``.
        """
        if self._auc_table is not None:
            return self._auc_table
        models = self.train()
        rows = []
        for dataset in self.features():
            for kind in self.config.learners.kinds:
                scores, labels = self._test_scores(kind, models[(dataset.key, kind)], dataset)
                result: Optional[RocResult] = None
                try:
                    result = roc_auc(scores, labels)
                except SingleClassError:
                    logger.warning(f"Test rows of {dataset.key} hold one class, AUC undefined.")
                rows.append(
                    [
                        dataset.occupant,
                        dataset.resource,
                        kind,
                        dataset.mode,
                        math.nan if result is None else result.auc,
                        int(labels.size),
                        self.config_hash,
                        self.config.seed,
                    ]
                )
                if result is not None and self.config.report.write_roc:
                    self._write(
                        f"roc/{_slug(dataset.key, kind)}.csv",
                        lambda f, r=result: f.write(r.to_csv()),
                    )
        self._auc_table = pd.DataFrame(rows, columns=AUC_COLUMNS)
        self._write_frame("auc_table.csv", self._auc_table)
        return self._auc_table

    # Explainability

    def _representatives(self) -> Dict[str, str]:
        ranks = final_ranks(self.table())
        try:
            return stratify_players(ranks).representatives
        except TooFewPlayersError as e:
            logger.warning(f"{e}; explaining every occupant.")
            return {occupant: occupant for occupant in sorted(ranks)}

    def _granger_frame(self, occupant: str) -> pd.DataFrame:
        frame = self.table().for_occupant(occupant).frame
        numeric = frame.select_dtypes(include=[np.number]).astype(np.float64)
        for resource in self.table().resources:
            numeric[state_column(resource)] = (frame[state_column(resource)] != 0).astype(float)
        return numeric.reset_index(drop=True)

    def _explain_representative(self, label: str, occupant: str, pairs) -> Optional[pd.DataFrame]:
        explain = self.config.explain
        resource = self.config.features.target_resource or self.table().resources[0]
        parts = self._pooled_parts(resource, "step_ahead", [occupant])
        if not parts:
            return None
        pooled = parts[0][1]
        pooled = drop_constant_columns(pooled.take_rows(slice(-explain.max_rows, None)))
        standardized, _ = standardize(pooled)
        graph = neighborhood_glasso(
            standardized,
            folds=explain.folds,
            combine=explain.combine,
            one_standard_error=explain.one_standard_error,
            min_coefficient=explain.min_coefficient,
        )
        name = _slug(label)
        self._write(f"edges_{name}.tsv", lambda f: f.write(graph.to_edge_list()))
        self._write_json(f"adjacency_{name}.json", graph.to_adjacency())
        if not pairs:
            return None
        rows = granger_table(
            self._granger_frame(occupant),
            pairs,
            explain.granger_lag,
            explain.alpha,
            explain.granger_max_lag,
        )
        rows.insert(0, "occupant", occupant)
        rows.insert(0, "class", label)
        return rows

    @_stage("explain")
    def explain(self):
        """Dependence graph and Granger tests of every class representative.

        Every representative is analysed even when another one fails; the failures are raised
        together at the end.
        """
        if self._explained:
            return
        table = self.table()
        self.baseline()
        pairs = self.config.explain.granger_pairs or [
            (state_column(a), state_column(b))
            for a, b in itertools.permutations(table.resources, 2)
        ]
        granger = _map_despite_errors(
            lambda item: self._explain_representative(*item, pairs),
            self._representatives().items(),
        )
        granger = [rows for rows in granger if rows is not None]
        if granger:
            self._write_frame("granger.csv", pd.concat(granger, ignore_index=True))
        self._explained = True

    # Generation

    @_stage("generate")
    def generate(self):
        """Train the auto-encoder on the first task's training rows and compare its samples.

        Samples go to ``samples.csv`` in the original units; the DTW permutation test of every
        compared column goes to ``dtw.csv``.
        """
        if self._generated or not self.config.generate.enabled:
            return
        generate = self.config.generate
        datasets = self.features()
        dataset = next((d for d in datasets if d.mode == "step_ahead"), datasets[0])
        rng = stage_rng(self.config.seed, "generate", dataset.key)
        generator = train_vae(
            dataset.train, self.config.deep.vae, rng, dataset.scaler, self.config.show_progress
        )
        samples = vae_sample(generator, generate.n_samples, rng).to_frame()
        self._write_frame("samples.csv", samples)
        original = dataset.scaler.inverse_transform(dataset.train).to_frame()
        columns = generate.columns or list(samples.columns)
        n = min(generate.max_rows, len(original), len(samples))
        fidelity = dtw_fidelity(
            original.iloc[:n], samples.iloc[:n], columns, generate.n_perm, rng, generate.scheme
        )
        self._write_frame("dtw.csv", fidelity)
        self._generated = True

    @_stage("report")
    def report(self) -> Dict[str, Any]:
        """Run every stage and write ``summary.json``."""
        auc_table = self.evaluate()
        self.explain()
        self.generate()
        table = self.table()
        by_learner = auc_table.groupby(["learner", "mode"], sort=True)["auc"].mean()
        summary = {
            "version": __version__,
            "config_hash": self.config_hash,
            "seed": self.config.seed,
            "n_rows": len(table),
            "occupants": sorted(table.occupants),
            "resources": list(table.resources),
            "mean_auc": {f"{k}/{m}": _finite(v) for (k, m), v in by_learner.items()},
            "n_tasks": len(self.features()),
        }
        self._write_json("summary.json", summary)
        return summary


def _finite(value: float) -> Optional[float]:
    return None if value is None or not math.isfinite(value) else float(value)


def _stack(parts: List[FeatureMatrix]) -> FeatureMatrix:
    columns = parts[0].columns
    for part in parts[1:]:
        if part.columns != columns:
            raise InvalidArguments("occupants of a pooled cohort have different feature pools")
    return FeatureMatrix(
        values=np.concatenate([p.values for p in parts]),
        columns=columns,
        target=np.concatenate([p.target for p in parts]),
    )


def _model_json(model: TrainedModel) -> str:
    return json.dumps(dump_model(model), indent=1, sort_keys=True) + "\n"


def run_pipeline(config: RunConfig) -> pd.DataFrame:
    """Run a configuration end to end and return its AUC table."""
    return Pipeline(config).run("evaluate")
