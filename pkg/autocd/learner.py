from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import joblib
import numpy as np
from sklearn.ensemble import RandomForestClassifier, RandomForestRegressor
from sklearn.model_selection import KFold, StratifiedKFold

from .dataset import Dataset
from .errors import ConfigError, InputError, SampleSizeError
from .models import FoldPlan, ForestSpec

logger = logging.getLogger(__name__)

MODEL_FORMAT_VERSION = 1


@dataclass
class Prediction:
    values: np.ndarray  # regression output, or the argmax level code
    proba: np.ndarray | None = None  # (n, n_levels), columns follow the level codes


@dataclass
class Model:
    target: str
    predictors: list[str]
    categorical: bool
    spec: ForestSpec
    n_levels: int = 0
    estimator: Any = None
    constant: np.ndarray | float | None = None
    degenerate: bool = False
    format_version: int = MODEL_FORMAT_VERSION
    meta: dict[str, Any] = field(default_factory=dict)

    @property
    def kind(self) -> str:
        return "classification" if self.categorical else "regression"


def _forest(spec: ForestSpec, categorical: bool) -> Any:
    params = dict(
        n_estimators=spec.n_trees,
        min_samples_leaf=spec.min_leaf,
        max_features="sqrt" if spec.feature_fraction == "sqrt" else 1.0,
        max_depth=spec.max_depth,
        random_state=spec.seed,
        n_jobs=1,
    )
    if categorical:
        return RandomForestClassifier(**params)
    return RandomForestRegressor(**params)


def constant_model(d: Dataset, target: str, spec: ForestSpec | None = None) -> Model:
    """Predictor ignoring its inputs: the training mean or class frequencies."""
    d.require(target)
    categorical = d.is_categorical(target)
    if categorical:
        n_levels = d.n_levels(target)
        freq = np.bincount(d.codes(target), minlength=n_levels) / max(1, d.n_rows)
        constant: np.ndarray | float = freq
    else:
        n_levels = 0
        constant = float(np.mean(d.values(target))) if d.n_rows else 0.0
    return Model(
        target=target,
        predictors=[],
        categorical=categorical,
        spec=spec or ForestSpec(),
        n_levels=n_levels,
        constant=constant,
    )


def train_forest(d: Dataset, target: str, predictors: Sequence[str], spec: ForestSpec) -> Model:
    d.require(target, *predictors)
    if not predictors:
        raise InputError("train_forest needs at least one predictor")
    if target in predictors:
        raise InputError(f"target {target!r} is among its predictors")
    y = d.values(target)
    if np.ptp(y) == 0:
        logger.warning("target %s is constant; fitting a constant model", target)
        model = constant_model(d, target, spec)
        model.predictors = list(predictors)
        model.degenerate = True
        return model
    categorical = d.is_categorical(target)
    estimator = _forest(spec, categorical)
    estimator.fit(d.design(predictors, drop_first=False), y.astype(np.int64) if categorical else y)
    return Model(
        target=target,
        predictors=list(predictors),
        categorical=categorical,
        spec=spec,
        n_levels=d.n_levels(target) if categorical else 0,
        estimator=estimator,
    )


def predict(m: Model, rows: Dataset) -> Prediction:
    n = rows.n_rows
    if m.estimator is None:
        if m.categorical:
            freq = np.asarray(m.constant, dtype=np.float64)
            proba = np.tile(freq, (n, 1))
            return Prediction(values=np.full(n, int(np.argmax(freq))), proba=proba)
        return Prediction(values=np.full(n, 0.0 if m.constant is None else float(m.constant)))
    rows.require(*m.predictors)
    design = rows.design(m.predictors, drop_first=False)
    if not m.categorical:
        return Prediction(values=np.asarray(m.estimator.predict(design), dtype=np.float64))
    raw = m.estimator.predict_proba(design)
    proba = np.zeros((n, m.n_levels))
    proba[:, np.asarray(m.estimator.classes_, dtype=np.int64)] = raw
    return Prediction(values=np.argmax(proba, axis=1), proba=proba)


def make_folds(d: Dataset, target: str | None = None, k: int = 5, seed: int = 0) -> FoldPlan:
    if target is not None:
        d.require(target)
    if k < 2:
        raise ConfigError(f"k must be >= 2, got {k}")
    if d.n_rows < k:
        raise SampleSizeError(f"cannot split {d.n_rows} rows into {k} folds")
    assignments = np.empty(d.n_rows, dtype=np.int64)
    index = np.arange(d.n_rows)
    splits = KFold(n_splits=k, shuffle=True, random_state=seed).split(index)
    if target is not None and d.is_categorical(target):
        codes = d.codes(target)
        if np.bincount(codes).max() >= k and len(np.unique(codes)) > 1:
            splitter: Any = StratifiedKFold(n_splits=k, shuffle=True, random_state=seed)
            splits = splitter.split(index, codes)
    for fold, (_, test) in enumerate(splits):
        assignments[test] = fold
    return FoldPlan(k=k, assignments=assignments, seed=seed)


def save_model(m: Model, path: str | Path) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    joblib.dump({"format_version": MODEL_FORMAT_VERSION, "model": m}, target)
    return target


def load_model(path: str | Path) -> Model:
    payload = joblib.load(Path(path))
    if not isinstance(payload, dict) or payload.get("format_version") != MODEL_FORMAT_VERSION:
        raise InputError(f"{path}: unsupported model format")
    model = payload["model"]
    if not isinstance(model, Model):
        raise InputError(f"{path}: not an autocd model")
    return model
