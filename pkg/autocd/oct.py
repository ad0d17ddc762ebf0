from __future__ import annotations

import logging
from typing import Sequence

import numpy as np
from joblib import Parallel, delayed

from .dataset import Dataset
from .discovery import run_discovery
from .errors import AutoCDError, ConfigError, DiscoveryError
from .graph import MixedGraph, markov_boundary
from .learner import make_folds, predict, train_forest
from .models import ClConfig, ConfigPerformance, FoldPlan, ForestSpec, OctReport
from .seeding import derive_seed, stream
from .stats import mutual_information_score, permutation_indistinguishable

logger = logging.getLogger(__name__)

OCT_TREES = 50


def _boundary(g: MixedGraph, node: str, order: dict[str, int]) -> list[str]:
    return sorted(markov_boundary(g, node), key=order.__getitem__)


def node_score(
    train: Dataset,
    test: Dataset,
    node: str,
    boundary: list[str],
    spec: ForestSpec,
) -> float:
    """Holdout mutual information between a node and its boundary model's predictions."""
    if not boundary:
        return 0.0
    model = train_forest(train, node, boundary, spec)
    if model.degenerate:
        return 0.0
    pred = predict(model, test)
    return mutual_information_score(test.values(node), pred.values, categorical=model.categorical)


def _run_fold(
    d: Dataset,
    cfg: ClConfig,
    fold: int,
    train_rows: np.ndarray,
    test_rows: np.ndarray,
    seed: int,
    n_trees: int,
) -> tuple[MixedGraph | None, list[float], list[int], str | None]:
    train, test = d.take(train_rows), d.take(test_rows)
    try:
        g = run_discovery(train, cfg)
    except AutoCDError as exc:
        logger.warning("%s failed on fold %d: %s", cfg.label, fold, exc)
        return None, [], [], f"fold {fold}: {exc}"
    order = {c: i for i, c in enumerate(d.columns)}
    scores: list[float] = []
    sizes: list[int] = []
    for node in d.columns:
        boundary = _boundary(g, node, order)
        spec = ForestSpec(n_trees=n_trees, seed=derive_seed(seed, "oct", fold, node))
        scores.append(node_score(train, test, node, boundary, spec))
        sizes.append(len(boundary))
    return g, scores, sizes, None


def config_performance(
    d: Dataset,
    cfg: ClConfig,
    folds: FoldPlan,
    seed: int = 0,
    n_trees: int = OCT_TREES,
    n_jobs: int = 1,
) -> ConfigPerformance:
    """Per-node, per-fold holdout scores and boundary sizes for one configuration."""
    if folds.k < 2:
        raise ConfigError("out-of-sample tuning needs k >= 2 folds")
    outcomes = Parallel(n_jobs=n_jobs)(
        delayed(_run_fold)(d, cfg, fold, train, test, seed, n_trees) for fold, train, test in folds
    )
    n = len(d.columns)
    scores = np.full((n, folds.k), np.nan)
    sizes = np.full((n, folds.k), np.nan)
    valid: list[bool] = []
    graphs: list[MixedGraph | None] = []
    errors: list[str] = []
    for fold, (g, fold_scores, fold_sizes, error) in enumerate(outcomes):
        graphs.append(g)
        valid.append(error is None)
        if error is not None:
            errors.append(error)
            continue
        scores[:, fold] = fold_scores
        sizes[:, fold] = fold_sizes
    perf = ConfigPerformance(
        config=cfg, scores=scores, mb_sizes=sizes, fold_valid=valid, fold_graphs=graphs, errors=errors
    )
    if perf.disqualified:
        logger.warning("%s disqualified: %d of %d folds failed", cfg.label, len(errors), folds.k)
    else:
        logger.info("oct %s: score=%.4f mb=%.2f", cfg.label, perf.mean_score, perf.mean_mb_size)
    return perf


def _paired(best: ConfigPerformance, other: ConfigPerformance) -> tuple[np.ndarray, np.ndarray]:
    shared = [b and o for b, o in zip(best.fold_valid, other.fold_valid)]
    return best.scores[:, shared].ravel(), other.scores[:, shared].ravel()


def oct_select(
    d: Dataset,
    configs: Sequence[ClConfig],
    k: int = 5,
    b: int = 1000,
    alpha: float = 0.05,
    seed: int = 0,
    n_trees: int = OCT_TREES,
    n_jobs: int = 1,
    target: str | None = None,
) -> OctReport:
    """Pick the configuration with the smallest mean boundary among those
    statistically indistinguishable from the best-scoring one."""
    if not configs:
        raise ConfigError("oct needs at least one configuration")
    if not 0.0 < alpha < 1.0:
        raise ConfigError("oct alpha must lie in (0, 1)")
    folds = make_folds(d, target, k, derive_seed(seed, "oct", "folds"))
    per_config = [config_performance(d, cfg, folds, seed, n_trees, n_jobs) for cfg in configs]
    alive = [i for i, perf in enumerate(per_config) if not perf.disqualified]
    if not alive:
        raise DiscoveryError(
            "every causal configuration was disqualified",
            {"configs": [{"label": p.config.label, "errors": p.errors} for p in per_config]},
        )
    best = max(alive, key=lambda i: (per_config[i].mean_score, -i))
    p_values: dict[int, float] = {}
    band = [best]
    for i in alive:
        if i == best:
            continue
        x, y = _paired(per_config[best], per_config[i])
        if x.size == 0:
            continue
        p, same = permutation_indistinguishable(x, y, b, alpha, stream(seed, "oct", "perm", i))
        p_values[i] = p
        if same:
            band.append(i)
    band.sort()
    winner = min(band, key=lambda i: (per_config[i].mean_mb_size, -per_config[i].mean_score, i))
    logger.info(
        "oct best=%s winner=%s (%d indistinguishable)",
        per_config[best].config.label,
        per_config[winner].config.label,
        len(band),
    )
    winner_graph = run_discovery(d, per_config[winner].config)
    order = {c: i for i, c in enumerate(d.columns)}
    final_size = float(np.mean([len(_boundary(winner_graph, c, order)) for c in d.columns]))
    return OctReport(
        nodes=list(d.columns),
        per_config=per_config,
        best_index=best,
        p_values=p_values,
        indistinguishable=band,
        winner_index=winner,
        winner_graph=winner_graph,
        winner_final_mb_size=final_size,
    )
