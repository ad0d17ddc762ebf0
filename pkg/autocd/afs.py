from __future__ import annotations

import logging
from dataclasses import replace
from itertools import combinations
from typing import Sequence

import numpy as np

from .citests import ConditionalIndependenceTest, create_ci_test
from .dataset import Dataset
from .errors import ConfigError, DiscoveryError, InputError
from .learner import Model, constant_model, make_folds, predict, train_forest
from .models import AfsConfig, AfsResult, ForestSpec
from .seeding import derive_seed
from .stats import auroc_score, r2_score

logger = logging.getLogger(__name__)

DEFAULT_ALPHAS = (0.01, 0.05)
DEFAULT_MIN_LEAF = (1, 5)


def default_afs_grid(n_trees: int = 100, alphas: Sequence[float] = DEFAULT_ALPHAS) -> list[AfsConfig]:
    grid = []
    for selector in ("fbed", "ses"):
        for alpha in alphas:
            for min_leaf in DEFAULT_MIN_LEAF:
                forest = ForestSpec(n_trees=n_trees, min_leaf=min_leaf, feature_fraction="sqrt")
                grid.append(AfsConfig(selector=selector, alpha=alpha, forest=forest))
    return grid


def _candidates(d: Dataset, target: str) -> list[str]:
    d.require(target)
    return [c for c in d.columns if c != target]


def fbed_select(
    d: Dataset,
    target: str,
    alpha: float = 0.05,
    k_runs: int = 1,
    ci: ConditionalIndependenceTest | None = None,
) -> list[str]:
    if not 0.0 < alpha < 1.0:
        raise ConfigError("alpha must lie in (0, 1)")
    pool = _candidates(d, target)
    order = {c: i for i, c in enumerate(d.columns)}
    test = ci or create_ci_test("auto", d)
    selected: list[str] = []
    for run in range(k_runs + 1):
        remaining = [c for c in pool if c not in selected]
        added = False
        while remaining:
            scored = [(test(target, c, selected).p_value, order[c], c) for c in remaining]
            alive = [row for row in scored if row[0] <= alpha]
            if not alive:
                break
            _, _, best = min(alive)
            selected.append(best)
            added = True
            remaining = [c for _, _, c in alive if c != best]
        if not added:
            break
        logger.debug("fbed run %d for %s: %s", run, target, selected)
    while selected:
        scored = [
            (test(target, c, [s for s in selected if s != c]).p_value, -order[c], c) for c in selected
        ]
        p, _, worst = max(scored)
        if p <= alpha:
            break
        selected.remove(worst)
    return sorted(selected, key=order.__getitem__)


def ses_select(
    d: Dataset,
    target: str,
    alpha: float = 0.05,
    max_k: int = 3,
    ci: ConditionalIndependenceTest | None = None,
) -> tuple[list[str], list[list[str]]]:
    """Max-min parents-and-children selection with statistically equivalent signatures.

    Returns the primary set and the equivalent signatures (primary first), each
    in dataset column order.
    """
    if not 0.0 < alpha < 1.0:
        raise ConfigError("alpha must lie in (0, 1)")
    if max_k < 1:
        raise ConfigError("max_k must be >= 1")
    order = {c: i for i, c in enumerate(d.columns)}
    test = ci or create_ci_test("auto", d)
    equivalents: dict[str, set[str]] = {}

    def separating(var: str, among: list[str]) -> tuple[float, tuple[str, ...]]:
        worst_p, worst_s = -1.0, ()
        for size in range(min(max_k, len(among)) + 1):
            for subset in combinations(among, size):
                p = test(target, var, subset).p_value
                if p > worst_p:
                    worst_p, worst_s = p, subset
        return worst_p, worst_s

    def record(dropped: str, subset: tuple[str, ...]) -> None:
        for v in subset:
            swapped = [s for s in subset if s != v] + [dropped]
            if test(target, v, swapped).p_value > alpha:
                equivalents.setdefault(v, set()).add(dropped)

    selected: list[str] = []
    remaining = _candidates(d, target)
    while remaining:
        scored = []
        for c in remaining:
            p, subset = separating(c, selected)
            if p > alpha:
                record(c, subset)
            else:
                scored.append((p, order[c], c))
        if not scored:
            break
        _, _, best = min(scored)
        selected.append(best)
        remaining = [c for _, _, c in scored if c != best]

    for v in list(selected):
        others = [s for s in selected if s != v]
        p, subset = separating(v, others)
        if p > alpha:
            selected.remove(v)
            record(v, subset)

    primary = sorted(selected, key=order.__getitem__)
    signatures = [primary]
    for v in primary:
        for z in sorted(equivalents.get(v, ()), key=order.__getitem__):
            if z in primary:
                continue
            alt = sorted([z if s == v else s for s in primary], key=order.__getitem__)
            if alt not in signatures:
                signatures.append(alt)
    return primary, signatures


def metric_for(d: Dataset, target: str) -> str:
    if not d.is_categorical(target):
        return "r2"
    return "auroc" if d.n_levels(target) == 2 else "auroc_ovr"


def score_model(m: Model, test: Dataset, metric: str) -> float:
    pred = predict(m, test)
    y = test.values(m.target)
    if metric == "r2":
        return r2_score(y, pred.values)
    assert pred.proba is not None
    try:
        if metric == "auroc":
            return auroc_score(y, pred.proba[:, 1])
        return auroc_score(y, pred.proba)
    except InputError:
        # a fold holding one class carries no ranking information
        return 0.5


def _select(
    d: Dataset, target: str, cfg: AfsConfig, ci: ConditionalIndependenceTest
) -> tuple[list[str], list[list[str]]]:
    if cfg.selector == "fbed":
        chosen = fbed_select(d, target, cfg.alpha, cfg.k_runs, ci)
        return chosen, [chosen]
    return ses_select(d, target, cfg.alpha, cfg.max_k, ci)


def _fit(d: Dataset, target: str, predictors: list[str], spec: ForestSpec) -> Model:
    if not predictors:
        return constant_model(d, target, spec)
    return train_forest(d, target, predictors, spec)


def run_afs(
    d_train: Dataset,
    target: str,
    grid: Sequence[AfsConfig] | None = None,
    d_test: Dataset | None = None,
    k: int = 5,
    seed: int = 0,
    ci: str = "auto",
) -> AfsResult:
    """Grid search over selector and forest settings with k-fold CV.

    The winner maximises the mean fold score; ties go to fewer selected
    features, then grid order. It is then refit on all of ``d_train``.
    """
    configs = list(grid) if grid is not None else default_afs_grid()
    if not configs:
        raise ConfigError("afs grid is empty")
    d_train.require(target)
    metric = metric_for(d_train, target)
    folds = make_folds(d_train, target, k, derive_seed(seed, "afs", "folds"))
    splits = [(fold, d_train.take(tr), d_train.take(te)) for fold, tr, te in folds]
    tests = {fold: create_ci_test(ci, train) for fold, train, _ in splits}
    selections: dict[tuple[str, float, int, int, int], list[str]] = {}
    rows: list[dict[str, object]] = []
    ranking: list[tuple[float, float, int]] = []
    means: list[float] = []
    any_selected = False

    for idx, cfg in enumerate(configs):
        fold_scores: list[float] = []
        sizes: list[int] = []
        for fold, train, test in splits:
            key = (cfg.selector, cfg.alpha, cfg.k_runs, cfg.max_k, fold)
            if key not in selections:
                selections[key] = _select(train, target, cfg, tests[fold])[0]
            chosen = selections[key]
            any_selected = any_selected or bool(chosen)
            spec = replace(cfg.forest, seed=derive_seed(seed, "afs", cfg.label, fold))
            fold_scores.append(score_model(_fit(train, target, chosen, spec), test, metric))
            sizes.append(len(chosen))
        mean = float(np.mean(fold_scores))
        mean_size = float(np.mean(sizes))
        ranking.append((-mean, mean_size, idx))
        means.append(mean)
        rows.append(
            {
                "label": cfg.label,
                "config": cfg.to_dict(),
                "fold_scores": fold_scores,
                "mean_score": mean,
                "mean_selected": mean_size,
            }
        )
        logger.info("afs %s: %s=%.4f, %.1f features", cfg.label, metric, mean, mean_size)

    if not any_selected:
        raise DiscoveryError(
            f"no afs configuration selected any feature for {target}",
            {"configs": rows},
        )
    _, _, win = min(ranking)
    winner = configs[win]
    assert all(means[win] >= m for m in means)

    final_ci = create_ci_test(ci, d_train)
    mb_est, signatures = _select(d_train, target, winner, final_ci)
    spec = replace(winner.forest, seed=derive_seed(seed, "afs", winner.label, "final"))
    final_model = _fit(d_train, target, mb_est, spec)
    holdout = score_model(final_model, d_test, metric) if d_test is not None else None
    return AfsResult(
        target=target,
        mb_est=mb_est,
        equivalent_sets=signatures,
        winner=winner,
        cv_score=means[win],
        metric=metric,
        final_model=final_model,
        holdout_score=holdout,
        config_scores=rows,
    )


def estimate_markov_order(
    ts: Dataset,
    variable: str,
    max_order: int = 3,
    grid: Sequence[AfsConfig] | None = None,
    tolerance: float = 0.01,
    k: int = 5,
    seed: int = 0,
) -> tuple[int, dict[int, float]]:
    from .graph import node_id
    from .sim import lag_embed

    if max_order < 1:
        raise ConfigError("max_order must be >= 1")
    scores: dict[int, float] = {}
    for order in range(1, max_order + 1):
        embedded = lag_embed(ts, order)
        try:
            result = run_afs(embedded, node_id(variable, 0), grid, k=k, seed=seed)
        except DiscoveryError:
            scores[order] = float("-inf")
            continue
        scores[order] = result.cv_score
        logger.info("markov order %d: cv score %.4f", order, result.cv_score)
    best = max(scores.values())
    if best == float("-inf"):
        raise DiscoveryError(f"no lag window selected any feature for {variable}")
    chosen = min(o for o, s in scores.items() if s >= best - tolerance)
    return chosen, scores
