"""Synthetic benchmark: feature selection, structure learning, tuning and confidence quality."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Any, Sequence

import numpy as np
import pandas as pd

from .afs import run_afs
from .artifacts import ArtifactWriter
from .config import BenchConfig, bench_config_to_dict
from .crv import bootstrap_graphs, default_block_len, edge_confidences
from .dataset import Dataset
from .discovery import run_discovery
from .errors import AutoCDError
from .graph import MixedGraph, latent_projection, markov_boundary
from .learner import predict
from .metrics import adjacency_pr, delta_r2, edge_confidence_auc, set_pr, shd
from .models import ClConfig, GroundTruth, RunSummary
from .oct import oct_select
from .pipeline import resolve_knowledge, restrict_to_boundary
from .seeding import derive_seed
from .sim import lag_embed, random_lagged_dag, resimulate_fit, simulate_ts, true_marginal

logger = logging.getLogger(__name__)


def true_prediction(gt: GroundTruth, d: Dataset) -> np.ndarray:
    """The generating linear model's prediction of the target on embedded rows."""
    terms = [(p, w) for (p, child), w in gt.coefficients.items() if child == gt.target]
    out = np.zeros(d.n_rows)
    for parent, weight in terms:
        out += weight * d.values(parent)
    return out


def _afs_row(
    cfg: BenchConfig, gt: GroundTruth, train: Dataset, test: Dataset, seed: int
) -> tuple[dict[str, Any], list[str] | None]:
    true_mb = sorted(markov_boundary(gt.lagged_dag, gt.target))
    try:
        result = run_afs(train, gt.target, cfg.afs.grid(), test, k=cfg.afs.k, seed=seed, ci=cfg.afs.ci)
    except AutoCDError as exc:
        logger.warning("afs failed: %s", exc)
        return {"mb_precision": None, "mb_recall": None, "delta_r2": None, "flag": "afs_failed"}, None
    precision, recall, flag = set_pr(result.mb_est, true_mb)
    assert result.final_model is not None
    est = predict(result.final_model, test).values
    dr2 = delta_r2(test.values(gt.target), true_prediction(gt, test), est)
    row = {
        "mb_precision": precision,
        "mb_recall": recall,
        "delta_r2": dr2,
        "mb_size": len(result.mb_est),
        "true_mb_size": len(true_mb),
        "flag": flag,
    }
    return row, result.mb_est


def _graphs_for(d: Dataset, configs: Sequence[ClConfig]) -> list[MixedGraph | None]:
    graphs: list[MixedGraph | None] = []
    for cfg in configs:
        try:
            graphs.append(run_discovery(d, cfg))
        except AutoCDError as exc:
            logger.warning("%s failed on full data: %s", cfg.label, exc)
            graphs.append(None)
    return graphs


def run_replicate(cfg: BenchConfig, n_vars: int, rep: int) -> dict[str, list[dict[str, Any]]]:
    spec = cfg.sim_spec(n_vars, rep)
    seed = derive_seed(cfg.seed, "bench", n_vars, rep)
    gt = random_lagged_dag(spec)
    embedded = lag_embed(simulate_ts(gt), spec.max_lag)
    train, test = embedded.split(cfg.holdout)
    key = {"n_vars": n_vars, "rep": rep}
    out: dict[str, list[dict[str, Any]]] = {"afs": [], "cl": [], "tuning": [], "confidence": []}

    afs_row, mb_est = _afs_row(cfg, gt, train, test, seed)
    out["afs"].append({**key, **afs_row})
    data = restrict_to_boundary(train, gt.target, mb_est) if mb_est else train
    truth = true_marginal(gt, data.columns)
    configs = cfg.cl.configs(resolve_knowledge(cfg.cl, data))
    try:
        report = oct_select(
            data,
            configs,
            k=cfg.oct.k,
            b=cfg.oct.b,
            alpha=cfg.oct.alpha,
            seed=seed,
            n_trees=cfg.oct.n_trees,
            n_jobs=cfg.oct.n_jobs,
            target=gt.target,
        )
    except AutoCDError as exc:
        logger.warning("oct failed on n=%d rep=%d: %s", n_vars, rep, exc)
        out["tuning"].append({**key, "delta_shd_oct": None, "delta_shd_random": None, "flag": "oct_failed"})
        return out

    graphs = _graphs_for(data, configs)
    graphs[report.winner_index] = report.winner_graph
    distances: list[int] = []
    for idx, (config, g) in enumerate(zip(configs, graphs)):
        if g is None:
            continue
        precision, recall, flag = adjacency_pr(g, truth)
        distance = shd(g, truth)
        distances.append(distance)
        out["cl"].append(
            {
                **key,
                "config": config.label,
                "adj_precision": precision,
                "adj_recall": recall,
                "shd": distance,
                "is_winner": idx == report.winner_index,
                "flag": flag,
            }
        )
    best = min(distances)
    out["tuning"].append(
        {
            **key,
            "delta_shd_oct": shd(report.winner_graph, truth) - best,
            "delta_shd_random": float(np.mean(distances)) - best,
            "flag": None,
        }
    )

    if cfg.bootstrap.enabled:
        try:
            population = bootstrap_graphs(
                data,
                report.winner,
                cfg.bootstrap.n_boot,
                block_len=cfg.bootstrap.block_len or default_block_len(spec.max_lag),
                seed=seed,
                n_jobs=cfg.bootstrap.n_jobs,
            )
            confidences = edge_confidences(report.winner_graph, population)
            auc, flag = edge_confidence_auc(confidences, truth)
        except AutoCDError as exc:
            logger.warning("bootstrap failed on n=%d rep=%d: %s", n_vars, rep, exc)
            auc, flag = None, "bootstrap_failed"
        out["confidence"].append({**key, "auc": auc, "flag": flag})
    return out


def _summary(tables: dict[str, pd.DataFrame]) -> dict[str, Any]:
    summary: dict[str, Any] = {}
    for name, frame in tables.items():
        if frame.empty:
            continue
        numeric = frame.drop(columns=["rep"], errors="ignore").select_dtypes(include="number")
        if "n_vars" not in numeric:
            continue
        means = numeric.groupby("n_vars").mean()
        summary[name] = {
            str(n): {k: (None if pd.isna(v) else float(v)) for k, v in row.items()}
            for n, row in means.iterrows()
        }
    return summary


def run_benchmark(cfg: BenchConfig) -> RunSummary:
    writer = ArtifactWriter(Path(cfg.out_dir), cfg.config_hash())
    writer.write_json("config.json", bench_config_to_dict(cfg))
    writer.write_environment()
    rows: dict[str, list[dict[str, Any]]] = {"afs": [], "cl": [], "tuning": [], "confidence": []}
    for n_vars in cfg.node_counts:
        for rep in range(cfg.replicates):
            logger.info("bench replicate n_vars=%d rep=%d", n_vars, rep)
            for name, part in run_replicate(cfg, n_vars, rep).items():
                rows[name].extend(part)
    tables = {name: pd.DataFrame(part) for name, part in rows.items()}
    for name, frame in tables.items():
        writer.write_table(f"{name}.csv", frame)
    summary = _summary(tables)
    writer.write_json("summary.json", summary)
    return RunSummary(success=True, run_dir=writer.run_dir, stages={"bench": "ok"}, extra={"summary": summary})


def run_resimulation(
    d: Dataset,
    g: MixedGraph,
    sizes: Sequence[int] = (1000, 3000, 5000),
    target: str | None = None,
    cfg: BenchConfig | None = None,
    seed: int = 0,
) -> pd.DataFrame:
    """Known-structure evaluation on data resimulated from a graph fitted to ``d``."""
    settings = cfg or BenchConfig(seed=seed)
    generator = resimulate_fit(d, g)
    rows = []
    for size in sizes:
        sample = generator.sample(size, seed=derive_seed(seed, "resim", size))
        row: dict[str, Any] = {"n_samples": size}
        data = sample
        if target is not None:
            train, test = sample.split(max(1, size // 5))
            true_mb = sorted(markov_boundary(g, target))
            try:
                result = run_afs(train, target, settings.afs.grid(), test, k=settings.afs.k, seed=seed)
                row["mb_precision"], row["mb_recall"], row["mb_flag"] = set_pr(result.mb_est, true_mb)
                data = restrict_to_boundary(sample, target, result.mb_est)
            except AutoCDError as exc:
                logger.warning("afs failed at n=%d: %s", size, exc)
                row["mb_flag"] = "afs_failed"
        truth = g if len(data.columns) == len(g) else latent_projection(g, data.columns)
        try:
            report = oct_select(
                data,
                settings.cl.configs(),
                k=settings.oct.k,
                b=settings.oct.b,
                alpha=settings.oct.alpha,
                seed=seed,
                n_trees=settings.oct.n_trees,
                target=target,
            )
        except AutoCDError as exc:
            logger.warning("oct failed at n=%d: %s", size, exc)
            row["adj_flag"] = "oct_failed"
            rows.append(row)
            continue
        row["adj_precision"], row["adj_recall"], row["adj_flag"] = adjacency_pr(report.winner_graph, truth)
        row["winner"] = report.winner.label
        if settings.bootstrap.enabled:
            try:
                population = bootstrap_graphs(data, report.winner, settings.bootstrap.n_boot, seed=seed)
                row["auc"], row["auc_flag"] = edge_confidence_auc(
                    edge_confidences(report.winner_graph, population), truth
                )
            except AutoCDError as exc:
                logger.warning("bootstrap failed at n=%d: %s", size, exc)
                row["auc_flag"] = "bootstrap_failed"
        rows.append(row)
    return pd.DataFrame(rows)
