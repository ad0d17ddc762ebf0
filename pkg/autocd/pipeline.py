from __future__ import annotations

import logging
import time
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Iterator

from . import __version__
from .afs import estimate_markov_order, run_afs
from .artifacts import VOLATILE_FILES, ArtifactWriter
from .config import ClSettings, PipelineConfig, pipeline_config_to_dict
from .crv import (
    bootstrap_graphs,
    causal_ancestors,
    default_block_len,
    edge_confidences,
    export_graph,
    target_neighbors,
)
from .dataset import Dataset, load_csv
from .discovery import check_knowledge, load_knowledge, tier_knowledge
from .errors import AutoCDError, ConfigError
from .graph import node_id, to_json
from .learner import save_model
from .models import AfsResult, CausalRunResult, EdgeConfidence, Knowledge, OctReport, RunSummary
from .oct import oct_select
from .provenance import build_manifest, input_records, manifest_sha256
from .sim import lag_embed

logger = logging.getLogger(__name__)

STAGES = ("lag_embed", "afs", "restrict", "oct", "bootstrap", "confidences", "export")
EXTENSIONS = {"graphml": "graphml", "cytoscape_json": "cyjs", "dot_like_text": "dot", "json": "json"}


def restrict_to_boundary(d: Dataset, target: str, mb_est: list[str]) -> Dataset:
    """Keep the target and the boundary, with every lagged copy of a selected variable."""
    meta = d.lag_meta
    if not meta:
        keep = {target, *mb_est}
        return d.select([c for c in d.columns if c in keep])
    variables = {meta[c].variable for c in (target, *mb_est)}
    return d.select([c for c in d.columns if meta[c].variable in variables])


def resolve_knowledge(cl: ClSettings, d: Dataset) -> Knowledge | None:
    """A knowledge file wins over tier knowledge derived from lag metadata."""
    if cl.knowledge_path:
        k = load_knowledge(cl.knowledge_path)
        check_knowledge(k, d.columns)
        return k
    if cl.tier_knowledge:
        return tier_knowledge(d)
    return None


def holdout_rows(holdout: float, n: int) -> int:
    if holdout <= 0:
        return 0
    rows = int(round(holdout * n)) if holdout < 1 else int(holdout)
    if rows >= n:
        raise ConfigError(f"holdout of {rows} rows leaves no training data ({n} rows)")
    return rows


class PipelineController:
    def __init__(self, config: PipelineConfig) -> None:
        self.config = config
        self.stages: dict[str, str] = dict.fromkeys(STAGES, "pending")
        self.timings: dict[str, float] = {}
        self.errors: dict[str, str] = {}

    @contextmanager
    def _stage(self, name: str) -> Iterator[None]:
        started = time.perf_counter()
        try:
            yield
        except AutoCDError as exc:
            self.stages[name] = "failed"
            self.errors[name] = str(exc)
            logger.error("stage %s failed: %s", name, exc)
        else:
            self.stages[name] = "ok"
        finally:
            self.timings[name] = round(time.perf_counter() - started, 3)

    def _skip_rest(self) -> None:
        for name, status in self.stages.items():
            if status == "pending":
                self.stages[name] = "skipped"

    def _load(self) -> tuple[Dataset, Dataset | None]:
        cfg = self.config
        d = load_csv(cfg.data_path, cfg.schema_path)
        if cfg.target is not None and cfg.target not in d.columns:
            raise ConfigError(f"target column {cfg.target!r} not in {cfg.data_path}")
        n_test = holdout_rows(cfg.holdout, d.n_rows)
        if n_test:
            train, test = d.split(n_test)
            return train, test
        return d, None

    def run(self) -> RunSummary:
        cfg = self.config
        d, d_test = self._load()
        writer = ArtifactWriter(Path(cfg.out_dir), cfg.config_hash())
        writer.write_json("config.json", pipeline_config_to_dict(cfg))
        writer.write_environment({"autocd": __version__})
        started_at = time.time()

        target = cfg.target
        lag: int | None = None
        afs_result: AfsResult | None = None
        report: OctReport | None = None
        confidences: list[EdgeConfidence] = []
        n_boot_failed = 0
        data = d

        with self._stage("lag_embed"):
            if cfg.max_lag == "auto":
                assert target is not None
                lag, scores = estimate_markov_order(
                    d, target, cfg.max_markov_order, cfg.afs.grid(), k=cfg.afs.k, seed=cfg.seed
                )
                writer.write_json("markov_order.json", {"status": "ok", "order": lag, "scores": scores})
            elif isinstance(cfg.max_lag, int):
                lag = cfg.max_lag
            if lag is not None:
                data = lag_embed(d, lag)
                d_test = lag_embed(d_test, lag) if d_test is not None else None
                if target is not None:
                    target = node_id(target, 0)
        if self.stages["lag_embed"] == "failed":
            return self._finish(writer, started_at, None)
        if lag is None:
            self.stages["lag_embed"] = "skipped"

        with self._stage("afs"):
            if target is not None and cfg.afs.enabled:
                afs_result = run_afs(
                    data, target, cfg.afs.grid(), d_test, k=cfg.afs.k, seed=cfg.seed, ci=cfg.afs.ci
                )
                writer.write_json("afs.json", {"status": "ok", **afs_result.to_dict()})
                if afs_result.final_model is not None:
                    save_model(afs_result.final_model, writer.path("afs_model.joblib"))
        if target is None or not cfg.afs.enabled:
            self.stages["afs"] = "skipped"
        if self.stages["afs"] == "failed":
            return self._finish(writer, started_at, None)

        with self._stage("restrict"):
            if afs_result is not None and target is not None:
                data = restrict_to_boundary(data, target, afs_result.mb_est)
            writer.write_json("restricted_columns.json", {"status": "ok", "columns": data.columns})

        with self._stage("oct"):
            knowledge = resolve_knowledge(cfg.cl, data)
            report = oct_select(
                data,
                cfg.cl.configs(knowledge),
                k=cfg.oct.k,
                b=cfg.oct.b,
                alpha=cfg.oct.alpha,
                seed=cfg.seed,
                n_trees=cfg.oct.n_trees,
                n_jobs=cfg.oct.n_jobs,
                target=target,
            )
            writer.write_json("oct.json", {"status": "ok", **report.to_dict(include_scores=True)})
            writer.write_text("winner_graph.json", to_json(report.winner_graph))
        if report is None:
            return self._finish(writer, started_at, None)

        with self._stage("bootstrap"):
            if cfg.bootstrap.enabled:
                block = cfg.bootstrap.block_len
                if block is None and lag is not None:
                    block = default_block_len(lag)
                population = bootstrap_graphs(
                    data,
                    report.winner,
                    cfg.bootstrap.n_boot,
                    block_len=block,
                    seed=cfg.seed,
                    n_jobs=cfg.bootstrap.n_jobs,
                )
                n_boot_failed = population.n_failed
                with self._stage("confidences"):
                    confidences = edge_confidences(report.winner_graph, population)
                    writer.write_json(
                        "confidences.json",
                        {
                            "status": "ok",
                            "n_boot": len(population),
                            "n_failed": population.n_failed,
                            "edges": [c.to_dict() for c in confidences],
                        },
                    )
        if not cfg.bootstrap.enabled:
            self.stages["bootstrap"] = "skipped"
        if self.stages["confidences"] == "pending":
            self.stages["confidences"] = "skipped"

        with self._stage("export"):
            for fmt in cfg.export.formats:
                ext = EXTENSIONS.get(fmt, fmt)
                writer.write_bytes(f"graph.{ext}", export_graph(report.winner_graph, confidences, fmt, target))
            if target is not None and report.winner_graph.has_node(target):
                writer.write_json(
                    "target.json",
                    {
                        "status": "ok",
                        "target": target,
                        "neighbors": target_neighbors(report.winner_graph, target),
                        "ancestors": causal_ancestors(report.winner_graph, target),
                        "possible_ancestors": causal_ancestors(report.winner_graph, target, potentially=True),
                    },
                )

        result = CausalRunResult(
            target=target,
            afs=afs_result,
            oct=report,
            winner_graph=report.winner_graph,
            confidences=confidences,
            n_boot_failed=n_boot_failed,
        )
        return self._finish(writer, started_at, result)

    def _finish(self, writer: ArtifactWriter, started_at: float, result: CausalRunResult | None) -> RunSummary:
        self._skip_rest()
        cfg = self.config
        files = build_manifest(writer.run_dir, writer.written, skip=VOLATILE_FILES)
        success = all(status in ("ok", "skipped") for status in self.stages.values())
        manifest: dict[str, Any] = {
            "autocd": __version__,
            "config_hash": cfg.config_hash(),
            "seed": cfg.seed,
            "success": success,
            "stages": {
                name: {
                    "status": status,
                    "seconds": self.timings.get(name),
                    "error": self.errors.get(name),
                }
                for name, status in self.stages.items()
            },
            "inputs": input_records([cfg.data_path, cfg.schema_path, cfg.cl.knowledge_path]),
            "artifacts": files,
            "artifacts_sha256": manifest_sha256(files),
            "started_at_unix": started_at,
            "finished_at_unix": time.time(),
        }
        writer.write_json("manifest.json", manifest)
        return RunSummary(
            success=success,
            run_dir=writer.run_dir,
            stages=dict(self.stages),
            result=result,
            extra={"errors": dict(self.errors), "artifacts_sha256": manifest["artifacts_sha256"]},
        )


def run_pipeline(config: PipelineConfig) -> RunSummary:
    return PipelineController(config).run()
