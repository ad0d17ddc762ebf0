from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Any

from .afs import estimate_markov_order, run_afs
from .artifacts import ArtifactWriter
from .bench import run_benchmark, run_resimulation
from .config import (
    PipelineConfig,
    load_bench_config,
    load_pipeline_config,
    load_sim_spec,
    pipeline_config_from_mapping,
)
from .crv import (
    EXPORT_FORMATS,
    QUERY_KINDS,
    answer_query,
    bootstrap_graphs,
    default_block_len,
    edge_confidences,
    export_graph,
    parse_graph,
)
from .dataset import Dataset, load_csv, write_csv
from .discovery import run_discovery
from .errors import ConfigError, InputError
from .graph import Edge, MixedGraph, node_id, to_json
from .models import ClConfig, EdgeConfidence, RunSummary
from .oct import oct_select
from .pipeline import resolve_knowledge, run_pipeline
from .sim import ground_truth_to_json, lag_embed, random_lagged_dag, simulate_ts

GRAPH_FORMATS = {".json": "json", ".cyjs": "cytoscape_json", ".graphml": "graphml"}
LOG_FORMAT = "%(levelname)s %(name)s: %(message)s"


def _print_payload(payload: dict[str, Any], as_json: bool) -> None:
    if as_json:
        print(json.dumps(payload, indent=2, sort_keys=True))
        return
    for key, value in payload.items():
        print(f"{key}={value}")


def _configure_logging(verbosity: int) -> None:
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity >= 2:
        level = logging.DEBUG
    logging.basicConfig(level=level, stream=sys.stderr, format=LOG_FORMAT, force=True)


def _summary_payload(summary: RunSummary) -> dict[str, Any]:
    payload: dict[str, Any] = {
        "success": summary.success,
        "run_dir": str(summary.run_dir),
        "stages": summary.stages,
    }
    if summary.result is not None:
        payload["winner"] = summary.result.oct.winner.label
        payload["n_edges"] = summary.result.winner_graph.n_edges
        if summary.result.afs is not None:
            payload["mb_est"] = summary.result.afs.mb_est
    if summary.extra.get("errors"):
        payload["errors"] = summary.extra["errors"]
    return payload


def _pipeline_config(args: argparse.Namespace) -> PipelineConfig:
    if args.config:
        cfg = load_pipeline_config(args.config, seed=args.seed, out_dir=args.out)
    else:
        if not args.data:
            raise ConfigError("pass a data CSV or --config")
        mapping = {"data_path": args.data, "seed": args.seed, "out_dir": args.out or "runs"}
        cfg = pipeline_config_from_mapping(mapping)
    if args.data:
        cfg = replace(cfg, data_path=args.data)
    if getattr(args, "target", None):
        cfg = replace(cfg, target=args.target)
    if getattr(args, "max_lag", None) is not None:
        cfg = replace(cfg, max_lag=args.max_lag if args.max_lag == "auto" else int(args.max_lag))
    return cfg


def _load_data(cfg: PipelineConfig) -> tuple[Dataset, str | None, int | None]:
    d = load_csv(cfg.data_path, cfg.schema_path)
    target = cfg.target
    if target is not None and target not in d.columns:
        raise ConfigError(f"target column {target!r} not in {cfg.data_path}")
    lag: int | None = None
    if cfg.max_lag == "auto":
        if target is None:
            raise ConfigError("max_lag 'auto' needs a target")
        lag, _ = estimate_markov_order(d, target, cfg.max_markov_order, cfg.afs.grid(), k=cfg.afs.k, seed=cfg.seed)
    elif isinstance(cfg.max_lag, int):
        lag = cfg.max_lag
    if lag is None:
        return d, target, None
    return lag_embed(d, lag), None if target is None else node_id(target, 0), lag


def _cl_config(args: argparse.Namespace, cfg: PipelineConfig, d: Dataset) -> ClConfig:
    return ClConfig(
        algorithm=args.algorithm or cfg.cl.algorithms[0],
        alpha=cfg.cl.alphas[0] if args.alpha is None else args.alpha,
        ci=args.ci or cfg.cl.ci,
        max_cond_size=cfg.cl.max_cond_size,
        knowledge=resolve_knowledge(cfg.cl, d),
    )


def _graph_format(path: Path, explicit: str | None) -> str:
    if explicit:
        return explicit
    fmt = GRAPH_FORMATS.get(path.suffix.lower())
    if fmt is None:
        raise InputError(f"cannot infer graph format of {path}; pass --format")
    return fmt


def _read_graph(path_arg: str, fmt: str | None) -> MixedGraph:
    path = Path(path_arg)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise InputError(f"cannot read graph {path}: {exc}") from exc
    return parse_graph(raw, _graph_format(path, fmt), str(path))


def _read_confidences(path_arg: str) -> list[EdgeConfidence]:
    payload = json.loads(Path(path_arg).read_text(encoding="utf-8"))
    return [
        EdgeConfidence(
            edge=Edge(row["a"], row["b"], row["mark_a"], row["mark_b"]),
            exact_freq=float(row["exact_freq"]),
            consistency_freq=float(row["consistency_freq"]),
            n_boot=int(row["n_boot"]),
        )
        for row in payload.get("edges", [])
    ]


def _cmd_simulate(args: argparse.Namespace) -> int:
    spec = load_sim_spec(args.config, seed=args.seed)
    gt = random_lagged_dag(spec)
    ts = simulate_ts(gt)
    out = Path(args.out or ".")
    csv_path, schema_path = write_csv(ts, out / "data.csv")
    truth_path = out / "truth.json"
    truth_path.write_text(ground_truth_to_json(gt), encoding="utf-8")
    payload = {
        "data": str(csv_path),
        "schema": str(schema_path),
        "truth": str(truth_path),
        "rows": ts.n_rows,
        "target": gt.target,
    }
    _print_payload(payload, args.json)
    return 0


def _cmd_run(args: argparse.Namespace) -> int:
    summary = run_pipeline(_pipeline_config(args))
    _print_payload(_summary_payload(summary), args.json)
    return 0 if summary.success else 2


def _cmd_afs(args: argparse.Namespace) -> int:
    cfg = _pipeline_config(args)
    d, target, _ = _load_data(cfg)
    if target is None:
        raise ConfigError("afs needs a target (--target or config)")
    result = run_afs(d, target, cfg.afs.grid(), k=cfg.afs.k, seed=cfg.seed, ci=cfg.afs.ci)
    writer = ArtifactWriter(Path(cfg.out_dir), cfg.config_hash())
    path = writer.write_json("afs.json", {"status": "ok", **result.to_dict()})
    payload = {
        "target": target,
        "mb_est": result.mb_est,
        "winner": result.winner.label,
        "cv_score": result.cv_score,
        "metric": result.metric,
        "artifact": str(path),
    }
    _print_payload(payload, args.json)
    return 0


def _cmd_discover(args: argparse.Namespace) -> int:
    cfg = _pipeline_config(args)
    d, _, _ = _load_data(cfg)
    cl = _cl_config(args, cfg, d)
    g = run_discovery(d, cl)
    writer = ArtifactWriter(Path(cfg.out_dir), cfg.config_hash())
    path = writer.write_text(f"graph-{cl.algorithm}.json", to_json(g, {"config": cl.to_dict()}))
    _print_payload({"config": cl.label, "kind": g.kind.value, "n_edges": g.n_edges, "graph": str(path)}, args.json)
    return 0


def _cmd_oct(args: argparse.Namespace) -> int:
    cfg = _pipeline_config(args)
    d, target, _ = _load_data(cfg)
    report = oct_select(
        d,
        cfg.cl.configs(resolve_knowledge(cfg.cl, d)),
        k=cfg.oct.k,
        b=cfg.oct.b,
        alpha=cfg.oct.alpha,
        seed=cfg.seed,
        n_trees=cfg.oct.n_trees,
        n_jobs=cfg.oct.n_jobs,
        target=target,
    )
    writer = ArtifactWriter(Path(cfg.out_dir), cfg.config_hash())
    writer.write_json("oct.json", {"status": "ok", **report.to_dict(include_scores=True)})
    path = writer.write_text("winner_graph.json", to_json(report.winner_graph))
    payload = {
        "best": report.best_config.label,
        "winner": report.winner.label,
        "indistinguishable": [report.per_config[i].config.label for i in report.indistinguishable],
        "n_edges": report.winner_graph.n_edges,
        "graph": str(path),
    }
    _print_payload(payload, args.json)
    return 0


def _cmd_bootstrap(args: argparse.Namespace) -> int:
    cfg = _pipeline_config(args)
    d, _, lag = _load_data(cfg)
    cl = _cl_config(args, cfg, d)
    winner = _read_graph(args.graph, args.format) if args.graph else run_discovery(d, cl)
    block = cfg.bootstrap.block_len
    if block is None and lag is not None:
        block = default_block_len(lag)
    population = bootstrap_graphs(
        d, cl, cfg.bootstrap.n_boot, block_len=block, seed=cfg.seed, n_jobs=cfg.bootstrap.n_jobs
    )
    confidences = edge_confidences(winner, population)
    writer = ArtifactWriter(Path(cfg.out_dir), cfg.config_hash())
    path = writer.write_json(
        "confidences.json",
        {
            "status": "ok",
            "config": cl.to_dict(),
            "n_boot": len(population),
            "n_failed": population.n_failed,
            "edges": [c.to_dict() for c in confidences],
        },
    )
    payload = {
        "n_boot": len(population),
        "n_failed": population.n_failed,
        "n_edges": len(confidences),
        "confidences": str(path),
    }
    _print_payload(payload, args.json)
    return 0


def _cmd_query(args: argparse.Namespace) -> int:
    g = _read_graph(args.graph, args.format)
    answer = answer_query(g, args.kind, args.a, args.b)
    if args.json:
        _print_payload(answer.to_dict(), True)
        return 0
    payload: dict[str, Any] = {"kind": answer.kind, "a": answer.a, "b": answer.b, "answer": answer.answer}
    if answer.witness is not None:
        payload["witness"] = str(answer.witness) if isinstance(answer.witness, Edge) else " ".join(answer.witness)
    _print_payload(payload, False)
    return 0


def _cmd_export(args: argparse.Namespace) -> int:
    g = _read_graph(args.graph, args.input_format)
    confidences = _read_confidences(args.confidences) if args.confidences else None
    data = export_graph(g, confidences, args.to, args.target)
    if not args.out:
        sys.stdout.write(data.decode("utf-8"))
        return 0
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_bytes(data)
    _print_payload({"format": args.to, "path": str(out), "bytes": len(data)}, args.json)
    return 0


def _cmd_bench(args: argparse.Namespace) -> int:
    cfg = load_bench_config(args.config, seed=args.seed, out_dir=args.out)
    if args.data or args.graph:
        if not (args.data and args.graph):
            raise ConfigError("resimulation needs both --data and --graph")
        table = run_resimulation(
            load_csv(args.data),
            _read_graph(args.graph, None),
            cfg.resim_sizes or (1000, 3000, 5000),
            target=args.target,
            cfg=cfg,
            seed=cfg.seed,
        )
        writer = ArtifactWriter(Path(cfg.out_dir), cfg.config_hash())
        path = writer.write_table("resim.csv", table)
        _print_payload({"rows": len(table), "table": str(path)}, args.json)
        return 0
    summary = run_benchmark(cfg)
    _print_payload({"success": summary.success, "run_dir": str(summary.run_dir)}, args.json)
    return 0 if summary.success else 2


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--json", action="store_true", help="Emit machine-readable JSON output")
    p.add_argument("-v", "--verbose", action="count", default=0, help="-v for info, -vv for debug logging")


def _add_data_args(p: argparse.ArgumentParser, target: bool = True) -> None:
    p.add_argument("data", nargs="?", help="CSV data file (overrides data_path from --config)")
    p.add_argument("--config", help="Pipeline config (.json or .yaml)")
    p.add_argument("--seed", type=int, help="Seed for every random stream")
    p.add_argument("--out", help="Output directory")
    p.add_argument("--max-lag", help="Lag window to embed, or 'auto'")
    if target:
        p.add_argument("--target", help="Target column")
    _add_common(p)


def _add_cl_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--algorithm", choices=["pc", "pc_stable", "cpc", "fci"], help="Structure learner")
    p.add_argument("--alpha", type=float, help="CI test significance level")
    p.add_argument("--ci", help="CI test: auto|fisher_z|g_squared|regression")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="autocd", description="Automated causal discovery")
    sub = parser.add_subparsers(dest="subcmd", required=True)

    sim_p = sub.add_parser("simulate", help="Generate a lagged time series and its ground truth")
    sim_p.add_argument("--config", required=True, help="Simulation spec (.json or .yaml)")
    sim_p.add_argument("--seed", type=int, help="Override the simulation seed")
    sim_p.add_argument("--out", help="Output directory for data.csv and truth.json")
    _add_common(sim_p)
    sim_p.set_defaults(func=_cmd_simulate)

    run_p = sub.add_parser("run", help="Run the full pipeline and write a run directory")
    _add_data_args(run_p)
    run_p.set_defaults(func=_cmd_run)

    afs_p = sub.add_parser("afs", help="Select the Markov boundary of the target")
    _add_data_args(afs_p)
    afs_p.set_defaults(func=_cmd_afs)

    disc_p = sub.add_parser("discover", help="Learn one graph with a single configuration")
    _add_data_args(disc_p, target=False)
    _add_cl_args(disc_p)
    disc_p.set_defaults(func=_cmd_discover)

    oct_p = sub.add_parser("oct", help="Tune the structure learner configuration out of sample")
    _add_data_args(oct_p)
    oct_p.set_defaults(func=_cmd_oct)

    boot_p = sub.add_parser("bootstrap", help="Edge confidences from bootstrap replicates")
    _add_data_args(boot_p, target=False)
    _add_cl_args(boot_p)
    boot_p.add_argument("--graph", help="Graph to score (default: learned on the full data)")
    boot_p.add_argument("--format", choices=sorted(set(GRAPH_FORMATS.values())), help="Format of --graph")
    boot_p.set_defaults(func=_cmd_bootstrap)

    query_p = sub.add_parser("query", help="Ask an edge or path question of a graph file")
    query_p.add_argument("graph", help="Graph file (.json, .cyjs or .graphml)")
    query_p.add_argument("kind", choices=QUERY_KINDS)
    query_p.add_argument("a")
    query_p.add_argument("b")
    query_p.add_argument("--format", choices=sorted(set(GRAPH_FORMATS.values())), help="Graph file format")
    _add_common(query_p)
    query_p.set_defaults(func=_cmd_query)

    export_p = sub.add_parser("export", help="Convert a graph file for visualization tools")
    export_p.add_argument("graph", help="Graph file (.json, .cyjs or .graphml)")
    export_p.add_argument("--to", choices=EXPORT_FORMATS, default="cytoscape_json", help="Output format")
    export_p.add_argument("--input-format", choices=sorted(set(GRAPH_FORMATS.values())), help="Input format")
    export_p.add_argument("--confidences", help="confidences.json from a bootstrap run")
    export_p.add_argument("--target", help="Node to mark as the target")
    export_p.add_argument("--out", help="Output file (default: stdout)")
    _add_common(export_p)
    export_p.set_defaults(func=_cmd_export)

    bench_p = sub.add_parser("bench", help="Run the synthetic benchmark, or resimulate from a fitted graph")
    bench_p.add_argument("--config", help="Bench config (.json or .yaml)")
    bench_p.add_argument("--seed", type=int, help="Benchmark seed")
    bench_p.add_argument("--out", help="Output directory")
    bench_p.add_argument("--data", help="Real data CSV for resimulation")
    bench_p.add_argument("--graph", help="DAG fitted to --data, for resimulation")
    bench_p.add_argument("--target", help="Target for resimulation feature selection")
    _add_common(bench_p)
    bench_p.set_defaults(func=_cmd_bench)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _configure_logging(args.verbose)
    try:
        return int(args.func(args))
    except KeyboardInterrupt:
        print("Interrupted", file=sys.stderr)
        return 130
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
