from __future__ import annotations

import io
import json
import logging
import math
from typing import Any, Callable, Sequence

import networkx as nx
import numpy as np
from joblib import Parallel, delayed

from .dataset import Dataset
from .discovery import run_discovery
from .errors import AutoCDError, DiscoveryError, GraphFormatError, InputError
from .graph import (
    Edge,
    GraphKind,
    Mark,
    MixedGraph,
    Node,
    any_path,
    directed_path,
    edge_between,
    from_json,
    path_edges,
    potentially_directed_path,
    to_json,
)
from .models import BootstrapPopulation, ClConfig, EdgeConfidence, QueryAnswer
from .seeding import stream

logger = logging.getLogger(__name__)

# Given the data and a generator, returns the row indices of one replicate.
Resampler = Callable[[Dataset, np.random.Generator], np.ndarray]

QUERY_KINDS = ("edge", "directed_path", "potentially_directed_path", "any_path")
EXPORT_FORMATS = ("graphml", "cytoscape_json", "dot_like_text", "json")


def default_block_len(max_lag: int) -> int:
    return 2 * (max_lag + 1)


def iid_rows(d: Dataset, rng: np.random.Generator) -> np.ndarray:
    return rng.integers(0, d.n_rows, size=d.n_rows)


def block_rows(d: Dataset, rng: np.random.Generator, block_len: int) -> np.ndarray:
    """Moving-block bootstrap: contiguous blocks drawn with replacement, cut to n rows."""
    n = d.n_rows
    length = max(1, min(block_len, n))
    n_blocks = math.ceil(n / length)
    starts = rng.integers(0, n - length + 1, size=n_blocks)
    rows = np.concatenate([np.arange(s, s + length) for s in starts])
    return rows[:n]


def _replicate(d: Dataset, cfg: ClConfig, rows: np.ndarray, idx: int) -> MixedGraph | None:
    try:
        return run_discovery(d.take(rows), cfg)
    except AutoCDError as exc:
        logger.warning("bootstrap replicate %d failed: %s", idx, exc)
        return None


def bootstrap_graphs(
    d: Dataset,
    cfg: ClConfig,
    n_boot: int,
    block_len: int | None = None,
    seed: int = 0,
    resample: Resampler | None = None,
    n_jobs: int = 1,
) -> BootstrapPopulation:
    if n_boot < 1:
        raise InputError("n_boot must be >= 1")
    if block_len is not None and block_len < 1:
        raise InputError("block_len must be >= 1")
    draws: list[np.ndarray] = []
    for i in range(n_boot):
        rng = stream(seed, "bootstrap", i)
        if resample is not None:
            draws.append(np.asarray(resample(d, rng)))
        elif block_len is not None:
            draws.append(block_rows(d, rng, block_len))
        else:
            draws.append(iid_rows(d, rng))
    results = Parallel(n_jobs=n_jobs)(
        delayed(_replicate)(d, cfg, rows, i) for i, rows in enumerate(draws)
    )
    graphs = [g for g in results if g is not None]
    failed = n_boot - len(graphs)
    if not graphs:
        raise DiscoveryError("every bootstrap replicate failed", {"n_boot": n_boot})
    logger.info("bootstrap: %d graphs, %d failed", len(graphs), failed)
    return BootstrapPopulation(graphs=graphs, n_requested=n_boot, n_failed=failed)


def marks_compatible(m1: Mark, m2: Mark) -> bool:
    return m1 is m2 or m1 is Mark.CIRCLE or m2 is Mark.CIRCLE


def edge_consistent(e: Edge, other: Edge) -> bool:
    if e.pair != other.pair:
        return False
    return marks_compatible(e.mark_a, other.mark_at(e.a)) and marks_compatible(
        e.mark_b, other.mark_at(e.b)
    )


def edge_confidences(winner: MixedGraph, population: Sequence[MixedGraph]) -> list[EdgeConfidence]:
    graphs = list(population)
    if not graphs:
        raise InputError("edge confidences need a nonempty population")
    ids = set(winner.node_ids)
    for g in graphs:
        if set(g.node_ids) != ids:
            raise InputError("population graphs must share the winner's node set")
    out = []
    for e in winner.edges:
        exact = consistent = 0
        for g in graphs:
            found = g.edge_between(e.a, e.b)
            if found is None:
                continue
            if found == e:
                exact += 1
            if edge_consistent(e, found):
                consistent += 1
        conf = EdgeConfidence(
            edge=e,
            exact_freq=exact / len(graphs),
            consistency_freq=consistent / len(graphs),
            n_boot=len(graphs),
        )
        assert conf.consistency_freq >= conf.exact_freq
        out.append(conf)
    return out


def _witness_graph(g: MixedGraph, path: list[str]) -> MixedGraph:
    nodes = [g.node(n) for n in g.sort_ids(path)]
    return MixedGraph(nodes, path_edges(g, path), g.kind, validate=False)


def answer_query(g: MixedGraph, kind: str, a: str, b: str) -> QueryAnswer:
    if kind not in QUERY_KINDS:
        raise InputError(f"unknown query kind {kind!r}; expected one of {', '.join(QUERY_KINDS)}")
    g.require(a, b)
    if a == b:
        raise InputError("query endpoints must differ")
    if kind == "edge":
        e = edge_between(g, a, b)
        if e is None:
            return QueryAnswer(kind=kind, a=a, b=b, answer=False)
        e = e.oriented(a)
        return QueryAnswer(kind=kind, a=a, b=b, answer=True, witness=e, subgraph=_witness_graph(g, [a, b]))
    finder = {
        "directed_path": directed_path,
        "potentially_directed_path": potentially_directed_path,
        "any_path": any_path,
    }[kind]
    path = finder(g, a, b)
    if path is None:
        return QueryAnswer(kind=kind, a=a, b=b, answer=False)
    return QueryAnswer(kind=kind, a=a, b=b, answer=True, witness=path, subgraph=_witness_graph(g, path))


def causal_ancestors(g: MixedGraph, target: str, potentially: bool = False) -> list[str]:
    """Nodes with a (potentially) directed path into the target, in node order."""
    g.require(target)
    finder = potentially_directed_path if potentially else directed_path
    return [v for v in g.node_ids if v != target and finder(g, v, target) is not None]


def target_neighbors(g: MixedGraph, target: str) -> dict[str, list[str]]:
    """Neighbours grouped by edge symbol read from the target's side."""
    g.require(target)
    groups: dict[str, list[str]] = {}
    for v in g.adjacent(target):
        e = g.edge_between(target, v)
        assert e is not None
        groups.setdefault(e.oriented(target).symbol, []).append(v)
    return groups


def _roles(g: MixedGraph, target: str | None) -> dict[str, str]:
    roles = {n: "node" for n in g.node_ids}
    if target is not None and g.has_node(target):
        roles[target] = "target"
        for v in g.adjacent(target):
            roles[v] = "neighbor"
    return roles


def _tiers(g: MixedGraph) -> dict[str, int]:
    lags = sorted({n.lag for n in g.nodes if n.lag is not None}, reverse=True)
    rank = {lag: i for i, lag in enumerate(lags)}
    return {n.id: rank.get(n.lag, 0) if n.lag is not None else 0 for n in g.nodes}


def _node_attrs(node: Node, role: str, tier: int) -> dict[str, Any]:
    attrs: dict[str, Any] = {"label": node.display, "role": role, "tier": tier}
    if node.variable is not None:
        attrs["variable"] = node.variable
    if node.lag is not None:
        attrs["lag"] = node.lag
    return attrs


def _edge_attrs(e: Edge, conf: EdgeConfidence | None) -> dict[str, Any]:
    attrs: dict[str, Any] = {
        "marks": e.symbol,
        "mark_source": e.mark_a.value,
        "mark_target": e.mark_b.value,
    }
    if conf is not None:
        attrs["consistency"] = conf.consistency_freq
        attrs["weight"] = conf.consistency_freq
        attrs["exact_freq"] = conf.exact_freq
    return attrs


def to_networkx(
    g: MixedGraph,
    confidences: Sequence[EdgeConfidence] | None = None,
    target: str | None = None,
) -> nx.DiGraph:
    by_edge = {c.edge: c for c in confidences or ()}
    roles = _roles(g, target)
    tiers = _tiers(g)
    nxg = nx.DiGraph(kind=g.kind.value)
    for node in g.nodes:
        nxg.add_node(node.id, **_node_attrs(node, roles[node.id], tiers[node.id]))
    for e in g.edges:
        nxg.add_edge(e.a, e.b, **_edge_attrs(e, by_edge.get(e)))
    return nxg


_DOT_ARROW = {Mark.TAIL: "none", Mark.ARROW: "normal", Mark.CIRCLE: "odot"}


def _dot(nxg: nx.DiGraph) -> str:
    def quote(value: Any) -> str:
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return f"{value:g}" if isinstance(value, float) else str(value)
        return json.dumps(str(value))

    lines = [f"digraph autocd {{  // kind={nxg.graph.get('kind')}"]
    for node, data in nxg.nodes(data=True):
        attrs = ", ".join(f"{k}={quote(v)}" for k, v in sorted(data.items()))
        lines.append(f"  {json.dumps(node)} [{attrs}];")
    for a, b, data in nxg.edges(data=True):
        style = {
            "dir": "both",
            "arrowtail": _DOT_ARROW[Mark(data["mark_source"])],
            "arrowhead": _DOT_ARROW[Mark(data["mark_target"])],
        }
        extra = {k: v for k, v in data.items() if k not in ("mark_source", "mark_target")}
        attrs = ", ".join(f"{k}={quote(v)}" for k, v in [*style.items(), *sorted(extra.items())])
        lines.append(f"  {json.dumps(a)} -> {json.dumps(b)} [{attrs}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def export_graph(
    g: MixedGraph,
    confidences: Sequence[EdgeConfidence] | None = None,
    format: str = "cytoscape_json",
    target: str | None = None,
) -> bytes:
    if format not in EXPORT_FORMATS:
        raise InputError(f"unsupported export format {format!r}; expected one of {', '.join(EXPORT_FORMATS)}")
    if format == "json":
        return to_json(g).encode("utf-8")
    nxg = to_networkx(g, confidences, target)
    if format == "graphml":
        return ("\n".join(nx.generate_graphml(nxg)) + "\n").encode("utf-8")
    if format == "dot_like_text":
        return _dot(nxg).encode("utf-8")
    payload = nx.cytoscape_data(nxg)
    return (json.dumps(payload, indent=2, sort_keys=True) + "\n").encode("utf-8")


def _from_networkx(nxg: nx.Graph, kind: str | None, source: str) -> MixedGraph:
    try:
        nodes = []
        for ident, data in nxg.nodes(data=True):
            lag = data.get("lag")
            nodes.append(
                Node(
                    id=str(ident),
                    label=str(data.get("label") or ident),
                    variable=data.get("variable"),
                    lag=None if lag is None else int(lag),
                )
            )
        edges = [
            Edge(str(a), str(b), Mark(data["mark_source"]), Mark(data["mark_target"]))
            for a, b, data in nxg.edges(data=True)
        ]
        return MixedGraph(nodes, edges, GraphKind(kind or GraphKind.PAG.value))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, InputError):
            raise
        raise GraphFormatError(f"invalid graph document: {exc}", path=source) from exc


def parse_graph(data: bytes | str, format: str = "json", source: str = "<graph>") -> MixedGraph:
    raw = data.encode("utf-8") if isinstance(data, str) else data
    if format == "json":
        return from_json(raw, source)
    if format == "cytoscape_json":
        try:
            payload = json.loads(raw.decode("utf-8"))
        except json.JSONDecodeError as exc:
            raise GraphFormatError(exc.msg, path=source, line=exc.lineno, column=exc.colno) from exc
        try:
            nxg = nx.cytoscape_graph(payload)
        except (AttributeError, KeyError, TypeError, ValueError, nx.NetworkXError) as exc:
            raise GraphFormatError(f"invalid cytoscape document: {exc}", path=source) from exc
        return _from_networkx(nxg, nxg.graph.get("kind"), source)
    if format == "graphml":
        try:
            nxg = nx.read_graphml(io.BytesIO(raw))
        except Exception as exc:
            raise GraphFormatError(f"invalid graphml: {exc}", path=source) from exc
        return _from_networkx(nxg, nxg.graph.get("kind"), source)
    raise InputError(f"cannot parse graph format {format!r}")
