from __future__ import annotations

import logging
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable

from ..citests import ConditionalIndependenceTest, create_ci_test
from ..dataset import Dataset
from ..errors import AutoCDError, InputError
from ..graph import EndpointTable, GraphKind, Mark, MixedGraph, Node
from ..models import ClConfig

logger = logging.getLogger(__name__)

Pair = frozenset[str]

# Flags that mean the test could not be evaluated; these keep the edge.
DEPENDENT_FLAGS = ("degenerate", "separation", "failed")


@dataclass
class SkeletonState:
    table: EndpointTable
    sepsets: dict[Pair, frozenset[str]] = field(default_factory=dict)
    # pairs removed by background knowledge, so no separating set exists
    unknown: set[Pair] = field(default_factory=set)
    n_failed: int = 0


class IndependenceOracle:
    """Applies the alpha decision rule on top of a CI test."""

    def __init__(self, test: ConditionalIndependenceTest, alpha: float) -> None:
        self.test = test
        self.alpha = alpha
        self.n_failed = 0

    def independent(self, x: str, y: str, z: Iterable[str]) -> bool:
        # alpha 0 accepts every independence and alpha 1 none, even when p underflows to 0
        if self.alpha <= 0.0:
            return True
        if self.alpha >= 1.0:
            return False
        try:
            res = self.test(x, y, tuple(z))
        except AutoCDError as exc:
            self.n_failed += 1
            logger.warning("CI test %s(%s, %s) failed, keeping edge: %s", self.test.name, x, y, exc)
            return False
        if res.flag in DEPENDENT_FLAGS:
            return False
        return res.p_value > self.alpha


def _search(
    state: SkeletonState,
    oracle: IndependenceOracle,
    variables: list[str],
    stable: bool,
    max_cond_size: int | None,
) -> None:
    table = state.table
    level = 0
    while max_cond_size is None or level <= max_cond_size:
        frozen = {x: table.adjacent(x) for x in variables} if stable else None
        testable = False
        for x in variables:
            neighbours = frozen[x] if frozen is not None else table.adjacent(x)
            for y in neighbours:
                if not table.is_adjacent(x, y):
                    continue
                pool = [v for v in (frozen[x] if frozen is not None else table.adjacent(x)) if v != y]
                if len(pool) < level:
                    continue
                testable = True
                for subset in combinations(pool, level):
                    if oracle.independent(x, y, subset):
                        table.remove(x, y)
                        state.sepsets[frozenset((x, y))] = frozenset(subset)
                        break
        if not testable:
            break
        level += 1


def build_skeleton(
    nodes: list[Node],
    test: ConditionalIndependenceTest,
    cfg: ClConfig,
) -> SkeletonState:
    table = EndpointTable(nodes, complete=True, fill=Mark.TAIL)
    variables = table.ids
    state = SkeletonState(table=table)
    if cfg.knowledge is not None:
        for a, b in combinations(variables, 2):
            if cfg.knowledge.adjacency_forbidden(a, b):
                table.remove(a, b)
                state.unknown.add(frozenset((a, b)))
    oracle = IndependenceOracle(test, cfg.alpha)
    _search(state, oracle, variables, cfg.algorithm != "pc", cfg.max_cond_size)
    state.n_failed = oracle.n_failed
    logger.info(
        "%s skeleton: %d edges, %d tests, %d flagged, %d failed",
        cfg.algorithm,
        table.n_edges(),
        test.n_calls,
        test.n_flagged,
        oracle.n_failed,
    )
    return state


def resolve_inputs(
    d: Dataset | None,
    cfg: ClConfig,
    ci: ConditionalIndependenceTest | None = None,
) -> tuple[ConditionalIndependenceTest, list[Node]]:
    """The CI test to run and the graph nodes it covers."""
    if ci is None:
        if d is None:
            raise InputError("discovery needs a dataset or an explicit CI test")
        ci = create_ci_test(cfg.ci, d)
    variables = ci.variables
    if len(variables) < 2:
        raise InputError("discovery needs at least two variables")
    nodes = []
    graph = getattr(ci, "graph", None)
    for name in variables:
        if isinstance(graph, MixedGraph) and graph.has_node(name):
            nodes.append(graph.node(name))
        elif d is not None and name in d.lag_meta:
            info = d.lag_meta[name]
            nodes.append(Node(id=name, label=name, variable=info.variable, lag=info.lag))
        else:
            nodes.append(Node(id=name, label=name))
    return ci, nodes


def learn_skeleton(
    d: Dataset | None,
    cfg: ClConfig,
    ci: ConditionalIndependenceTest | None = None,
) -> tuple[MixedGraph, dict[Pair, frozenset[str]]]:
    """Undirected skeleton plus the separating set recorded for each removed pair."""
    test, nodes = resolve_inputs(d, cfg, ci)
    state = build_skeleton(nodes, test, cfg)
    return state.table.to_graph(GraphKind.CPDAG), dict(state.sepsets)
