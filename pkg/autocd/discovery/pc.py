from __future__ import annotations

import logging
from itertools import combinations

from ..citests import ConditionalIndependenceTest
from ..dataset import Dataset
from ..graph import EndpointTable, GraphKind, MixedGraph, meek_closure
from ..models import ClConfig, Knowledge
from .skeleton import IndependenceOracle, SkeletonState, build_skeleton, resolve_inputs

logger = logging.getLogger(__name__)


def _apply_knowledge(t: EndpointTable, k: Knowledge) -> None:
    for a, b in list(t.pairs()):
        if not t.is_undirected(a, b):
            continue
        if k.is_required(a, b) or (k.is_forbidden(b, a) and not k.is_forbidden(a, b)):
            t.orient(a, b)
        elif k.is_required(b, a) or (k.is_forbidden(a, b) and not k.is_forbidden(b, a)):
            t.orient(b, a)


def _collider_votes(
    t: EndpointTable,
    oracle: IndependenceOracle,
    x: str,
    z: str,
    y: str,
    max_cond_size: int | None,
) -> str:
    """Conservative rule: look at every separating set among current adjacents.

    Returns ``collider``, ``noncollider`` or ``ambiguous``.
    """
    with_z = without_z = 0
    for source, other in ((x, y), (y, x)):
        pool = [v for v in t.adjacent(source) if v != other]
        top = len(pool) if max_cond_size is None else min(len(pool), max_cond_size)
        for size in range(top + 1):
            for subset in combinations(pool, size):
                if oracle.independent(x, y, subset):
                    if z in subset:
                        with_z += 1
                    else:
                        without_z += 1
    if with_z and without_z:
        return "ambiguous"
    if with_z:
        return "noncollider"
    if without_z:
        return "collider"
    return "ambiguous"


def _orient_half(t: EndpointTable, a: str, b: str, k: Knowledge | None) -> None:
    # first orientation wins; an arrow already pointing back is left alone
    if not t.is_undirected(a, b):
        return
    if k is not None and not k.allows(a, b):
        return
    t.orient(a, b)


def orient_cpdag(
    state: SkeletonState,
    oracle: IndependenceOracle,
    cfg: ClConfig,
) -> EndpointTable:
    t = state.table
    k = cfg.knowledge
    if k is not None:
        _apply_knowledge(t, k)
    triples = list(t.unshielded_triples())
    ambiguous: list[tuple[str, str, str]] = []
    colliders: list[tuple[str, str, str]] = []
    for x, z, y in triples:
        pair = frozenset((x, y))
        if pair in state.unknown:
            continue
        if cfg.algorithm == "cpc":
            verdict = _collider_votes(t, oracle, x, z, y, cfg.max_cond_size)
            if verdict == "ambiguous":
                ambiguous.append((x, z, y))
                continue
            if verdict == "collider":
                colliders.append((x, z, y))
        elif z not in state.sepsets.get(pair, frozenset()):
            colliders.append((x, z, y))
    for x, z, y in colliders:
        _orient_half(t, x, z, k)
        _orient_half(t, y, z, k)
    logger.debug("%d v-structures, %d ambiguous triples", len(colliders), len(ambiguous))
    allowed = k.allows if k is not None else (lambda a, b: True)
    return meek_closure(t, allowed=allowed, ambiguous=ambiguous)


def run_pc(
    d: Dataset | None,
    cfg: ClConfig,
    ci: ConditionalIndependenceTest | None = None,
) -> MixedGraph:
    """PC, PC-stable or conservative PC; returns a CPDAG."""
    test, nodes = resolve_inputs(d, cfg, ci)
    state = build_skeleton(nodes, test, cfg)
    oracle = IndependenceOracle(test, cfg.alpha)
    table = orient_cpdag(state, oracle, cfg)
    return table.to_graph(GraphKind.CPDAG)
