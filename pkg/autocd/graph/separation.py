from __future__ import annotations

import logging
from collections import deque
from typing import Iterable

from ..errors import InputError, UnsupportedKindError
from .core import Edge, GraphKind, Mark, MixedGraph

logger = logging.getLogger(__name__)

_SEPARATION_KINDS = (GraphKind.DAG, GraphKind.MAG)


def m_connected(g: MixedGraph, x: str, z: Iterable[str]) -> set[str]:
    """All nodes m-connected to ``x`` given ``z``.

    Walk-based reachability over states (node, entered through an arrowhead).
    A collider passes iff it is an ancestor of ``z`` (``z`` included); a
    non-collider passes iff it is outside ``z``.
    """
    cond = set(z)
    g.require(x, *cond)
    anc = g.ancestors(cond)
    reached: set[str] = set()
    seen: set[tuple[str, bool]] = set()
    queue: deque[tuple[str, bool]] = deque()
    for w in g.adjacent(x):
        queue.append((w, g.endpoint(w, x) is Mark.ARROW))
    while queue:
        state = queue.popleft()
        if state in seen:
            continue
        seen.add(state)
        v, into = state
        if v != x and v not in cond:
            reached.add(v)
        for w in g.adjacent(v):
            collider = into and g.endpoint(v, w) is Mark.ARROW
            if collider:
                if v not in anc:
                    continue
            elif v in cond:
                continue
            queue.append((w, g.endpoint(w, v) is Mark.ARROW))
    reached.discard(x)
    return reached


def is_m_separated(g: MixedGraph, x: str, y: str, z: Iterable[str]) -> bool:
    if g.kind not in _SEPARATION_KINDS:
        raise UnsupportedKindError(f"m-separation needs a dag or mag, got {g.kind.value}")
    cond = set(z)
    g.require(x, y, *cond)
    if x == y:
        raise InputError("x and y must differ")
    if x in cond or y in cond:
        raise InputError("x and y must not be in the conditioning set")
    return y not in m_connected(g, x, cond)


def markov_boundary(g: MixedGraph, x: str) -> set[str]:
    """Adjacents of ``x`` plus nodes reachable over definite-collider paths.

    Every intermediate node on such a path has arrowheads on both sides;
    circle marks never make a collider.
    """
    g.require(x)
    boundary = set(g.adjacent(x))
    seen: set[str] = set()
    queue: deque[str] = deque(v for v in g.adjacent(x) if g.endpoint(v, x) is Mark.ARROW)
    while queue:
        v = queue.popleft()
        if v in seen:
            continue
        seen.add(v)
        for w in g.adjacent(v):
            if w == x or g.endpoint(v, w) is not Mark.ARROW:
                continue
            boundary.add(w)
            if g.endpoint(w, v) is Mark.ARROW and w not in seen:
                queue.append(w)
    boundary.discard(x)
    return boundary


def latent_projection(g: MixedGraph, observed: Iterable[str]) -> MixedGraph:
    """Marginal MAG of a DAG over ``observed``.

    A and B are adjacent iff some inducing path relative to the latents joins
    them, i.e. iff no set of observed nodes separates them; the candidate set
    ``(An({A, B}) & observed) - {A, B}`` is decisive for DAGs.
    """
    if g.kind is not GraphKind.DAG:
        raise UnsupportedKindError(f"latent projection needs a dag, got {g.kind.value}")
    keep = set(observed)
    if not keep:
        raise InputError("observed set is empty")
    g.require(*keep)
    order = g.sort_ids(keep)
    edges: list[Edge] = []
    for i, a in enumerate(order):
        for b in order[i + 1 :]:
            sep = (g.ancestors((a, b)) & keep) - {a, b}
            if b not in m_connected(g, a, sep):
                continue
            anc_b = g.ancestors((b,))
            anc_a = g.ancestors((a,))
            mark_a = Mark.TAIL if a in anc_b else Mark.ARROW
            mark_b = Mark.TAIL if b in anc_a else Mark.ARROW
            edges.append(Edge(a, b, mark_a, mark_b))
    nodes = [n for n in g.nodes if n.id in keep]
    logger.debug("projected %d nodes onto %d observed, %d edges", len(g), len(keep), len(edges))
    return MixedGraph(nodes, edges, GraphKind.MAG)
