from __future__ import annotations

from collections import deque
from typing import Callable

from ..errors import InputError
from .core import Edge, Mark, MixedGraph

Step = Callable[[MixedGraph, str, str], bool]


def _directed_step(g: MixedGraph, u: str, w: str) -> bool:
    return g.endpoint(u, w) is Mark.TAIL and g.endpoint(w, u) is Mark.ARROW


def _potential_step(g: MixedGraph, u: str, w: str) -> bool:
    return g.endpoint(u, w) in (Mark.TAIL, Mark.CIRCLE) and g.endpoint(w, u) in (
        Mark.ARROW,
        Mark.CIRCLE,
    )


def _any_step(g: MixedGraph, u: str, w: str) -> bool:
    return True


def _shortest(g: MixedGraph, a: str, b: str, step: Step) -> list[str] | None:
    # Neighbours are expanded in node order, so the first discovery of a node
    # fixes its lexicographically smallest shortest path.
    g.require(a, b)
    if a == b:
        raise InputError("path endpoints must differ")
    parent: dict[str, str | None] = {a: None}
    queue: deque[str] = deque([a])
    while queue:
        u = queue.popleft()
        for w in g.adjacent(u):
            if w in parent or not step(g, u, w):
                continue
            parent[w] = u
            if w == b:
                path = [b]
                while parent[path[-1]] is not None:
                    path.append(parent[path[-1]])  # type: ignore[arg-type]
                return path[::-1]
            queue.append(w)
    return None


def directed_path(g: MixedGraph, a: str, b: str) -> list[str] | None:
    return _shortest(g, a, b, _directed_step)


def potentially_directed_path(g: MixedGraph, a: str, b: str) -> list[str] | None:
    """Path a ... b that becomes directed for some replacement of its circles."""
    return _shortest(g, a, b, _potential_step)


def any_path(g: MixedGraph, a: str, b: str) -> list[str] | None:
    return _shortest(g, a, b, _any_step)


def edge_between(g: MixedGraph, a: str, b: str) -> Edge | None:
    if a == b:
        raise InputError("edge endpoints must differ")
    return g.edge_between(a, b)


def path_edges(g: MixedGraph, path: list[str]) -> list[Edge]:
    out: list[Edge] = []
    for u, w in zip(path, path[1:]):
        edge = g.edge_between(u, w)
        if edge is None:
            raise InputError(f"{u!r} and {w!r} are not adjacent")
        out.append(edge.oriented(u))
    return out
