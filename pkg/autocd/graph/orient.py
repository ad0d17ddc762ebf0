from __future__ import annotations

from itertools import combinations
from typing import Callable, Iterable, Iterator, Sequence

from ..errors import InputError
from .core import Edge, GraphKind, Mark, MixedGraph, Node

# allowed(a, b) answers whether a -> b may be oriented.
OrientationCheck = Callable[[str, str], bool]


def _always(a: str, b: str) -> bool:
    return True


class EndpointTable:
    """Mutable endpoint marks used while a graph is being learned.

    ``mark(at, other)`` follows ``MixedGraph.endpoint``: the mark at ``at`` on
    the edge ``at``-``other``.
    """

    def __init__(self, nodes: Sequence[Node | str], complete: bool = False, fill: Mark = Mark.CIRCLE):
        self.nodes: list[Node] = [n if isinstance(n, Node) else Node(id=n, label=n) for n in nodes]
        self._index = {n.id: i for i, n in enumerate(self.nodes)}
        self._ends: dict[str, dict[str, Mark]] = {n.id: {} for n in self.nodes}
        if complete:
            for a, b in combinations(self.ids, 2):
                self.add(a, b, fill, fill)

    @classmethod
    def from_graph(cls, g: MixedGraph) -> "EndpointTable":
        table = cls(g.nodes)
        for edge in g.edges:
            table.add(edge.a, edge.b, edge.mark_a, edge.mark_b)
        return table

    @property
    def ids(self) -> list[str]:
        return [n.id for n in self.nodes]

    def copy(self) -> "EndpointTable":
        other = EndpointTable(self.nodes)
        other._ends = {k: dict(v) for k, v in self._ends.items()}
        return other

    def add(self, a: str, b: str, mark_a: Mark, mark_b: Mark) -> None:
        self._ends[a][b] = mark_a
        self._ends[b][a] = mark_b

    def remove(self, a: str, b: str) -> None:
        self._ends[a].pop(b, None)
        self._ends[b].pop(a, None)

    def is_adjacent(self, a: str, b: str) -> bool:
        return b in self._ends[a]

    def adjacent(self, x: str) -> list[str]:
        return sorted(self._ends[x], key=self._index.__getitem__)

    def mark(self, at: str, other: str) -> Mark:
        try:
            return self._ends[at][other]
        except KeyError:
            raise InputError(f"no edge between {at!r} and {other!r}") from None

    def set_mark(self, at: str, other: str, mark: Mark) -> None:
        if other not in self._ends[at]:
            raise InputError(f"no edge between {at!r} and {other!r}")
        self._ends[at][other] = mark

    def orient(self, a: str, b: str) -> None:
        self.set_mark(a, b, Mark.TAIL)
        self.set_mark(b, a, Mark.ARROW)

    def is_directed(self, a: str, b: str) -> bool:
        return (
            b in self._ends[a]
            and self._ends[a][b] is Mark.TAIL
            and self._ends[b][a] is Mark.ARROW
        )

    def is_undirected(self, a: str, b: str) -> bool:
        return (
            b in self._ends[a]
            and self._ends[a][b] is Mark.TAIL
            and self._ends[b][a] is Mark.TAIL
        )

    def pairs(self) -> Iterator[tuple[str, str]]:
        for a in self.ids:
            for b in self.adjacent(a):
                if self._index[b] > self._index[a]:
                    yield a, b

    def unshielded_triples(self) -> Iterator[tuple[str, str, str]]:
        """(a, c, b) with a-c-b, a and b non-adjacent, a before b in node order."""
        for c in self.ids:
            for a, b in combinations(self.adjacent(c), 2):
                if not self.is_adjacent(a, b):
                    yield a, c, b

    def to_graph(self, kind: GraphKind | str) -> MixedGraph:
        edges = [Edge(a, b, self._ends[a][b], self._ends[b][a]) for a, b in self.pairs()]
        return MixedGraph(self.nodes, edges, kind)

    def n_edges(self) -> int:
        return sum(len(v) for v in self._ends.values()) // 2


def _meek_r1(t: EndpointTable, allowed: OrientationCheck, ambiguous: set[tuple[str, str, str]]) -> bool:
    changed = False
    for b in t.ids:
        for a in t.adjacent(b):
            if not t.is_directed(a, b):
                continue
            for c in t.adjacent(b):
                if c == a or t.is_adjacent(a, c) or not t.is_undirected(b, c):
                    continue
                if (a, b, c) in ambiguous or not allowed(b, c):
                    continue
                t.orient(b, c)
                changed = True
    return changed


def _meek_r2(t: EndpointTable, allowed: OrientationCheck) -> bool:
    changed = False
    for a in t.ids:
        for c in t.adjacent(a):
            if not t.is_undirected(a, c) or not allowed(a, c):
                continue
            if any(t.is_directed(a, b) and t.is_directed(b, c) for b in t.adjacent(a)):
                t.orient(a, c)
                changed = True
    return changed


def _meek_r3(t: EndpointTable, allowed: OrientationCheck) -> bool:
    changed = False
    for a in t.ids:
        for d in t.adjacent(a):
            if not t.is_undirected(a, d) or not allowed(a, d):
                continue
            parents = [
                b for b in t.adjacent(a) if t.is_undirected(a, b) and t.is_directed(b, d)
            ]
            if any(not t.is_adjacent(b, c) for b, c in combinations(parents, 2)):
                t.orient(a, d)
                changed = True
    return changed


def _meek_r4(t: EndpointTable, allowed: OrientationCheck) -> bool:
    changed = False
    for a in t.ids:
        for d in t.adjacent(a):
            if not t.is_undirected(a, d) or not allowed(a, d):
                continue
            hit = False
            for c in t.adjacent(a):
                if c == d or not t.is_adjacent(c, d) or not t.is_directed(c, d):
                    continue
                for b in t.adjacent(a):
                    if b in (c, d) or t.is_adjacent(b, d):
                        continue
                    if t.is_directed(b, c):
                        hit = True
                        break
                if hit:
                    break
            if hit:
                t.orient(a, d)
                changed = True
    return changed


def meek_closure(
    t: EndpointTable,
    allowed: OrientationCheck = _always,
    ambiguous: Iterable[tuple[str, str, str]] = (),
) -> EndpointTable:
    """Apply Meek rules R1-R4 in place until nothing changes.

    ``ambiguous`` lists unshielded triples (a, c, b) whose collider status was
    undecided; R1 does not propagate through them.
    """
    amb: set[tuple[str, str, str]] = set()
    for a, c, b in ambiguous:
        amb.add((a, c, b))
        amb.add((b, c, a))
    while True:
        changed = _meek_r1(t, allowed, amb)
        changed = _meek_r2(t, allowed) or changed
        changed = _meek_r3(t, allowed) or changed
        changed = _meek_r4(t, allowed) or changed
        if not changed:
            return t
