from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from typing import Any, Iterable, Iterator

import networkx as nx

from ..errors import GraphFormatError, InputError, UnsupportedKindError


class Mark(str, Enum):
    TAIL = "tail"
    ARROW = "arrow"
    CIRCLE = "circle"


class GraphKind(str, Enum):
    DAG = "dag"
    CPDAG = "cpdag"
    MAG = "mag"
    PAG = "pag"


_LEFT = {Mark.TAIL: "-", Mark.ARROW: "<", Mark.CIRCLE: "o"}
_RIGHT = {Mark.TAIL: "-", Mark.ARROW: ">", Mark.CIRCLE: "o"}


def node_id(variable: str, lag: int) -> str:
    return f"{variable}:{lag}"


def split_node_id(value: str) -> tuple[str, int] | None:
    head, sep, tail = value.rpartition(":")
    if not sep or not head:
        return None
    try:
        return head, int(tail)
    except ValueError:
        return None


@dataclass(frozen=True)
class Node:
    id: str
    label: str = ""
    variable: str | None = None
    lag: int | None = None

    @property
    def display(self) -> str:
        return self.label or self.id

    @classmethod
    def lagged(cls, variable: str, lag: int) -> "Node":
        ident = node_id(variable, lag)
        return cls(id=ident, label=ident, variable=variable, lag=lag)


@dataclass(frozen=True, eq=False)
class Edge:
    a: str
    b: str
    mark_a: Mark
    mark_b: Mark

    def __post_init__(self) -> None:
        if self.a == self.b:
            raise InputError(f"self-loop on {self.a!r}")
        object.__setattr__(self, "mark_a", Mark(self.mark_a))
        object.__setattr__(self, "mark_b", Mark(self.mark_b))

    def _key(self) -> tuple[str, str, Mark, Mark]:
        if self.a <= self.b:
            return (self.a, self.b, self.mark_a, self.mark_b)
        return (self.b, self.a, self.mark_b, self.mark_a)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Edge):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self) -> int:
        return hash(self._key())

    @property
    def pair(self) -> frozenset[str]:
        return frozenset((self.a, self.b))

    def mark_at(self, node: str) -> Mark:
        if node == self.a:
            return self.mark_a
        if node == self.b:
            return self.mark_b
        raise InputError(f"{node!r} is not an endpoint of {self}")

    def other(self, node: str) -> str:
        if node == self.a:
            return self.b
        if node == self.b:
            return self.a
        raise InputError(f"{node!r} is not an endpoint of {self}")

    def oriented(self, first: str) -> "Edge":
        if first == self.a:
            return self
        if first == self.b:
            return Edge(self.b, self.a, self.mark_b, self.mark_a)
        raise InputError(f"{first!r} is not an endpoint of {self}")

    def is_directed_from(self, source: str) -> bool:
        e = self.oriented(source)
        return e.mark_a is Mark.TAIL and e.mark_b is Mark.ARROW

    @property
    def symbol(self) -> str:
        return f"{_LEFT[self.mark_a]}-{_RIGHT[self.mark_b]}"

    def __str__(self) -> str:
        return f"{self.a} {self.symbol} {self.b}"

    def to_dict(self) -> dict[str, str]:
        return {"a": self.a, "b": self.b, "mark_a": self.mark_a.value, "mark_b": self.mark_b.value}


class MixedGraph:
    """Immutable graph over ordered nodes with one endpoint mark per edge side.

    ``endpoint(x, y)`` is the mark at ``x`` on the edge between ``x`` and ``y``.
    """

    __slots__ = ("_nodes", "_index", "_ends", "_kind")

    def __init__(
        self,
        nodes: Iterable[Node | str],
        edges: Iterable[Edge] = (),
        kind: GraphKind | str = GraphKind.PAG,
        validate: bool = True,
    ) -> None:
        node_list = [n if isinstance(n, Node) else Node(id=n, label=n) for n in nodes]
        self._nodes: tuple[Node, ...] = tuple(node_list)
        self._index: dict[str, int] = {}
        for pos, node in enumerate(self._nodes):
            if node.id in self._index:
                raise InputError(f"duplicate node id {node.id!r}")
            self._index[node.id] = pos
        self._kind = GraphKind(kind)
        self._ends: dict[str, dict[str, Mark]] = {n.id: {} for n in self._nodes}
        for edge in edges:
            for end in (edge.a, edge.b):
                if end not in self._index:
                    raise InputError(f"edge {edge} references unknown node {end!r}")
            if edge.b in self._ends[edge.a]:
                raise InputError(f"more than one edge between {edge.a!r} and {edge.b!r}")
            self._ends[edge.a][edge.b] = edge.mark_a
            self._ends[edge.b][edge.a] = edge.mark_b
        if validate:
            self._validate()

    # construction helpers

    @classmethod
    def dag(cls, nodes: Iterable[Node | str], arcs: Iterable[tuple[str, str]]) -> "MixedGraph":
        edges = [Edge(a, b, Mark.TAIL, Mark.ARROW) for a, b in arcs]
        return cls(nodes, edges, GraphKind.DAG)

    @classmethod
    def empty(cls, nodes: Iterable[Node | str], kind: GraphKind | str = GraphKind.PAG) -> "MixedGraph":
        return cls(nodes, (), kind)

    def with_kind(self, kind: GraphKind | str) -> "MixedGraph":
        return MixedGraph(self._nodes, self.edges, kind)

    def _validate(self) -> None:
        marks = {m for row in self._ends.values() for m in row.values()}
        if self._kind in (GraphKind.DAG, GraphKind.MAG, GraphKind.CPDAG) and Mark.CIRCLE in marks:
            raise UnsupportedKindError(f"circle marks are not allowed in a {self._kind.value}")
        if self._kind is GraphKind.DAG:
            for edge in self.edges:
                if not (edge.mark_a is Mark.TAIL and edge.mark_b is Mark.ARROW):
                    raise UnsupportedKindError(f"non-directed edge {edge} in a dag")
        if self._kind is GraphKind.CPDAG:
            for edge in self.edges:
                if edge.mark_a is Mark.ARROW and edge.mark_b is Mark.ARROW:
                    raise UnsupportedKindError(f"bidirected edge {edge} in a cpdag")
        if self._kind in (GraphKind.DAG, GraphKind.MAG):
            directed = self.directed_graph()
            if not nx.is_directed_acyclic_graph(directed):
                raise UnsupportedKindError(f"directed cycle in a {self._kind.value}")
        if self._kind is GraphKind.MAG:
            for edge in self.edges:
                if edge.mark_a is Mark.ARROW and edge.mark_b is Mark.ARROW:
                    if edge.b in nx.ancestors(directed, edge.a) or edge.a in nx.ancestors(
                        directed, edge.b
                    ):
                        raise UnsupportedKindError(f"almost directed cycle through {edge}")

    # node access

    @property
    def kind(self) -> GraphKind:
        return self._kind

    @property
    def nodes(self) -> tuple[Node, ...]:
        return self._nodes

    @property
    def node_ids(self) -> list[str]:
        return [n.id for n in self._nodes]

    def node(self, ident: str) -> Node:
        self.require(ident)
        return self._nodes[self._index[ident]]

    def has_node(self, ident: str) -> bool:
        return ident in self._index

    def require(self, *idents: str) -> None:
        for ident in idents:
            if ident not in self._index:
                raise InputError(f"unknown node {ident!r}")

    def order(self, ident: str) -> int:
        return self._index[ident]

    def sort_ids(self, idents: Iterable[str]) -> list[str]:
        return sorted(idents, key=self._index.__getitem__)

    def __len__(self) -> int:
        return len(self._nodes)

    def __contains__(self, ident: object) -> bool:
        return ident in self._index

    # edges

    @property
    def edges(self) -> list[Edge]:
        out: list[Edge] = []
        for node in self._nodes:
            x = node.id
            for y in self.adjacent(x):
                if self._index[y] > self._index[x]:
                    out.append(Edge(x, y, self._ends[x][y], self._ends[y][x]))
        return out

    def __iter__(self) -> Iterator[Edge]:
        return iter(self.edges)

    @property
    def n_edges(self) -> int:
        return sum(len(row) for row in self._ends.values()) // 2

    def edge_between(self, a: str, b: str) -> Edge | None:
        self.require(a, b)
        if b not in self._ends[a]:
            return None
        return Edge(a, b, self._ends[a][b], self._ends[b][a])

    def is_adjacent(self, a: str, b: str) -> bool:
        return b in self._ends.get(a, {})

    def adjacent(self, x: str) -> list[str]:
        self.require(x)
        return sorted(self._ends[x], key=self._index.__getitem__)

    def endpoint(self, at: str, other: str) -> Mark:
        try:
            return self._ends[at][other]
        except KeyError:
            raise InputError(f"no edge between {at!r} and {other!r}") from None

    def is_directed(self, a: str, b: str) -> bool:
        row = self._ends.get(a, {})
        return b in row and row[b] is Mark.TAIL and self._ends[b][a] is Mark.ARROW

    def parents(self, x: str) -> list[str]:
        return [y for y in self.adjacent(x) if self.is_directed(y, x)]

    def children(self, x: str) -> list[str]:
        return [y for y in self.adjacent(x) if self.is_directed(x, y)]

    def directed_graph(self) -> nx.DiGraph:
        dg = nx.DiGraph()
        dg.add_nodes_from(self.node_ids)
        for edge in self.edges:
            if edge.is_directed_from(edge.a):
                dg.add_edge(edge.a, edge.b)
            elif edge.is_directed_from(edge.b):
                dg.add_edge(edge.b, edge.a)
        return dg

    def ancestors(self, nodes: Iterable[str]) -> set[str]:
        """Nodes with a directed path into any of ``nodes``, the nodes included."""
        dg = self.directed_graph()
        out: set[str] = set()
        for n in nodes:
            self.require(n)
            out.add(n)
            out |= nx.ancestors(dg, n)
        return out

    def skeleton(self) -> set[frozenset[str]]:
        return {e.pair for e in self.edges}

    def subgraph(self, keep: Iterable[str], kind: GraphKind | str | None = None) -> "MixedGraph":
        wanted = set(keep)
        self.require(*wanted)
        nodes = [n for n in self._nodes if n.id in wanted]
        edges = [e for e in self.edges if e.a in wanted and e.b in wanted]
        return MixedGraph(nodes, edges, kind or self._kind, validate=False)

    # equality and serialization

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MixedGraph):
            return NotImplemented
        return (
            self._kind == other._kind
            and set(self._index) == set(other._index)
            and set(self.edges) == set(other.edges)
        )

    def __hash__(self) -> int:
        return hash((self._kind, frozenset(self._index), frozenset(self.edges)))

    def __repr__(self) -> str:
        return f"MixedGraph(kind={self._kind.value}, nodes={len(self)}, edges={self.n_edges})"

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self._kind.value,
            "nodes": [
                {"id": n.id, "label": n.display, "variable": n.variable, "lag": n.lag}
                for n in self._nodes
            ],
            "edges": [e.to_dict() for e in self.edges],
        }

    @classmethod
    def from_dict(cls, payload: Any, source: str | None = None) -> "MixedGraph":
        if not isinstance(payload, dict):
            raise GraphFormatError("graph document must be an object", path=source)
        try:
            nodes = [
                Node(
                    id=str(item["id"]),
                    label=str(item.get("label") or item["id"]),
                    variable=item.get("variable"),
                    lag=None if item.get("lag") is None else int(item["lag"]),
                )
                for item in payload.get("nodes") or []
            ]
            edges = [
                Edge(str(item["a"]), str(item["b"]), Mark(item["mark_a"]), Mark(item["mark_b"]))
                for item in payload.get("edges") or []
            ]
            kind = GraphKind(payload.get("kind", GraphKind.PAG.value))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, InputError):
                raise
            raise GraphFormatError(f"invalid graph document: {exc}", path=source) from exc
        return cls(nodes, edges, kind)


def to_json(g: MixedGraph, extra: dict[str, Any] | None = None) -> str:
    payload = g.to_dict()
    if extra:
        payload.update(extra)
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def from_json(text: str | bytes, source: str | None = None) -> MixedGraph:
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphFormatError(exc.msg, path=source or "<graph>", line=exc.lineno, column=exc.colno) from exc
    return MixedGraph.from_dict(payload, source=source)
