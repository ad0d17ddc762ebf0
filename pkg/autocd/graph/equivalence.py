from __future__ import annotations

from ..errors import UnsupportedKindError
from .core import GraphKind, Mark, MixedGraph
from .orient import EndpointTable, meek_closure


def cpdag_of(g: MixedGraph) -> MixedGraph:
    """Equivalence class of a DAG: v-structures kept, closure under Meek rules."""
    if g.kind is not GraphKind.DAG:
        raise UnsupportedKindError(f"cpdag_of needs a dag, got {g.kind.value}")
    table = EndpointTable(g.nodes)
    for a, b in ((e.a, e.b) for e in g.edges):
        table.add(a, b, Mark.TAIL, Mark.TAIL)
    for c in g.node_ids:
        parents = g.parents(c)
        for i, a in enumerate(parents):
            for b in parents[i + 1 :]:
                if not g.is_adjacent(a, b):
                    table.orient(a, c)
                    table.orient(b, c)
    meek_closure(table)
    return table.to_graph(GraphKind.CPDAG)
