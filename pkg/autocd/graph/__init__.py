"""Mixed-mark causal graphs: DAG, CPDAG, MAG and PAG."""

from .core import Edge, GraphKind, Mark, MixedGraph, Node, from_json, node_id, split_node_id, to_json
from .equivalence import cpdag_of
from .orient import EndpointTable, meek_closure
from .paths import any_path, directed_path, edge_between, path_edges, potentially_directed_path
from .separation import is_m_separated, latent_projection, m_connected, markov_boundary

__all__ = [
    "Edge",
    "EndpointTable",
    "GraphKind",
    "Mark",
    "MixedGraph",
    "Node",
    "any_path",
    "cpdag_of",
    "directed_path",
    "edge_between",
    "from_json",
    "is_m_separated",
    "latent_projection",
    "m_connected",
    "markov_boundary",
    "meek_closure",
    "node_id",
    "path_edges",
    "potentially_directed_path",
    "split_node_id",
    "to_json",
]
