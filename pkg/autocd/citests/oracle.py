from __future__ import annotations

from typing import Iterable

from ..graph import MixedGraph, is_m_separated
from ..models import CITestResult
from .base import ConditionalIndependenceTest


class OracleCITest(ConditionalIndependenceTest):
    """Independence read off a known DAG or MAG: p is 1 when separated, else 0."""

    name = "oracle"

    def __init__(self, graph: MixedGraph, observed: Iterable[str] | None = None) -> None:
        super().__init__(None)
        self.graph = graph
        keep = set(observed) if observed is not None else set(graph.node_ids)
        self._observed = graph.sort_ids(keep)

    @property
    def variables(self) -> list[str]:
        return list(self._observed)

    def _run(self, x: str, y: str, z: tuple[str, ...]) -> CITestResult:
        separated = is_m_separated(self.graph, x, y, z)
        return CITestResult(statistic=0.0 if separated else 1.0, p_value=1.0 if separated else 0.0, dof=0)
