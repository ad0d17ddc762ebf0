from __future__ import annotations

from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from .errors import InputError
from .graph import MixedGraph
from .models import EdgeConfidence
from .stats import auroc_score, r2_score


def shd(g1: MixedGraph, g2: MixedGraph) -> int:
    """Structural Hamming distance on mark-labelled graphs.

    One per pair whose adjacency differs, and one per differing endpoint mark
    on pairs adjacent in both.
    """
    ids = sorted(set(g1.node_ids) | set(g2.node_ids))
    total = 0
    for a, b in combinations(ids, 2):
        e1 = g1.edge_between(a, b) if g1.has_node(a) and g1.has_node(b) else None
        e2 = g2.edge_between(a, b) if g2.has_node(a) and g2.has_node(b) else None
        if (e1 is None) != (e2 is None):
            total += 1
        elif e1 is not None and e2 is not None:
            total += int(e1.mark_at(a) is not e2.mark_at(a))
            total += int(e1.mark_at(b) is not e2.mark_at(b))
    return total


def _pr(est: set, true: set) -> tuple[float, float, str | None]:
    hits = len(est & true)
    if not est and not true:
        return 1.0, 1.0, None
    if not est:
        return 1.0, 0.0, "empty_estimate"
    if not true:
        return 0.0, 1.0, "empty_truth"
    return hits / len(est), hits / len(true), None


def set_pr(est: Iterable[str], true: Iterable[str]) -> tuple[float, float, str | None]:
    return _pr(set(est), set(true))


def adjacency_pr(est: MixedGraph, true: MixedGraph) -> tuple[float, float, str | None]:
    return _pr(est.skeleton(), true.skeleton())


def edge_confidence_auc(
    confidences: Sequence[EdgeConfidence],
    true_graph: MixedGraph,
) -> tuple[float | None, str | None]:
    """AUROC of consistency frequencies against adjacency in the true graph.

    Returns ``(None, flag)`` when the labels hold a single class.
    """
    if not confidences:
        return None, "no_edges"
    labels = np.array(
        [
            int(
                true_graph.has_node(c.edge.a)
                and true_graph.has_node(c.edge.b)
                and true_graph.is_adjacent(c.edge.a, c.edge.b)
            )
            for c in confidences
        ]
    )
    if labels.min() == labels.max():
        return None, "single_class"
    scores = np.array([c.consistency_freq for c in confidences])
    return auroc_score(labels, scores), None


def delta_r2(y: np.ndarray, true_pred: np.ndarray, est_pred: np.ndarray) -> float:
    y = np.asarray(y, dtype=np.float64)
    if y.shape != np.asarray(true_pred).shape or y.shape != np.asarray(est_pred).shape:
        raise InputError("delta_r2 inputs must share one shape")
    return r2_score(y, true_pred) - r2_score(y, est_pred)
