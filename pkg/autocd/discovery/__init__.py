"""Constraint-based structure learning: PC family and FCI."""

from __future__ import annotations

from ..citests import ConditionalIndependenceTest
from ..dataset import Dataset
from ..graph import MixedGraph
from ..models import ClConfig
from .fci import fci_closure, possible_dsep, run_fci
from .knowledge import check_knowledge, knowledge_from_dict, load_knowledge, tier_knowledge
from .pc import run_pc
from .skeleton import learn_skeleton

__all__ = [
    "check_knowledge",
    "fci_closure",
    "knowledge_from_dict",
    "learn_skeleton",
    "load_knowledge",
    "possible_dsep",
    "run_discovery",
    "run_fci",
    "run_pc",
    "tier_knowledge",
]


def run_discovery(
    d: Dataset | None,
    cfg: ClConfig,
    ci: ConditionalIndependenceTest | None = None,
) -> MixedGraph:
    if cfg.algorithm == "fci":
        return run_fci(d, cfg, ci)
    return run_pc(d, cfg, ci)
