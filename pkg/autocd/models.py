from __future__ import annotations

from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Any, Iterator

import numpy as np

from .errors import ConfigError
from .graph import Edge, MixedGraph

if TYPE_CHECKING:
    from .learner import Model


@dataclass(frozen=True)
class CITestResult:
    statistic: float
    p_value: float
    dof: int
    flag: str | None = None  # degenerate | low_power | separation | failed

    @property
    def reliable(self) -> bool:
        return self.flag is None


@dataclass(frozen=True)
class ForestSpec:
    n_trees: int = 100
    min_leaf: int = 1
    feature_fraction: str = "sqrt"  # sqrt | all
    max_depth: int | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_trees < 1:
            raise ConfigError("n_trees must be >= 1")
        if self.min_leaf < 1:
            raise ConfigError("min_leaf must be >= 1")
        if self.feature_fraction not in ("sqrt", "all"):
            raise ConfigError(f"unknown feature_fraction {self.feature_fraction!r}")
        if self.max_depth is not None and self.max_depth < 1:
            raise ConfigError("max_depth must be >= 1")


@dataclass(frozen=True, eq=False)
class FoldPlan:
    k: int
    assignments: np.ndarray
    seed: int

    def test_rows(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == fold)

    def train_rows(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments != fold)

    def __iter__(self) -> Iterator[tuple[int, np.ndarray, np.ndarray]]:
        for fold in range(self.k):
            yield fold, self.train_rows(fold), self.test_rows(fold)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FoldPlan):
            return NotImplemented
        return self.k == other.k and np.array_equal(self.assignments, other.assignments)


@dataclass(frozen=True)
class AfsConfig:
    selector: str = "fbed"  # fbed | ses
    alpha: float = 0.05
    forest: ForestSpec = field(default_factory=ForestSpec)
    k_runs: int = 1
    max_k: int = 3

    def __post_init__(self) -> None:
        if self.selector not in ("fbed", "ses"):
            raise ConfigError(f"unknown selector {self.selector!r}")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError("afs alpha must lie in (0, 1)")
        if self.k_runs < 0 or self.max_k < 1:
            raise ConfigError("k_runs must be >= 0 and max_k >= 1")

    @property
    def label(self) -> str:
        return f"{self.selector}/a={self.alpha:g}/leaf={self.forest.min_leaf}"

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


@dataclass
class AfsResult:
    target: str
    mb_est: list[str]
    equivalent_sets: list[list[str]]
    winner: AfsConfig
    cv_score: float
    metric: str
    final_model: "Model | None" = None
    holdout_score: float | None = None
    config_scores: list[dict[str, Any]] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "target": self.target,
            "mb_est": list(self.mb_est),
            "equivalent_sets": [list(s) for s in self.equivalent_sets],
            "winner": self.winner.to_dict(),
            "cv_score": self.cv_score,
            "holdout_score": self.holdout_score,
            "metric": self.metric,
            "configs": self.config_scores,
        }


@dataclass(frozen=True)
class Knowledge:
    """Background constraints. Tiers run oldest first."""

    tiers: tuple[tuple[str, ...], ...] = ()
    forbidden: frozenset[tuple[str, str]] = frozenset()
    required: frozenset[tuple[str, str]] = frozenset()

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for tier in self.tiers:
            overlap = seen & set(tier)
            if overlap:
                raise ConfigError(f"tiers overlap on {sorted(overlap)}")
            seen |= set(tier)
        clash = self.forbidden & self.required
        if clash:
            raise ConfigError(f"pairs both forbidden and required: {sorted(clash)}")

    def tier_of(self, x: str) -> int | None:
        for idx, tier in enumerate(self.tiers):
            if x in tier:
                return idx
        return None

    def is_forbidden(self, a: str, b: str) -> bool:
        """Whether a -> b is ruled out."""
        if (a, b) in self.forbidden:
            return True
        ta, tb = self.tier_of(a), self.tier_of(b)
        return ta is not None and tb is not None and ta > tb

    def is_required(self, a: str, b: str) -> bool:
        return (a, b) in self.required

    def adjacency_forbidden(self, a: str, b: str) -> bool:
        if self.is_required(a, b) or self.is_required(b, a):
            return False
        return self.is_forbidden(a, b) and self.is_forbidden(b, a)

    def allows(self, a: str, b: str) -> bool:
        return not self.is_forbidden(a, b) and not self.is_required(b, a)

    def to_dict(self) -> dict[str, Any]:
        return {
            "tiers": [list(t) for t in self.tiers],
            "forbidden": sorted([list(p) for p in self.forbidden]),
            "required": sorted([list(p) for p in self.required]),
        }


@dataclass(frozen=True)
class ClConfig:
    algorithm: str = "pc_stable"  # pc | pc_stable | cpc | fci
    alpha: float = 0.05
    ci: str = "auto"
    max_cond_size: int | None = 4
    knowledge: Knowledge | None = None

    def __post_init__(self) -> None:
        if self.algorithm not in ("pc", "pc_stable", "cpc", "fci"):
            raise ConfigError(f"unknown algorithm {self.algorithm!r}")
        # The closed interval lets alpha=0 and alpha=1 act as endpoint settings.
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError("discovery alpha must lie in [0, 1]")
        if self.max_cond_size is not None and self.max_cond_size < 0:
            raise ConfigError("max_cond_size must be >= 0")

    @property
    def label(self) -> str:
        return f"{self.algorithm}/{self.ci}/a={self.alpha:g}"

    def to_dict(self) -> dict[str, Any]:
        return {
            "algorithm": self.algorithm,
            "alpha": self.alpha,
            "ci": self.ci,
            "max_cond_size": self.max_cond_size,
            "knowledge": None if self.knowledge is None else self.knowledge.to_dict(),
        }


@dataclass
class ConfigPerformance:
    config: ClConfig
    scores: np.ndarray  # nodes x folds, NaN where the fold failed
    mb_sizes: np.ndarray
    fold_valid: list[bool]
    fold_graphs: list[MixedGraph | None] = field(default_factory=list)
    errors: list[str] = field(default_factory=list)

    @property
    def disqualified(self) -> bool:
        return sum(1 for ok in self.fold_valid if not ok) * 2 > len(self.fold_valid)

    @property
    def mean_score(self) -> float:
        valid = self.scores[:, self.fold_valid]
        return float(np.mean(valid)) if valid.size else float("nan")

    @property
    def mean_mb_size(self) -> float:
        valid = self.mb_sizes[:, self.fold_valid]
        return float(np.mean(valid)) if valid.size else float("nan")


@dataclass
class OctReport:
    nodes: list[str]
    per_config: list[ConfigPerformance]
    best_index: int
    p_values: dict[int, float]
    indistinguishable: list[int]
    winner_index: int
    winner_graph: MixedGraph
    winner_final_mb_size: float

    @property
    def best_config(self) -> ClConfig:
        return self.per_config[self.best_index].config

    @property
    def winner(self) -> ClConfig:
        return self.per_config[self.winner_index].config

    def to_dict(self, include_scores: bool = False) -> dict[str, Any]:
        rows = []
        for idx, perf in enumerate(self.per_config):
            row: dict[str, Any] = {
                "config": perf.config.to_dict(),
                "label": perf.config.label,
                "mean_score": None if perf.disqualified else perf.mean_score,
                "mean_mb_size": None if perf.disqualified else perf.mean_mb_size,
                "fold_valid": list(perf.fold_valid),
                "disqualified": perf.disqualified,
                "p_value": self.p_values.get(idx),
                "errors": list(perf.errors),
            }
            if include_scores:
                row["scores"] = np.where(np.isnan(perf.scores), None, perf.scores).tolist()
                row["mb_sizes"] = np.where(np.isnan(perf.mb_sizes), None, perf.mb_sizes).tolist()
            rows.append(row)
        return {
            "nodes": list(self.nodes),
            "configs": rows,
            "best": self.best_index,
            "indistinguishable": list(self.indistinguishable),
            "winner": self.winner_index,
            "winner_label": self.winner.label,
            "winner_final_mb_size": self.winner_final_mb_size,
        }


@dataclass(frozen=True)
class EdgeConfidence:
    edge: Edge
    exact_freq: float
    consistency_freq: float
    n_boot: int

    def to_dict(self) -> dict[str, Any]:
        return {
            **self.edge.to_dict(),
            "exact_freq": self.exact_freq,
            "consistency_freq": self.consistency_freq,
            "n_boot": self.n_boot,
        }


@dataclass
class BootstrapPopulation:
    graphs: list[MixedGraph]
    n_requested: int
    n_failed: int

    def __iter__(self) -> Iterator[MixedGraph]:
        return iter(self.graphs)

    def __len__(self) -> int:
        return len(self.graphs)

    def __getitem__(self, idx: int) -> MixedGraph:
        return self.graphs[idx]


@dataclass
class QueryAnswer:
    kind: str
    a: str
    b: str
    answer: bool
    witness: Edge | list[str] | None = None
    subgraph: MixedGraph | None = None

    def to_dict(self) -> dict[str, Any]:
        witness: Any = None
        if isinstance(self.witness, Edge):
            witness = self.witness.to_dict()
        elif self.witness is not None:
            witness = list(self.witness)
        return {
            "kind": self.kind,
            "a": self.a,
            "b": self.b,
            "answer": self.answer,
            "witness": witness,
            "subgraph": None if self.subgraph is None else self.subgraph.to_dict(),
        }


@dataclass(frozen=True)
class SimSpec:
    n_vars: int = 20
    max_lag: int = 2
    avg_degree_per_lag: float = 2.0
    max_degree: int = 5
    autocorr_range: tuple[float, float] = (0.2, 0.9)
    coef_range: tuple[float, float] = (0.1, 0.5)
    n_samples: int = 2000
    burn_in: int = 200
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_vars < 1:
            raise ConfigError("n_vars must be >= 1")
        if self.max_lag < 1:
            raise ConfigError("max_lag must be >= 1")
        for name in ("autocorr_range", "coef_range"):
            lo, hi = getattr(self, name)
            if not (0.0 < lo <= hi < 1.0):
                raise ConfigError(f"{name} must satisfy 0 < low <= high < 1")
        if self.avg_degree_per_lag < 0 or self.max_degree < 1:
            raise ConfigError("degrees must be positive")
        if self.n_samples < 1 or self.burn_in < 0:
            raise ConfigError("n_samples must be >= 1 and burn_in >= 0")

    def to_dict(self) -> dict[str, Any]:
        out = asdict(self)
        out["autocorr_range"] = list(self.autocorr_range)
        out["coef_range"] = list(self.coef_range)
        return out


@dataclass
class GroundTruth:
    spec: SimSpec
    variables: list[str]
    lagged_dag: MixedGraph
    coefficients: dict[tuple[str, str], float]
    target: str

    def lag_coefficients(self) -> np.ndarray:
        """Array A of shape (max_lag, n, n) with x_t = sum_k A[k-1] @ x_{t-k} + e_t."""
        index = {v: i for i, v in enumerate(self.variables)}
        n = len(self.variables)
        out = np.zeros((self.spec.max_lag, n, n))
        for (parent, child), coef in self.coefficients.items():
            pv, plag = parent.rsplit(":", 1)
            cv, clag = child.rsplit(":", 1)
            if int(clag) != 0:
                continue
            out[int(plag) - 1, index[cv], index[pv]] = coef
        return out


@dataclass
class CausalRunResult:
    target: str | None
    afs: AfsResult | None
    oct: OctReport
    winner_graph: MixedGraph
    confidences: list[EdgeConfidence]
    n_boot_failed: int = 0


@dataclass
class RunSummary:
    success: bool
    run_dir: Path
    stages: dict[str, str]
    result: CausalRunResult | None = None
    extra: dict[str, Any] = field(default_factory=dict)
