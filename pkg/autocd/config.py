from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

from .errors import ConfigError
from .models import AfsConfig, ClConfig, ForestSpec, Knowledge, SimSpec
from .seeding import derive_seed


@dataclass
class AfsSettings:
    enabled: bool = True
    selectors: list[str] = field(default_factory=lambda: ["fbed", "ses"])
    alphas: list[float] = field(default_factory=lambda: [0.01, 0.05])
    min_leaf: list[int] = field(default_factory=lambda: [1, 5])
    n_trees: int = 100
    k: int = 5
    ci: str = "auto"

    def grid(self) -> list[AfsConfig]:
        return [
            AfsConfig(
                selector=selector,
                alpha=alpha,
                forest=ForestSpec(n_trees=self.n_trees, min_leaf=leaf),
            )
            for selector in self.selectors
            for alpha in self.alphas
            for leaf in self.min_leaf
        ]


@dataclass
class ClSettings:
    algorithms: list[str] = field(default_factory=lambda: ["pc_stable", "fci"])
    alphas: list[float] = field(default_factory=lambda: [0.01, 0.05])
    ci: str = "auto"
    max_cond_size: int | None = 4
    tier_knowledge: bool = True
    knowledge_path: str | None = None

    def configs(self, knowledge: Knowledge | None = None) -> list[ClConfig]:
        return [
            ClConfig(
                algorithm=algorithm,
                alpha=alpha,
                ci=self.ci,
                max_cond_size=self.max_cond_size,
                knowledge=knowledge,
            )
            for algorithm in self.algorithms
            for alpha in self.alphas
        ]


@dataclass
class OctSettings:
    k: int = 5
    b: int = 1000
    alpha: float = 0.05
    n_trees: int = 50
    n_jobs: int = 1


@dataclass
class BootstrapSettings:
    enabled: bool = True
    n_boot: int = 100
    block_len: int | None = None  # None: 2 * (max_lag + 1) for embedded data
    n_jobs: int = 1


@dataclass
class ExportSettings:
    formats: list[str] = field(default_factory=lambda: ["graphml", "cytoscape_json", "dot_like_text"])


@dataclass
class PipelineConfig:
    data_path: str
    seed: int
    target: str | None = None
    schema_path: str | None = None
    max_lag: int | str | None = None  # None: rows are i.i.d.; "auto": estimated order
    max_markov_order: int = 3
    holdout: float = 0.0  # fraction in (0, 1) or a row count
    out_dir: str = "runs"
    afs: AfsSettings = field(default_factory=AfsSettings)
    cl: ClSettings = field(default_factory=ClSettings)
    oct: OctSettings = field(default_factory=OctSettings)
    bootstrap: BootstrapSettings = field(default_factory=BootstrapSettings)
    export: ExportSettings = field(default_factory=ExportSettings)

    def config_hash(self) -> str:
        return _digest(asdict(self))


@dataclass
class BenchConfig:
    seed: int
    node_counts: list[int] = field(default_factory=lambda: [20])
    replicates: int = 10
    n_samples: int = 2000
    holdout: int = 500
    sim: dict[str, Any] = field(default_factory=dict)
    afs: AfsSettings = field(default_factory=AfsSettings)
    cl: ClSettings = field(default_factory=lambda: ClSettings(ci="fisher_z"))
    oct: OctSettings = field(default_factory=OctSettings)
    bootstrap: BootstrapSettings = field(default_factory=BootstrapSettings)
    resim_sizes: list[int] = field(default_factory=list)
    out_dir: str = "bench"

    def config_hash(self) -> str:
        return _digest(asdict(self))

    def sim_spec(self, n_vars: int, rep: int) -> SimSpec:
        raw = dict(self.sim)
        for name in ("autocorr_range", "coef_range"):
            if name in raw:
                raw[name] = tuple(float(v) for v in raw[name])
        raw.update(
            n_vars=n_vars,
            n_samples=self.n_samples + self.holdout,
            seed=derive_seed(self.seed, "sim", n_vars, rep),
        )
        try:
            return SimSpec(**raw)
        except TypeError as exc:
            raise ConfigError(f"invalid sim settings: {exc}") from exc


def _digest(payload: dict[str, Any]) -> str:
    raw = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return hashlib.sha256(raw).hexdigest()


def _as_list(value: Any) -> list[Any]:
    if value is None:
        return []
    if isinstance(value, list):
        return value
    return [value]


def _load_mapping(path: Path) -> dict[str, Any]:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if path.suffix.lower() in {".json"}:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    else:
        try:
            import yaml
        except ImportError as exc:
            raise RuntimeError(
                "YAML config requested but PyYAML is not installed. Install with: pip install -e .[yaml]"
            ) from exc
        data = yaml.safe_load(text)
    if not isinstance(data, dict):
        raise ConfigError(f"Invalid config format in {path}")
    return data


def _resolve(value: Any, base: Path | None) -> str | None:
    if value is None:
        return None
    path = Path(str(value))
    if base is not None and not path.is_absolute():
        path = base / path
    return str(path)


def _build_afs(raw: dict[str, Any]) -> AfsSettings:
    default = AfsSettings()
    return AfsSettings(
        enabled=bool(raw.get("enabled", True)),
        selectors=[str(s) for s in _as_list(raw.get("selectors"))] or default.selectors,
        alphas=[float(a) for a in _as_list(raw.get("alphas"))] or default.alphas,
        min_leaf=[int(v) for v in _as_list(raw.get("min_leaf"))] or default.min_leaf,
        n_trees=int(raw.get("n_trees", 100)),
        k=int(raw.get("k", 5)),
        ci=str(raw.get("ci", "auto")),
    )


def _build_cl(raw: dict[str, Any], base: Path | None, ci: str = "auto") -> ClSettings:
    default = ClSettings()
    max_cond = raw.get("max_cond_size", 4)
    return ClSettings(
        algorithms=[str(a) for a in _as_list(raw.get("algorithms"))] or default.algorithms,
        alphas=[float(a) for a in _as_list(raw.get("alphas"))] or default.alphas,
        ci=str(raw.get("ci", ci)),
        max_cond_size=None if max_cond is None else int(max_cond),
        tier_knowledge=bool(raw.get("tier_knowledge", True)),
        knowledge_path=_resolve(raw.get("knowledge_path"), base),
    )


def _build_oct(raw: dict[str, Any]) -> OctSettings:
    return OctSettings(
        k=int(raw.get("k", 5)),
        b=int(raw.get("b", 1000)),
        alpha=float(raw.get("alpha", 0.05)),
        n_trees=int(raw.get("n_trees", 50)),
        n_jobs=int(raw.get("n_jobs", 1)),
    )


def _build_bootstrap(raw: dict[str, Any]) -> BootstrapSettings:
    block = raw.get("block_len")
    return BootstrapSettings(
        enabled=bool(raw.get("enabled", True)),
        n_boot=int(raw.get("n_boot", 100)),
        block_len=None if block is None else int(block),
        n_jobs=int(raw.get("n_jobs", 1)),
    )


def _check_settings(afs: AfsSettings, cl: ClSettings, oct_: OctSettings, boot: BootstrapSettings) -> None:
    # building the grids runs the dataclass validation
    afs.grid()
    cl.configs()
    if oct_.k < 2:
        raise ConfigError("oct.k must be >= 2")
    if oct_.b < 100:
        raise ConfigError(f"oct.b must be >= 100, got {oct_.b}")
    if not 0.0 < oct_.alpha < 1.0:
        raise ConfigError("oct.alpha must lie in (0, 1)")
    if boot.n_boot < 1:
        raise ConfigError("bootstrap.n_boot must be >= 1")


def _build_pipeline(mapping: dict[str, Any], base: Path | None, seed: int | None) -> PipelineConfig:
    data_path = mapping.get("data_path")
    if not data_path:
        raise ConfigError("config must name data_path")
    raw_seed = mapping.get("seed") if seed is None else seed
    if raw_seed is None:
        raise ConfigError("config must set seed (or pass --seed)")
    max_lag = mapping.get("max_lag")
    if max_lag is not None and max_lag != "auto":
        max_lag = int(max_lag)
        if max_lag < 0:
            raise ConfigError("max_lag must be >= 0")
    target = mapping.get("target")
    cfg = PipelineConfig(
        data_path=str(_resolve(data_path, base)),
        seed=int(raw_seed),
        target=None if target is None else str(target),
        schema_path=_resolve(mapping.get("schema_path"), base),
        max_lag=max_lag,
        max_markov_order=int(mapping.get("max_markov_order", 3)),
        holdout=float(mapping.get("holdout", 0.0)),
        out_dir=str(_resolve(mapping.get("out_dir", "runs"), base)),
        afs=_build_afs(mapping.get("afs") or {}),
        cl=_build_cl(mapping.get("cl") or {}, base),
        oct=_build_oct(mapping.get("oct") or {}),
        bootstrap=_build_bootstrap(mapping.get("bootstrap") or {}),
        export=ExportSettings(
            formats=[str(f) for f in _as_list((mapping.get("export") or {}).get("formats"))]
            or ExportSettings().formats
        ),
    )
    if cfg.max_lag == "auto" and cfg.target is None:
        raise ConfigError("max_lag 'auto' needs a target")
    _check_settings(cfg.afs, cfg.cl, cfg.oct, cfg.bootstrap)
    return cfg


def load_pipeline_config(
    path: str | Path,
    seed: int | None = None,
    out_dir: str | None = None,
) -> PipelineConfig:
    source = Path(path)
    cfg = _build_pipeline(_load_mapping(source), source.parent, seed)
    if out_dir is not None:
        cfg.out_dir = out_dir
    return cfg


def pipeline_config_from_mapping(
    mapping: dict[str, Any],
    base: Path | None = None,
    seed: int | None = None,
) -> PipelineConfig:
    return _build_pipeline(mapping, base, seed)


def load_bench_config(
    path: str | Path | None,
    seed: int | None = None,
    out_dir: str | None = None,
) -> BenchConfig:
    mapping: dict[str, Any] = {}
    base: Path | None = None
    if path is not None:
        source = Path(path)
        mapping = _load_mapping(source)
        base = source.parent
    return bench_config_from_mapping(mapping, base, seed, out_dir)


def bench_config_from_mapping(
    mapping: dict[str, Any],
    base: Path | None = None,
    seed: int | None = None,
    out_dir: str | None = None,
) -> BenchConfig:
    raw_seed = mapping.get("seed", 0) if seed is None else seed
    cfg = BenchConfig(
        seed=int(raw_seed),
        node_counts=[int(n) for n in _as_list(mapping.get("node_counts"))] or [20],
        replicates=int(mapping.get("replicates", 10)),
        n_samples=int(mapping.get("n_samples", 2000)),
        holdout=int(mapping.get("holdout", 500)),
        sim=dict(mapping.get("sim") or {}),
        afs=_build_afs(mapping.get("afs") or {}),
        cl=_build_cl(mapping.get("cl") or {}, base, ci="fisher_z"),
        oct=_build_oct(mapping.get("oct") or {}),
        bootstrap=_build_bootstrap(mapping.get("bootstrap") or {}),
        resim_sizes=[int(n) for n in _as_list(mapping.get("resim_sizes"))],
        out_dir=out_dir or str(_resolve(mapping.get("out_dir", "bench"), base)),
    )
    if cfg.replicates < 1 or cfg.n_samples < 1 or cfg.holdout < 1:
        raise ConfigError("replicates, n_samples and holdout must be >= 1")
    _check_settings(cfg.afs, cfg.cl, cfg.oct, cfg.bootstrap)
    cfg.sim_spec(cfg.node_counts[0], 0)
    return cfg


def load_sim_spec(path: str | Path, seed: int | None = None) -> SimSpec:
    raw = _load_mapping(Path(path))
    if seed is not None:
        raw["seed"] = seed
    for name in ("autocorr_range", "coef_range"):
        if name in raw:
            raw[name] = tuple(float(v) for v in _as_list(raw[name]))
    try:
        return SimSpec(**raw)
    except TypeError as exc:
        raise ConfigError(f"invalid sim spec: {exc}") from exc


def pipeline_config_to_dict(cfg: PipelineConfig) -> dict[str, Any]:
    return asdict(cfg)


def bench_config_to_dict(cfg: BenchConfig) -> dict[str, Any]:
    return asdict(cfg)
