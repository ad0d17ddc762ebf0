from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from typing import Any, Iterable

import networkx as nx
import numpy as np
import pandas as pd

from .dataset import CONTINUOUS, Dataset, LagInfo
from .errors import ConfigError, DiscoveryError, InputError, SampleSizeError, UnsupportedKindError
from .graph import GraphKind, MixedGraph, Node, from_json, latent_projection, node_id, to_json
from .metrics import adjacency_pr, edge_confidence_auc, set_pr, shd
from .models import GroundTruth, SimSpec
from .seeding import stream

logger = logging.getLogger(__name__)

__all__ = [
    "Resimulator",
    "adjacency_pr",
    "edge_confidence_auc",
    "ground_truth_from_json",
    "ground_truth_to_json",
    "lag_embed",
    "linear_gaussian_sample",
    "random_dag",
    "random_lagged_dag",
    "resimulate_fit",
    "set_pr",
    "shd",
    "simulate_ts",
    "spectral_radius",
    "true_marginal",
]

MAX_STATIONARITY_RETRIES = 20


def _variables(n: int) -> list[str]:
    return [f"V{i + 1}" for i in range(n)]


def spectral_radius(coefs: np.ndarray) -> float:
    """Spectral radius of the VAR companion matrix for lag blocks ``coefs[k-1]``."""
    max_lag, n, _ = coefs.shape
    companion = np.zeros((n * max_lag, n * max_lag))
    companion[:n, :] = np.concatenate(list(coefs), axis=1)
    if max_lag > 1:
        companion[n:, :-n] = np.eye(n * (max_lag - 1))
    return float(np.max(np.abs(np.linalg.eigvals(companion))))


def _cross_structure(spec: SimSpec, variables: list[str], rng: np.random.Generator) -> list[tuple[int, str, str]]:
    n = len(variables)
    in_degree = dict.fromkeys(variables, 1)  # the autocorrelation edge
    if spec.max_degree < 1:
        raise ConfigError("max_degree must admit the autocorrelation edge")
    arcs: list[tuple[int, str, str]] = []
    for lag in range(1, spec.max_lag + 1):
        wanted = int(round(spec.avg_degree_per_lag * n)) - (n if lag == 1 else 0)
        wanted = max(0, min(wanted, n * (n - 1)))
        pairs = [(p, c) for p in variables for c in variables if p != c]
        placed = 0
        for idx in rng.permutation(len(pairs)):
            if placed == wanted:
                break
            parent, child = pairs[idx]
            if in_degree[child] >= spec.max_degree:
                continue
            arcs.append((lag, parent, child))
            in_degree[child] += 1
            placed += 1
        if placed < wanted:
            raise ConfigError(
                f"cannot place {wanted} lag-{lag} edges with max_degree={spec.max_degree}",
                {"placed": placed, "lag": lag},
            )
    return arcs


def _lagged_graph(variables: list[str], max_lag: int, arcs: Iterable[tuple[int, str, str]]) -> MixedGraph:
    nodes = [Node.lagged(v, lag) for lag in range(max_lag, -1, -1) for v in variables]
    edges = []
    for lag, parent, child in arcs:
        for shift in range(0, max_lag - lag + 1):
            edges.append((node_id(parent, lag + shift), node_id(child, shift)))
    return MixedGraph.dag(nodes, edges)


def random_lagged_dag(spec: SimSpec) -> GroundTruth:
    rng = stream(spec.seed, "sim", "structure")
    variables = _variables(spec.n_vars)
    cross = _cross_structure(spec, variables, rng)
    arcs = [(1, v, v) for v in variables] + cross
    lo, hi = spec.autocorr_range
    clo, chi = spec.coef_range
    for attempt in range(MAX_STATIONARITY_RETRIES):
        coefficients: dict[tuple[str, str], float] = {}
        for lag, parent, child in arcs:
            key = (node_id(parent, lag), node_id(child, 0))
            if parent == child and lag == 1:
                coefficients[key] = float(rng.uniform(lo, hi))
            else:
                sign = 1.0 if rng.random() < 0.5 else -1.0
                coefficients[key] = sign * float(rng.uniform(clo, chi))
        gt = GroundTruth(
            spec=spec,
            variables=variables,
            lagged_dag=_lagged_graph(variables, spec.max_lag, arcs),
            coefficients=coefficients,
            target=node_id(variables[int(rng.integers(len(variables)))], 0),
        )
        radius = spectral_radius(gt.lag_coefficients())
        if radius < 1.0:
            if attempt:
                logger.info("stationary coefficients found after %d redraws", attempt)
            return gt
        logger.debug("redrawing coefficients: spectral radius %.3f", radius)
    raise DiscoveryError(
        f"no stationary coefficient draw in {MAX_STATIONARITY_RETRIES} attempts",
        {"seed": spec.seed, "n_vars": spec.n_vars},
    )


def simulate_ts(
    gt: GroundTruth,
    n_samples: int | None = None,
    burn_in: int | None = None,
    seed: int | None = None,
) -> Dataset:
    n_samples = gt.spec.n_samples if n_samples is None else n_samples
    burn_in = gt.spec.burn_in if burn_in is None else burn_in
    seed = gt.spec.seed if seed is None else seed
    if n_samples < 1:
        raise ConfigError("n_samples must be >= 1")
    coefs = gt.lag_coefficients()
    radius = spectral_radius(coefs)
    if radius >= 1.0:
        raise DiscoveryError(f"non-stationary process: spectral radius {radius:.3f}")
    max_lag, n, _ = coefs.shape
    rng = stream(seed, "sim", "series")
    total = max_lag + burn_in + n_samples
    noise = rng.standard_normal((total, n))
    x = np.zeros((total, n))
    for t in range(max_lag, total):
        acc = noise[t].copy()
        for k in range(1, max_lag + 1):
            acc += coefs[k - 1] @ x[t - k]
        x[t] = acc
    kept = x[max_lag + burn_in :]
    frame = pd.DataFrame(kept, columns=gt.variables)
    return Dataset(frame, dict.fromkeys(gt.variables, CONTINUOUS))


def lag_embed(ts: Dataset, max_lag: int) -> Dataset:
    """Rows t = max_lag..n-1 with one column per (variable, lag), lag 0 first."""
    if max_lag < 0:
        raise ConfigError("max_lag must be >= 0")
    n = ts.n_rows
    if n <= max_lag:
        raise SampleSizeError(f"cannot embed {n} rows with max_lag={max_lag}")
    columns: dict[str, Any] = {}
    types = {}
    meta = {}
    for lag in range(max_lag + 1):
        for var in ts.columns:
            name = node_id(var, lag)
            columns[name] = ts.frame[var].to_numpy()[max_lag - lag : n - lag]
            types[name] = ts.column_type(var)
            meta[name] = LagInfo(variable=var, lag=lag)
    return Dataset(pd.DataFrame(columns), types, meta)


@dataclass
class _NodeFit:
    parents: list[str]
    intercept: float
    weights: np.ndarray
    residuals: np.ndarray


class Resimulator:

    def __init__(self, graph: MixedGraph, fits: dict[str, _NodeFit], order: list[str]) -> None:
        self.graph = graph
        self.fits = fits
        self.order = order

    def sample(self, n: int, seed: int = 0) -> Dataset:
        if n < 1:
            raise ConfigError("sample size must be >= 1")
        rng = stream(seed, "sim", "resimulate")
        values: dict[str, np.ndarray] = {}
        for name in self.order:
            fit = self.fits[name]
            noise = fit.residuals[rng.integers(0, len(fit.residuals), size=n)]
            out = fit.intercept + noise
            for w, parent in zip(fit.weights, fit.parents):
                out = out + w * values[parent]
            values[name] = out
        columns = self.graph.node_ids
        frame = pd.DataFrame({c: values[c] for c in columns})
        return Dataset(frame, dict.fromkeys(columns, CONTINUOUS))

    def coefficients(self) -> dict[tuple[str, str], float]:
        return {
            (p, child): float(w)
            for child, fit in self.fits.items()
            for p, w in zip(fit.parents, fit.weights)
        }


def resimulate_fit(d: Dataset, g: MixedGraph) -> Resimulator:
    if g.kind is not GraphKind.DAG:
        raise UnsupportedKindError(f"resimulation needs a dag, got {g.kind.value}")
    d.require(*g.node_ids)
    for name in g.node_ids:
        if d.is_categorical(name):
            raise InputError(f"resimulation needs continuous columns; {name!r} is categorical")
    fits = {}
    for name in g.node_ids:
        parents = g.parents(name)
        y = d.values(name)
        if parents:
            design = np.column_stack([np.ones(d.n_rows), d.matrix(parents)])
            beta, *_ = np.linalg.lstsq(design, y, rcond=None)
            intercept, weights = float(beta[0]), np.asarray(beta[1:])
        else:
            intercept, weights = float(np.mean(y)), np.zeros(0)
            design = np.ones((d.n_rows, 1))
            beta = np.array([intercept])
        fits[name] = _NodeFit(parents, intercept, weights, y - design @ beta)
    order = list(nx.lexicographical_topological_sort(g.directed_graph(), key=g.order))
    return Resimulator(g, fits, order)


def true_marginal(gt: GroundTruth, observed: Iterable[str]) -> MixedGraph:
    return latent_projection(gt.lagged_dag, observed)


def ground_truth_to_json(gt: GroundTruth) -> str:
    extra = {
        "coefficients": [
            {"parent": p, "child": c, "coefficient": w} for (p, c), w in sorted(gt.coefficients.items())
        ],
        "target": gt.target,
        "spec": gt.spec.to_dict(),
        "variables": list(gt.variables),
    }
    return to_json(gt.lagged_dag, extra)


def ground_truth_from_json(text: str | bytes, source: str | None = None) -> GroundTruth:
    graph = from_json(text, source)
    payload = json.loads(text)
    try:
        raw = dict(payload["spec"])
        raw["autocorr_range"] = tuple(raw["autocorr_range"])
        raw["coef_range"] = tuple(raw["coef_range"])
        spec = SimSpec(**raw)
        coefficients = {
            (str(item["parent"]), str(item["child"])): float(item["coefficient"])
            for item in payload["coefficients"]
        }
        return GroundTruth(
            spec=spec,
            variables=[str(v) for v in payload["variables"]],
            lagged_dag=graph,
            coefficients=coefficients,
            target=str(payload["target"]),
        )
    except (KeyError, TypeError) as exc:
        raise InputError(f"{source or '<truth>'}: not a ground-truth document: {exc}") from exc


def random_dag(n: int, edge_prob: float, seed: int = 0, prefix: str = "X") -> MixedGraph:
    if n < 1:
        raise ConfigError("n must be >= 1")
    rng = stream(seed, "sim", "dag")
    names = [f"{prefix}{i + 1}" for i in range(n)]
    order = rng.permutation(n)
    arcs = [
        (names[order[i]], names[order[j]])
        for i in range(n)
        for j in range(i + 1, n)
        if rng.random() < edge_prob
    ]
    return MixedGraph.dag(names, arcs)


def linear_gaussian_sample(
    g: MixedGraph,
    n: int,
    seed: int = 0,
    coef_range: tuple[float, float] = (0.5, 1.0),
) -> Dataset:
    if g.kind is not GraphKind.DAG:
        raise UnsupportedKindError(f"sampling needs a dag, got {g.kind.value}")
    rng = stream(seed, "sim", "sample")
    values: dict[str, np.ndarray] = {}
    for name in nx.lexicographical_topological_sort(g.directed_graph(), key=g.order):
        out = rng.standard_normal(n)
        for parent in g.parents(name):
            sign = 1.0 if rng.random() < 0.5 else -1.0
            out = out + sign * rng.uniform(*coef_range) * values[parent]
        values[name] = out
    frame = pd.DataFrame({c: values[c] for c in g.node_ids})
    return Dataset(frame, dict.fromkeys(g.node_ids, CONTINUOUS))
