from __future__ import annotations

import math
from typing import Sequence

import numpy as np
from sklearn import metrics

from .errors import ConfigError, InputError

RHO2_CAP = 1.0 - 1e-12
MI_CAP = -0.5 * math.log(1.0 - RHO2_CAP)


def _pair(y_true: Sequence[float] | np.ndarray, y_pred: Sequence[float] | np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(y_true)
    b = np.asarray(y_pred)
    if a.shape[0] != b.shape[0]:
        raise InputError(f"length mismatch: {a.shape[0]} vs {b.shape[0]}")
    if a.shape[0] == 0:
        raise InputError("empty inputs")
    return a, b


def mutual_information_score(
    y_true: Sequence[float] | np.ndarray,
    y_pred: Sequence[float] | np.ndarray,
    categorical: bool = False,
) -> float:
    a, b = _pair(y_true, y_pred)
    if categorical:
        if len(np.unique(b)) < 2:
            return 0.0
        return max(0.0, float(metrics.mutual_info_score(a, b)))
    a = a.astype(np.float64)
    b = b.astype(np.float64)
    if np.ptp(b) == 0.0 or np.ptp(a) == 0.0:
        return 0.0
    rho = float(np.corrcoef(a, b)[0, 1])
    if not math.isfinite(rho):
        return 0.0
    rho2 = min(rho * rho, RHO2_CAP)
    return -0.5 * math.log(1.0 - rho2)


def r2_score(y_true: Sequence[float] | np.ndarray, y_pred: Sequence[float] | np.ndarray) -> float:
    a, b = _pair(y_true, y_pred)
    return float(metrics.r2_score(a, b))


def auroc_score(y_true: Sequence[int] | np.ndarray, scores: Sequence[float] | np.ndarray) -> float:
    """AUROC with midrank ties; for a score matrix, the mean one-vs-rest AUROC.

    ``scores`` is a vector for binary outcomes, or an (n, n_classes) matrix whose
    column c scores class c. Classes absent from ``y_true`` are skipped.
    """
    a, s = _pair(y_true, scores)
    if s.ndim == 1:
        labels = np.unique(a)
        if len(labels) != 2:
            raise InputError("binary auroc needs exactly two classes in y_true")
        return float(metrics.roc_auc_score(a == labels[1], s))
    aucs = []
    for cls in range(s.shape[1]):
        positive = a == cls
        if positive.all() or not positive.any():
            continue
        aucs.append(float(metrics.roc_auc_score(positive, s[:, cls])))
    if not aucs:
        raise InputError("auroc undefined: y_true holds a single class")
    return float(np.mean(aucs))


def permutation_indistinguishable(
    best: Sequence[float] | np.ndarray,
    other: Sequence[float] | np.ndarray,
    b: int = 1000,
    alpha: float = 0.05,
    rng: np.random.Generator | int | None = None,
) -> tuple[float, bool]:
    """Paired sign-flip test of mean(best - other) > 0.

    Returns the plus-one corrected p-value and whether the two score vectors
    are indistinguishable at ``alpha``.
    """
    if b < 100:
        raise ConfigError(f"permutation count must be >= 100, got {b}")
    x = np.asarray(best, dtype=np.float64)
    y = np.asarray(other, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise InputError("paired score vectors must be one-dimensional and of equal length")
    diffs = x - y
    observed = float(diffs.mean()) if diffs.size else 0.0
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    signs = gen.choice(np.array([-1.0, 1.0]), size=(b, diffs.size))
    permuted = (signs * diffs).mean(axis=1) if diffs.size else np.zeros(b)
    hits = int(np.count_nonzero(permuted >= observed - 1e-12))
    p = (1 + hits) / (b + 1)
    return p, p > alpha
