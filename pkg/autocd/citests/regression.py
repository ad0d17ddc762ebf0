from __future__ import annotations

import math
import warnings
from typing import Iterable

import numpy as np
from scipy.stats import chi2
from sklearn.exceptions import ConvergenceWarning
from sklearn.linear_model import LogisticRegression

from ..dataset import Dataset
from ..models import CITestResult
from .base import ConditionalIndependenceTest, check_arguments

# Mean log-likelihood per row above this means the classes are (nearly) separated.
SEPARATION_LOGLIK = -1e-4


def _rank(design: np.ndarray) -> int:
    if design.shape[1] == 0:
        return 0
    centered = design - design.mean(axis=0)
    return int(np.linalg.matrix_rank(centered))


def _gaussian_loglik(y: np.ndarray, design: np.ndarray) -> float:
    n = len(y)
    full = np.column_stack([np.ones(n), design])
    coef, *_ = np.linalg.lstsq(full, y, rcond=None)
    rss = float(np.sum((y - full @ coef) ** 2))
    rss = max(rss, 1e-300)
    return -0.5 * n * (math.log(2.0 * math.pi * rss / n) + 1.0)


def _multinomial_loglik(codes: np.ndarray, design: np.ndarray) -> tuple[float, bool]:
    """Log-likelihood of a multinomial logit fit and whether separation was detected."""
    classes, y = np.unique(codes, return_inverse=True)
    n = len(y)
    if len(classes) < 2:
        return 0.0, False
    if design.shape[1] == 0:
        counts = np.bincount(y)
        return float(np.sum(counts * np.log(counts / n))), False
    model = LogisticRegression(penalty=None, solver="lbfgs", max_iter=500)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ConvergenceWarning)
        model.fit(design, y)
    proba = np.clip(model.predict_proba(design)[np.arange(n), y], 1e-300, 1.0)
    ll = float(np.sum(np.log(proba)))
    separated = ll / n > SEPARATION_LOGLIK or any(
        issubclass(w.category, ConvergenceWarning) for w in caught
    )
    return ll, separated


def _one_direction(d: Dataset, target: str, other: str, z: tuple[str, ...]) -> CITestResult:
    reduced = d.design(z)
    full = np.column_stack([reduced, d.design([other])])
    added = _rank(full) - _rank(reduced)
    n = d.n_rows
    if d.is_categorical(target):
        n_classes = len(np.unique(d.codes(target)))
        ll0, _ = _multinomial_loglik(d.codes(target), reduced)
        ll1, separated = _multinomial_loglik(d.codes(target), full)
        dof = added * max(0, n_classes - 1)
        if separated:
            return CITestResult(statistic=0.0, p_value=1.0, dof=dof, flag="separation")
    else:
        y = d.values(target)
        ll0 = _gaussian_loglik(y, reduced)
        ll1 = _gaussian_loglik(y, full)
        dof = added
    if dof <= 0:
        return CITestResult(statistic=0.0, p_value=1.0, dof=0, flag="degenerate")
    stat = max(0.0, 2.0 * (ll1 - ll0))
    if n <= dof + len(z) + 1:
        return CITestResult(statistic=stat, p_value=1.0, dof=dof, flag="low_power")
    return CITestResult(statistic=stat, p_value=float(chi2.sf(stat, dof)), dof=dof)


def regression_ci_test(d: Dataset, x: str, y: str, z: Iterable[str] = ()) -> CITestResult:
    """Symmetrized likelihood-ratio test; the larger of the two p-values wins."""
    cond = check_arguments(d.columns, x, y, z)
    first = _one_direction(d, y, x, cond)
    second = _one_direction(d, x, y, cond)
    if second.p_value > first.p_value:
        return second
    return first


class RegressionCITest(ConditionalIndependenceTest):
    name = "regression"

    def _run(self, x: str, y: str, z: tuple[str, ...]) -> CITestResult:
        assert self.data is not None
        return regression_ci_test(self.data, x, y, z)
