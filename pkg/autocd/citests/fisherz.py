from __future__ import annotations

import math
from typing import Iterable

import numpy as np
from scipy.stats import norm

from ..dataset import Dataset
from ..errors import InputError, SampleSizeError
from ..models import CITestResult
from .base import ConditionalIndependenceTest, check_arguments

CONDITION_LIMIT = 1e10
VARIANCE_FLOOR = 1e-12


def _degenerate(n_eff: int) -> CITestResult:
    return CITestResult(statistic=0.0, p_value=1.0, dof=n_eff, flag="degenerate")


def partial_correlation(corr: np.ndarray) -> float | None:
    """Partial correlation of the first two variables of ``corr`` given the rest.

    None when the conditioning block is singular or either variable is fully
    explained by the conditioning set.
    """
    if not np.all(np.isfinite(corr)):
        return None
    if corr.shape[0] > 2:
        czz = corr[2:, 2:]
        if np.linalg.cond(czz) > CONDITION_LIMIT:
            return None
        coef = np.linalg.solve(czz, corr[2:, :2])
        resid = corr[:2, :2] - corr[:2, 2:] @ coef
    else:
        resid = corr[:2, :2]
    vx, vy = resid[0, 0], resid[1, 1]
    if vx <= VARIANCE_FLOOR or vy <= VARIANCE_FLOOR:
        return None
    return float(resid[0, 1] / math.sqrt(vx * vy))


def fisher_z_from_r(r: float, n: int, k: int) -> CITestResult:
    n_eff = n - k - 3
    r = max(-1.0, min(1.0, r))
    if abs(r) >= 1.0:
        return CITestResult(statistic=math.inf, p_value=0.0, dof=n_eff)
    stat = 0.5 * math.log((1.0 + r) / (1.0 - r)) * math.sqrt(n_eff)
    p = float(2.0 * norm.sf(abs(stat)))
    return CITestResult(statistic=float(stat), p_value=min(1.0, p), dof=n_eff)


def fisher_z_test(d: Dataset, x: str, y: str, z: Iterable[str] = ()) -> CITestResult:
    cond = check_arguments(d.columns, x, y, z)
    for name in (x, y, *cond):
        if d.is_categorical(name):
            raise InputError(f"fisher-z needs continuous columns, {name!r} is categorical")
    k = len(cond)
    if d.n_rows <= k + 3:
        raise SampleSizeError(f"fisher-z needs more than {k + 3} rows, got {d.n_rows}")
    with np.errstate(invalid="ignore", divide="ignore"):
        corr = np.atleast_2d(np.corrcoef(d.matrix([x, y, *cond]), rowvar=False))
    r = partial_correlation(corr)
    if r is None:
        return _degenerate(d.n_rows - k - 3)
    return fisher_z_from_r(r, d.n_rows, k)


class FisherZTest(ConditionalIndependenceTest):
    name = "fisher_z"

    def __init__(self, data: Dataset) -> None:
        super().__init__(data)
        for col in data.columns:
            if data.is_categorical(col):
                raise InputError(f"fisher-z needs continuous columns, {col!r} is categorical")
        self._index = {c: i for i, c in enumerate(data.columns)}
        with np.errstate(invalid="ignore", divide="ignore"):
            self._corr = np.atleast_2d(np.corrcoef(data.matrix(data.columns), rowvar=False))

    def _run(self, x: str, y: str, z: tuple[str, ...]) -> CITestResult:
        assert self.data is not None
        k = len(z)
        if self.data.n_rows <= k + 3:
            raise SampleSizeError(f"fisher-z needs more than {k + 3} rows, got {self.data.n_rows}")
        idx = [self._index[v] for v in (x, y, *z)]
        r = partial_correlation(self._corr[np.ix_(idx, idx)])
        if r is None:
            return _degenerate(self.data.n_rows - k - 3)
        return fisher_z_from_r(r, self.data.n_rows, k)
