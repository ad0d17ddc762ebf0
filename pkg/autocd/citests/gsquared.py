from __future__ import annotations

from typing import Iterable

import numpy as np
from scipy.stats import chi2

from ..dataset import Dataset
from ..errors import InputError
from ..models import CITestResult
from .base import ConditionalIndependenceTest, check_arguments

# Below this many rows per degree of freedom the test is considered unpowered.
ROWS_PER_DOF = 10


def g_squared_from_codes(
    xc: np.ndarray,
    yc: np.ndarray,
    strata: np.ndarray,
    nx: int,
    ny: int,
) -> CITestResult:
    n = len(xc)
    g2 = 0.0
    dof = 0
    order = np.argsort(strata, kind="stable")
    bounds = np.flatnonzero(np.diff(strata[order])) + 1
    for rows in np.split(order, bounds):
        if rows.size == 0:
            continue
        table = np.zeros((nx, ny))
        np.add.at(table, (xc[rows], yc[rows]), 1.0)
        row_tot = table.sum(axis=1)
        col_tot = table.sum(axis=0)
        expected = np.outer(row_tot, col_tot) / rows.size
        mask = table > 0
        g2 += 2.0 * float(np.sum(table[mask] * np.log(table[mask] / expected[mask])))
        dof += max(0, (int(np.count_nonzero(row_tot)) - 1) * (int(np.count_nonzero(col_tot)) - 1))
    g2 = max(g2, 0.0)
    if dof == 0 or n < ROWS_PER_DOF * dof:
        return CITestResult(statistic=g2, p_value=1.0, dof=dof, flag="low_power")
    return CITestResult(statistic=g2, p_value=float(chi2.sf(g2, dof)), dof=dof)


def _strata(d: Dataset, z: tuple[str, ...]) -> np.ndarray:
    if not z:
        return np.zeros(d.n_rows, dtype=np.int64)
    codes = [d.codes(c) for c in z]
    dims = [max(1, d.n_levels(c)) for c in z]
    return np.ravel_multi_index(codes, dims).astype(np.int64)


def g_squared_test(d: Dataset, x: str, y: str, z: Iterable[str] = ()) -> CITestResult:
    cond = check_arguments(d.columns, x, y, z)
    for name in (x, y, *cond):
        if not d.is_categorical(name):
            raise InputError(f"g-squared needs categorical columns, {name!r} is continuous")
    return g_squared_from_codes(
        d.codes(x), d.codes(y), _strata(d, cond), d.n_levels(x), d.n_levels(y)
    )


class GSquaredTest(ConditionalIndependenceTest):
    name = "g_squared"

    def __init__(self, data: Dataset) -> None:
        super().__init__(data)
        for col in data.columns:
            if not data.is_categorical(col):
                raise InputError(f"g-squared needs categorical columns, {col!r} is continuous")

    def _run(self, x: str, y: str, z: tuple[str, ...]) -> CITestResult:
        assert self.data is not None
        return g_squared_test(self.data, x, y, z)
