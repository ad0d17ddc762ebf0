from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from typing import Iterable

from ..dataset import Dataset
from ..errors import InputError
from ..models import CITestResult

logger = logging.getLogger(__name__)


def check_arguments(variables: Iterable[str], x: str, y: str, z: Iterable[str]) -> tuple[str, ...]:
    known = set(variables)
    cond = tuple(z)
    for name in (x, y, *cond):
        if name not in known:
            raise InputError(f"unknown variable {name!r}")
    if x == y:
        raise InputError("x and y must differ")
    if x in cond or y in cond:
        raise InputError("x and y must not be in the conditioning set")
    return cond


class ConditionalIndependenceTest(ABC):
    """Callable CI test bound to one data source, memoizing (x, y, z) queries."""

    name = "base"

    def __init__(self, data: Dataset | None = None) -> None:
        self.data = data
        self._cache: dict[tuple[str, str, frozenset[str]], CITestResult] = {}
        self.n_flagged = 0

    @property
    def variables(self) -> list[str]:
        if self.data is None:
            return []
        return self.data.columns

    def __call__(self, x: str, y: str, z: Iterable[str] = ()) -> CITestResult:
        cond = check_arguments(self.variables, x, y, z)
        a, b = (x, y) if x <= y else (y, x)
        key = (a, b, frozenset(cond))
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        result = self._run(a, b, tuple(sorted(cond)))
        if result.flag is not None:
            self.n_flagged += 1
            logger.debug("%s(%s, %s | %s) flagged %s", self.name, a, b, sorted(cond), result.flag)
        self._cache[key] = result
        return result

    @property
    def n_calls(self) -> int:
        return len(self._cache)

    @abstractmethod
    def _run(self, x: str, y: str, z: tuple[str, ...]) -> CITestResult:
        raise NotImplementedError
