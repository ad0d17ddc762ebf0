from __future__ import annotations

from ..dataset import Dataset
from ..models import CITestResult
from .base import ConditionalIndependenceTest
from .fisherz import FisherZTest
from .gsquared import g_squared_test
from .regression import regression_ci_test


class AutoCITest(ConditionalIndependenceTest):
    """Dispatch on column types: fisher-z, g-squared, else the regression test."""

    name = "auto"

    def __init__(self, data: Dataset) -> None:
        super().__init__(data)
        continuous = [c for c in data.columns if not data.is_categorical(c)]
        self._fisher = FisherZTest(data.select(continuous)) if continuous else None

    def _run(self, x: str, y: str, z: tuple[str, ...]) -> CITestResult:
        assert self.data is not None
        kinds = {self.data.is_categorical(v) for v in (x, y, *z)}
        if kinds == {False} and self._fisher is not None:
            return self._fisher._run(x, y, z)
        if kinds == {True}:
            return g_squared_test(self.data, x, y, z)
        return regression_ci_test(self.data, x, y, z)
