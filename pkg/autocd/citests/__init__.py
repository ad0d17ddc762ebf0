from __future__ import annotations

from ..dataset import Dataset
from ..errors import ConfigError
from .base import ConditionalIndependenceTest
from .fisherz import FisherZTest, fisher_z_test
from .gsquared import GSquaredTest, g_squared_test
from .mixed import AutoCITest
from .oracle import OracleCITest
from .regression import RegressionCITest, regression_ci_test

__all__ = [
    "AutoCITest",
    "ConditionalIndependenceTest",
    "FisherZTest",
    "GSquaredTest",
    "OracleCITest",
    "RegressionCITest",
    "create_ci_test",
    "fisher_z_test",
    "g_squared_test",
    "regression_ci_test",
]


def create_ci_test(name: str | None, data: Dataset) -> ConditionalIndependenceTest:
    test_name = (name or "auto").strip().lower()
    if test_name in {"fisher_z", "fisherz", "fisher-z"}:
        return FisherZTest(data)
    if test_name in {"g_squared", "g2", "gsq", "g-squared"}:
        return GSquaredTest(data)
    if test_name in {"regression", "regression_ci", "lrt"}:
        return RegressionCITest(data)
    if test_name == "auto":
        return AutoCITest(data)
    raise ConfigError(f"Unknown CI test: {test_name}")
