import math
import unittest

import numpy as np
from scipy import stats as scipy_stats

from autocd.citests import (
    AutoCITest,
    FisherZTest,
    GSquaredTest,
    OracleCITest,
    RegressionCITest,
    create_ci_test,
    fisher_z_test,
    g_squared_test,
    regression_ci_test,
)
from autocd.dataset import CONTINUOUS, Dataset, categorical
from autocd.errors import ConfigError, InputError
from autocd.graph import MixedGraph


def _continuous(**cols: np.ndarray) -> Dataset:
    return Dataset.from_arrays(cols, dict.fromkeys(cols, CONTINUOUS))


def _categorical(**cols: np.ndarray) -> Dataset:
    return Dataset.from_arrays(cols, {k: categorical(sorted(set(v.tolist()))) for k, v in cols.items()})


class FisherZTests(unittest.TestCase):
    def test_statistic_matches_closed_form(self) -> None:
        rng = np.random.default_rng(7)
        x = rng.standard_normal(150)
        y = 0.3 * x + rng.standard_normal(150)
        d = _continuous(x=x, y=y)
        r = float(np.corrcoef(x, y)[0, 1])
        expected = 0.5 * math.log((1 + r) / (1 - r)) * math.sqrt(150 - 3)
        result = fisher_z_test(d, "x", "y")
        self.assertAlmostEqual(result.statistic, expected, delta=1e-10)
        self.assertAlmostEqual(result.p_value, 2 * scipy_stats.norm.sf(abs(expected)), delta=1e-12)
        self.assertEqual(result.dof, 147)

    def test_partial_correlation_matches_residuals(self) -> None:
        rng = np.random.default_rng(3)
        z = rng.standard_normal(200)
        x = z + rng.standard_normal(200)
        y = z + 0.5 * x + rng.standard_normal(200)
        d = _continuous(x=x, y=y, z=z)
        design = np.column_stack([np.ones(200), z])
        rx = x - design @ np.linalg.lstsq(design, x, rcond=None)[0]
        ry = y - design @ np.linalg.lstsq(design, y, rcond=None)[0]
        r = float(np.corrcoef(rx, ry)[0, 1])
        expected = 0.5 * math.log((1 + r) / (1 - r)) * math.sqrt(200 - 1 - 3)
        self.assertAlmostEqual(fisher_z_test(d, "x", "y", ["z"]).statistic, expected, places=8)

    def test_conditional_independence_detected(self) -> None:
        rng = np.random.default_rng(11)
        z = rng.standard_normal(2000)
        x = z + rng.standard_normal(2000)
        y = z + rng.standard_normal(2000)
        d = _continuous(x=x, y=y, z=z)
        self.assertLess(fisher_z_test(d, "x", "y").p_value, 1e-6)
        self.assertGreater(fisher_z_test(d, "x", "y", ["z"]).p_value, 0.001)

    def test_null_p_values_are_uniform(self) -> None:
        p_values = []
        for seed in range(500):
            rng = np.random.default_rng(seed)
            d = _continuous(x=rng.standard_normal(100), y=rng.standard_normal(100), z=rng.standard_normal(100))
            p_values.append(fisher_z_test(d, "x", "y", ["z"]).p_value)
        self.assertGreater(scipy_stats.kstest(p_values, "uniform").pvalue, 0.001)

    def test_degenerate_conditioning(self) -> None:
        rng = np.random.default_rng(0)
        z = rng.standard_normal(50)
        d = _continuous(x=z.copy(), y=rng.standard_normal(50), z=z)
        result = fisher_z_test(d, "x", "y", ["z"])
        self.assertEqual(result.flag, "degenerate")
        self.assertEqual(result.p_value, 1.0)

    def test_rejects_categorical(self) -> None:
        d = Dataset.from_arrays(
            {"x": np.array([0.1, 0.2, 0.3, 0.4, 0.5]), "c": np.array(["a", "b", "a", "b", "a"])},
            {"x": CONTINUOUS, "c": categorical(["a", "b"])},
        )
        with self.assertRaises(InputError):
            FisherZTest(d)

    def test_bound_test_agrees_with_function(self) -> None:
        rng = np.random.default_rng(5)
        d = _continuous(a=rng.standard_normal(80), b=rng.standard_normal(80), c=rng.standard_normal(80))
        test = FisherZTest(d)
        self.assertAlmostEqual(test("a", "b", ["c"]).p_value, fisher_z_test(d, "a", "b", ["c"]).p_value, places=10)


class GSquaredTests(unittest.TestCase):
    def test_dependent_categories(self) -> None:
        rng = np.random.default_rng(1)
        x = rng.integers(0, 3, 600)
        noise = rng.integers(0, 3, 600)
        y = np.where(rng.random(600) < 0.7, x, noise)
        d = _categorical(x=x, y=y)
        self.assertLess(g_squared_test(d, "x", "y").p_value, 1e-6)

    def test_null_p_values_are_uniform(self) -> None:
        p_values = []
        for seed in range(500):
            rng = np.random.default_rng(seed)
            d = _categorical(x=rng.integers(0, 3, 300), y=rng.integers(0, 3, 300))
            p_values.append(g_squared_test(d, "x", "y").p_value)
        self.assertGreater(scipy_stats.kstest(p_values, "uniform").pvalue, 0.001)

    def test_low_power_flag(self) -> None:
        rng = np.random.default_rng(2)
        d = _categorical(x=rng.integers(0, 4, 30), y=rng.integers(0, 4, 30), z=rng.integers(0, 4, 30))
        result = g_squared_test(d, "x", "y", ["z"])
        self.assertEqual(result.flag, "low_power")
        self.assertEqual(result.p_value, 1.0)

    def test_rejects_continuous(self) -> None:
        with self.assertRaises(InputError):
            GSquaredTest(_continuous(x=np.arange(5.0), y=np.arange(5.0)))


class RegressionTests(unittest.TestCase):
    def test_mixed_dependence(self) -> None:
        rng = np.random.default_rng(4)
        x = rng.standard_normal(400)
        y = np.where(x + 0.5 * rng.standard_normal(400) > 0, "hi", "lo")
        d = Dataset.from_arrays({"x": x, "y": y}, {"x": CONTINUOUS, "y": categorical(["hi", "lo"])})
        self.assertLess(regression_ci_test(d, "x", "y").p_value, 1e-6)

    def test_mixed_independence(self) -> None:
        rng = np.random.default_rng(8)
        x = rng.standard_normal(400)
        y = rng.choice(["a", "b", "c"], 400)
        d = Dataset.from_arrays({"x": x, "y": y}, {"x": CONTINUOUS, "y": categorical(["a", "b", "c"])})
        self.assertGreater(RegressionCITest(d)("x", "y").p_value, 0.001)


class DispatchTests(unittest.TestCase):
    def test_create_ci_test(self) -> None:
        d = _continuous(x=np.arange(10.0), y=np.arange(10.0) ** 2)
        self.assertIsInstance(create_ci_test("fisher_z", d), FisherZTest)
        self.assertIsInstance(create_ci_test(None, d), AutoCITest)
        self.assertIsInstance(create_ci_test("regression", d), RegressionCITest)
        with self.assertRaises(ConfigError):
            create_ci_test("kci", d)

    def test_auto_matches_specialised_tests(self) -> None:
        rng = np.random.default_rng(9)
        x = rng.standard_normal(200)
        y = x + rng.standard_normal(200)
        c = rng.integers(0, 2, 200)
        e = rng.integers(0, 2, 200)
        d = Dataset.from_arrays(
            {"x": x, "y": y, "c": c, "e": e},
            {"x": CONTINUOUS, "y": CONTINUOUS, "c": categorical([0, 1]), "e": categorical([0, 1])},
        )
        auto = AutoCITest(d)
        self.assertAlmostEqual(auto("x", "y").p_value, fisher_z_test(d.select(["x", "y"]), "x", "y").p_value)
        self.assertAlmostEqual(auto("c", "e").p_value, g_squared_test(d, "c", "e").p_value)
        self.assertAlmostEqual(auto("x", "c").p_value, regression_ci_test(d, "x", "c").p_value)

    def test_argument_checks_and_cache(self) -> None:
        rng = np.random.default_rng(6)
        d = _continuous(a=rng.standard_normal(30), b=rng.standard_normal(30), c=rng.standard_normal(30))
        test = FisherZTest(d)
        with self.assertRaises(InputError):
            test("a", "a")
        with self.assertRaises(InputError):
            test("a", "b", ["a"])
        with self.assertRaises(InputError):
            test("a", "zz")
        first = test("a", "b", ["c"])
        self.assertIs(test("b", "a", ["c"]), first)
        self.assertEqual(test.n_calls, 1)

    def test_oracle_reads_separation(self) -> None:
        g = MixedGraph.dag("abc", [("a", "b"), ("b", "c")])
        oracle = OracleCITest(g)
        self.assertEqual(oracle("a", "c").p_value, 0.0)
        self.assertEqual(oracle("a", "c", ["b"]).p_value, 1.0)
        self.assertEqual(oracle.variables, ["a", "b", "c"])


if __name__ == "__main__":
    unittest.main()
