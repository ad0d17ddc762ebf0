import unittest

import numpy as np

from autocd.dataset import CONTINUOUS, Dataset
from autocd.errors import ConfigError, DiscoveryError, SampleSizeError, UnsupportedKindError
from autocd.graph import Edge, GraphKind, Mark, MixedGraph, Node, cpdag_of
from autocd.models import GroundTruth, SimSpec
from autocd.sim import (
    ground_truth_from_json,
    ground_truth_to_json,
    lag_embed,
    linear_gaussian_sample,
    random_dag,
    random_lagged_dag,
    resimulate_fit,
    simulate_ts,
    spectral_radius,
    true_marginal,
)


def _two_variable_truth(coef: float = 0.5) -> GroundTruth:
    """x drives itself and y one step later; y has no memory."""
    nodes = [Node.lagged(v, lag) for lag in (1, 0) for v in ("x", "y")]
    return GroundTruth(
        spec=SimSpec(n_vars=2, max_lag=1, n_samples=500, burn_in=50, seed=3),
        variables=["x", "y"],
        lagged_dag=MixedGraph.dag(nodes, [("x:1", "x:0"), ("x:1", "y:0")]),
        coefficients={("x:1", "x:0"): coef, ("x:1", "y:0"): 0.8},
        target="y:0",
    )


class StructureTests(unittest.TestCase):
    def test_spectral_radius(self) -> None:
        self.assertAlmostEqual(spectral_radius(np.array([[[0.5]]])), 0.5)
        # x_t = 0.5 x_{t-1} + 0.3 x_{t-2}
        coefs = np.array([[[0.5]], [[0.3]]])
        expected = max(abs(np.roots([1.0, -0.5, -0.3])))
        self.assertAlmostEqual(spectral_radius(coefs), expected)

    def test_random_lagged_dag(self) -> None:
        spec = SimSpec(n_vars=5, max_lag=2, seed=1)
        gt = random_lagged_dag(spec)
        self.assertEqual(gt.lagged_dag.kind, GraphKind.DAG)
        self.assertEqual(len(gt.lagged_dag), 15)
        self.assertTrue(gt.target.endswith(":0"))
        self.assertLess(spectral_radius(gt.lag_coefficients()), 1.0)
        for v in gt.variables:
            auto = gt.coefficients[(f"{v}:1", f"{v}:0")]
            self.assertTrue(spec.autocorr_range[0] <= auto <= spec.autocorr_range[1])
        in_degree: dict[str, int] = {}
        for _, child in gt.coefficients:
            in_degree[child] = in_degree.get(child, 0) + 1
        self.assertLessEqual(max(in_degree.values()), spec.max_degree)
        # lag-1 arcs repeat one tier back inside the window
        for parent, child in gt.coefficients:
            if parent.endswith(":1"):
                shifted = (parent.replace(":1", ":2"), child.replace(":0", ":1"))
                self.assertTrue(gt.lagged_dag.is_directed(*shifted))

    def test_degree_statistics_across_seeds(self) -> None:
        for avg in (2.0, 1.5):
            per_lag_means = []
            for seed in range(30):
                spec = SimSpec(avg_degree_per_lag=avg, seed=seed)
                gt = random_lagged_dag(spec)
                per_lag = [0] * spec.max_lag
                in_degree = dict.fromkeys(gt.variables, 0)
                for parent, child in gt.coefficients:
                    per_lag[int(parent.rsplit(":", 1)[1]) - 1] += 1
                    in_degree[child.rsplit(":", 1)[0]] += 1
                self.assertLessEqual(max(in_degree.values()), spec.max_degree)
                per_lag_means.extend(count / spec.n_vars for count in per_lag)
            self.assertAlmostEqual(float(np.mean(per_lag_means)), avg, delta=0.05)
            self.assertLessEqual(max(abs(m - avg) for m in per_lag_means), 0.1)

    def test_same_spec_same_truth(self) -> None:
        spec = SimSpec(n_vars=4, seed=7)
        self.assertEqual(random_lagged_dag(spec).coefficients, random_lagged_dag(spec).coefficients)
        other = random_lagged_dag(SimSpec(n_vars=4, seed=8))
        self.assertNotEqual(random_lagged_dag(spec).coefficients, other.coefficients)

    def test_spec_checks(self) -> None:
        with self.assertRaises(ConfigError):
            SimSpec(max_lag=0)
        with self.assertRaises(ConfigError):
            SimSpec(coef_range=(0.5, 1.5))
        with self.assertRaises(ConfigError):
            random_lagged_dag(SimSpec(n_vars=3, avg_degree_per_lag=3.0, max_degree=1))

    def test_truth_json(self) -> None:
        gt = random_lagged_dag(SimSpec(n_vars=3, seed=2))
        back = ground_truth_from_json(ground_truth_to_json(gt))
        self.assertEqual(back.lagged_dag, gt.lagged_dag)
        self.assertEqual(back.coefficients, gt.coefficients)
        self.assertEqual(back.spec, gt.spec)
        self.assertEqual(back.target, gt.target)


class SeriesTests(unittest.TestCase):
    def test_simulate_shape_and_seed(self) -> None:
        gt = _two_variable_truth()
        ts = simulate_ts(gt)
        self.assertEqual(ts.columns, ["x", "y"])
        self.assertEqual(ts.n_rows, 500)
        np.testing.assert_array_equal(ts.values("x"), simulate_ts(gt).values("x"))
        self.assertFalse(np.array_equal(ts.values("x"), simulate_ts(gt, seed=4).values("x")))

    def test_simulated_dependence_follows_coefficients(self) -> None:
        ts = simulate_ts(_two_variable_truth(), n_samples=5000)
        x, y = ts.values("x"), ts.values("y")
        slope = np.polyfit(x[:-1], y[1:], 1)[0]
        self.assertAlmostEqual(slope, 0.8, delta=0.05)

    def test_nonstationary_process_rejected(self) -> None:
        with self.assertRaises(DiscoveryError):
            simulate_ts(_two_variable_truth(coef=1.2))

    def test_lag_embed(self) -> None:
        ts = Dataset.from_arrays({"x": np.arange(6.0)}, {"x": CONTINUOUS})
        embedded = lag_embed(ts, 2)
        self.assertEqual(embedded.columns, ["x:0", "x:1", "x:2"])
        np.testing.assert_array_equal(embedded.values("x:0"), [2.0, 3.0, 4.0, 5.0])
        np.testing.assert_array_equal(embedded.values("x:2"), [0.0, 1.0, 2.0, 3.0])
        self.assertEqual(embedded.lag_meta["x:1"].lag, 1)
        self.assertEqual(embedded.lag_meta["x:1"].variable, "x")
        with self.assertRaises(SampleSizeError):
            lag_embed(ts, 6)
        with self.assertRaises(ConfigError):
            lag_embed(ts, -1)


class MarginalTests(unittest.TestCase):
    def test_fully_observed_window_is_the_lagged_dag(self) -> None:
        for gt in (_two_variable_truth(), random_lagged_dag(SimSpec(n_vars=3, max_lag=1, seed=2))):
            mag = true_marginal(gt, gt.lagged_dag.node_ids)
            self.assertEqual(mag, gt.lagged_dag.with_kind(GraphKind.MAG))

    def test_hidden_middle_of_chain_gives_directed_edge(self) -> None:
        nodes = [Node.lagged("x", lag) for lag in (2, 1, 0)]
        gt = GroundTruth(
            spec=SimSpec(n_vars=1, max_lag=2, seed=0),
            variables=["x"],
            lagged_dag=MixedGraph.dag(nodes, [("x:2", "x:1"), ("x:1", "x:0")]),
            coefficients={("x:1", "x:0"): 0.5},
            target="x:0",
        )
        mag = true_marginal(gt, ["x:2", "x:0"])
        self.assertEqual(mag.edges, [Edge("x:2", "x:0", Mark.TAIL, Mark.ARROW)])

    def test_unobserved_common_cause_becomes_bidirected(self) -> None:
        mag = true_marginal(_two_variable_truth(), ["x:0", "y:0"])
        self.assertEqual(mag.edges, [Edge("x:0", "y:0", Mark.ARROW, Mark.ARROW)])


class ResimulationTests(unittest.TestCase):
    def test_fit_recovers_coefficients(self) -> None:
        g = MixedGraph.dag("abc", [("a", "b"), ("b", "c")])
        d = linear_gaussian_sample(g, 4000, seed=5)
        generator = resimulate_fit(d, g)
        coefs = generator.coefficients()
        self.assertEqual(set(coefs), {("a", "b"), ("b", "c")})
        sample = generator.sample(4000, seed=1)
        self.assertEqual(sample.columns, ["a", "b", "c"])
        refit = resimulate_fit(sample, g).coefficients()
        for key, value in coefs.items():
            self.assertAlmostEqual(refit[key], value, delta=0.1)
        np.testing.assert_array_equal(sample.values("c"), generator.sample(4000, seed=1).values("c"))

    def test_needs_dag(self) -> None:
        g = MixedGraph.dag("ab", [("a", "b")])
        d = linear_gaussian_sample(g, 50)
        with self.assertRaises(UnsupportedKindError):
            resimulate_fit(d, cpdag_of(g))


class RandomDagTests(unittest.TestCase):
    def test_random_dag_is_seeded_dag(self) -> None:
        g = random_dag(8, 0.4, seed=2)
        self.assertEqual(g.kind, GraphKind.DAG)
        self.assertEqual(g.node_ids[0], "X1")
        self.assertEqual(g, random_dag(8, 0.4, seed=2))
        self.assertEqual(random_dag(5, 0.0).n_edges, 0)
        self.assertEqual(random_dag(5, 1.0).n_edges, 10)

    def test_sample_needs_dag(self) -> None:
        g = random_dag(3, 1.0)
        with self.assertRaises(UnsupportedKindError):
            linear_gaussian_sample(cpdag_of(g), 10)


if __name__ == "__main__":
    unittest.main()
