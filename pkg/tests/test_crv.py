import unittest

import numpy as np

from autocd.crv import (
    answer_query,
    block_rows,
    bootstrap_graphs,
    causal_ancestors,
    default_block_len,
    edge_confidences,
    edge_consistent,
    export_graph,
    marks_compatible,
    parse_graph,
    target_neighbors,
)
from autocd.dataset import Dataset
from autocd.errors import DiscoveryError, GraphFormatError, InputError
from autocd.graph import Edge, GraphKind, Mark, MixedGraph, Node
from autocd.models import ClConfig
from autocd.sim import linear_gaussian_sample

T, A, C = Mark.TAIL, Mark.ARROW, Mark.CIRCLE


def _pag(*edges: Edge, nodes: str = "ab") -> MixedGraph:
    return MixedGraph(list(nodes), list(edges), GraphKind.PAG)


def _lagged_pag() -> MixedGraph:
    nodes = [Node.lagged("x", 1), Node.lagged("y", 1), Node.lagged("y", 0), Node(id="z", label="z")]
    edges = [
        Edge("x:1", "y:0", T, A),
        Edge("y:1", "y:0", C, A),
        Edge("z", "y:0", A, A),
    ]
    return MixedGraph(nodes, edges, GraphKind.PAG)


class ConsistencyTests(unittest.TestCase):
    def test_mark_compatibility_table(self) -> None:
        expected = {
            (T, T): True, (T, A): False, (T, C): True,
            (A, T): False, (A, A): True, (A, C): True,
            (C, T): True, (C, A): True, (C, C): True,
        }
        for (m1, m2), ok in expected.items():
            self.assertEqual(marks_compatible(m1, m2), ok, f"{m1.value}/{m2.value}")

    def test_consistency_reads_marks_by_node(self) -> None:
        e = Edge("a", "b", T, A)
        self.assertTrue(edge_consistent(e, Edge("b", "a", A, C)))
        self.assertFalse(edge_consistent(e, Edge("b", "a", T, A)))
        self.assertFalse(edge_consistent(e, Edge("a", "c", T, A)))

    def test_exact_and_consistent_frequencies(self) -> None:
        winner = _pag(Edge("a", "b", T, A))
        population = (
            [_pag(Edge("a", "b", T, A))] * 4
            + [_pag(Edge("a", "b", C, A))] * 4
            + [_pag(Edge("a", "b", A, T))] * 2
        )
        [conf] = edge_confidences(winner, population)
        self.assertEqual(conf.exact_freq, 0.4)
        self.assertEqual(conf.consistency_freq, 0.8)
        self.assertEqual(conf.n_boot, 10)

    def test_missing_edge_counts_against(self) -> None:
        winner = _pag(Edge("a", "b", C, C))
        [conf] = edge_confidences(winner, [_pag(), _pag(Edge("a", "b", T, A))])
        self.assertEqual(conf.exact_freq, 0.0)
        self.assertEqual(conf.consistency_freq, 0.5)

    def test_population_checks(self) -> None:
        winner = _pag(Edge("a", "b", T, A))
        with self.assertRaises(InputError):
            edge_confidences(winner, [])
        with self.assertRaises(InputError):
            edge_confidences(winner, [_pag(nodes="abc")])


class BootstrapTests(unittest.TestCase):
    def _data(self) -> Dataset:
        g = MixedGraph.dag("abc", [("a", "b"), ("b", "c")])
        return linear_gaussian_sample(g, 300, seed=0)

    def test_population_is_seeded(self) -> None:
        d = self._data()
        cfg = ClConfig(alpha=0.01, ci="fisher_z")
        first = bootstrap_graphs(d, cfg, n_boot=5, seed=2)
        second = bootstrap_graphs(d, cfg, n_boot=5, seed=2)
        self.assertEqual(len(first), 5)
        self.assertEqual(first.n_failed, 0)
        self.assertEqual(list(first), list(second))

    def test_block_bootstrap_rows(self) -> None:
        d = self._data()
        rows = block_rows(d, np.random.default_rng(0), 4)
        self.assertEqual(len(rows), d.n_rows)
        self.assertTrue(np.all(np.diff(rows[:4]) == 1))
        self.assertEqual(default_block_len(2), 6)
        population = bootstrap_graphs(d, ClConfig(ci="fisher_z"), n_boot=3, block_len=6)
        self.assertEqual(len(population), 3)

    def test_custom_resampler(self) -> None:
        d = self._data()
        population = bootstrap_graphs(
            d, ClConfig(ci="fisher_z"), n_boot=2, resample=lambda data, rng: np.arange(data.n_rows)
        )
        self.assertEqual(population[0], population[1])

    def test_failures(self) -> None:
        d = self._data()
        with self.assertRaises(InputError):
            bootstrap_graphs(d, ClConfig(), n_boot=0)
        with self.assertRaises(DiscoveryError):
            bootstrap_graphs(d, ClConfig(ci="g_squared"), n_boot=2)


class QueryTests(unittest.TestCase):
    def setUp(self) -> None:
        self.dag = MixedGraph.dag("abcd", [("a", "b"), ("b", "c"), ("d", "c")])

    def test_directed_path_with_witness(self) -> None:
        answer = answer_query(self.dag, "directed_path", "a", "c")
        self.assertTrue(answer.answer)
        self.assertEqual(answer.witness, ["a", "b", "c"])
        assert answer.subgraph is not None
        self.assertEqual(answer.subgraph.node_ids, ["a", "b", "c"])
        self.assertEqual(answer.subgraph.n_edges, 2)
        self.assertFalse(answer_query(self.dag, "directed_path", "c", "a").answer)

    def test_edge_and_any_path(self) -> None:
        edge = answer_query(self.dag, "edge", "b", "a")
        self.assertEqual(edge.witness, Edge("b", "a", A, T))
        self.assertEqual(edge.to_dict()["witness"]["mark_a"], "arrow")
        self.assertFalse(answer_query(self.dag, "edge", "a", "d").answer)
        self.assertTrue(answer_query(self.dag, "any_path", "a", "d").answer)

    def test_potentially_directed_path_in_pag(self) -> None:
        g = _pag(Edge("a", "b", C, C), Edge("b", "c", C, A), nodes="abc")
        self.assertTrue(answer_query(g, "potentially_directed_path", "a", "c").answer)
        self.assertFalse(answer_query(g, "potentially_directed_path", "c", "a").answer)
        self.assertFalse(answer_query(g, "directed_path", "a", "c").answer)

    def test_rejects_bad_queries(self) -> None:
        with self.assertRaises(InputError):
            answer_query(self.dag, "ancestor", "a", "b")
        with self.assertRaises(InputError):
            answer_query(self.dag, "edge", "a", "a")
        with self.assertRaises(InputError):
            answer_query(self.dag, "edge", "a", "zz")

    def test_ancestors_and_neighbors(self) -> None:
        self.assertEqual(causal_ancestors(self.dag, "c"), ["a", "b", "d"])
        self.assertEqual(target_neighbors(self.dag, "c"), {"<--": ["b", "d"]})


class ExportTests(unittest.TestCase):
    def test_formats_preserve_graph(self) -> None:
        g = _lagged_pag()
        for fmt in ("json", "cytoscape_json", "graphml"):
            back = parse_graph(export_graph(g, format=fmt), fmt)
            self.assertEqual(back, g, fmt)
            self.assertEqual(back.node("x:1").lag, 1)

    def test_confidences_become_weights(self) -> None:
        g = _lagged_pag()
        confs = edge_confidences(g, [g, g])
        text = export_graph(g, confs, format="graphml", target="y:0").decode("utf-8")
        self.assertIn("weight", text)
        self.assertIn("target", text)
        dot = export_graph(g, confs, format="dot_like_text").decode("utf-8")
        self.assertIn('arrowtail="odot"', dot)
        self.assertIn("consistency=1", dot)

    def test_rejects_unknown_format(self) -> None:
        with self.assertRaises(InputError):
            export_graph(_lagged_pag(), format="svg")
        with self.assertRaises(InputError):
            parse_graph("{}", "dot_like_text")

    def test_parse_errors_carry_location(self) -> None:
        with self.assertRaises(GraphFormatError) as ctx:
            parse_graph('{\n  "data": [,\n}', "cytoscape_json", source="g.cyjs")
        self.assertEqual(ctx.exception.line, 2)
        self.assertTrue(str(ctx.exception).startswith("g.cyjs:2:"))
        with self.assertRaises(GraphFormatError):
            parse_graph("<graphml>", "graphml")


if __name__ == "__main__":
    unittest.main()
