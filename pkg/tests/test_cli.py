import io
import json
import tempfile
import unittest
from contextlib import redirect_stderr, redirect_stdout
from pathlib import Path

from autocd.cli import main
from autocd.crv import parse_graph
from autocd.dataset import write_csv
from autocd.graph import MixedGraph, to_json
from autocd.sim import linear_gaussian_sample


def _run(argv: list[str]) -> tuple[int, str, str]:
    out, err = io.StringIO(), io.StringIO()
    with redirect_stdout(out), redirect_stderr(err):
        rc = main(argv)
    return rc, out.getvalue(), err.getvalue()


class CliTests(unittest.TestCase):
    def setUp(self) -> None:
        self.root = Path(tempfile.mkdtemp(prefix="autocd-test-cli-"))
        self.graph_path = self.root / "g.json"
        dag = MixedGraph.dag("abcd", [("a", "b"), ("b", "c"), ("d", "c")])
        self.graph_path.write_text(to_json(dag), encoding="utf-8")

    def test_simulate_json(self) -> None:
        spec = self.root / "spec.json"
        spec.write_text(json.dumps({"n_vars": 3, "max_lag": 1, "avg_degree_per_lag": 1.5, "n_samples": 200}), encoding="utf-8")
        rc, out, _ = _run(["simulate", "--config", str(spec), "--seed", "4", "--out", str(self.root / "sim"), "--json"])
        self.assertEqual(rc, 0)
        payload = json.loads(out)
        self.assertEqual(payload["rows"], 200)
        self.assertTrue(Path(payload["data"]).exists())
        truth = json.loads(Path(payload["truth"]).read_text(encoding="utf-8"))
        self.assertEqual(truth["spec"]["seed"], 4)
        self.assertEqual(truth["target"], payload["target"])

    def test_bad_spec_is_an_error(self) -> None:
        spec = self.root / "spec.json"
        spec.write_text(json.dumps({"n_vars": 3, "max_lag": 0}), encoding="utf-8")
        rc, out, err = _run(["simulate", "--config", str(spec)])
        self.assertEqual(rc, 1)
        self.assertEqual(out, "")
        self.assertTrue(err.startswith("error: "))

    def test_query(self) -> None:
        rc, out, _ = _run(["query", str(self.graph_path), "directed_path", "a", "c", "--json"])
        self.assertEqual(rc, 0)
        payload = json.loads(out)
        self.assertTrue(payload["answer"])
        self.assertEqual(payload["witness"], ["a", "b", "c"])
        rc, out, _ = _run(["query", str(self.graph_path), "edge", "a", "d"])
        self.assertEqual(rc, 0)
        self.assertIn("answer=False", out)
        rc, _, err = _run(["query", str(self.graph_path), "edge", "a", "a"])
        self.assertEqual(rc, 1)
        self.assertIn("differ", err)

    def test_export_to_stdout_and_file(self) -> None:
        rc, out, _ = _run(["export", str(self.graph_path), "--to", "cytoscape_json"])
        self.assertEqual(rc, 0)
        self.assertEqual(parse_graph(out, "cytoscape_json").skeleton(), {frozenset("ab"), frozenset("bc"), frozenset("cd")})
        target = self.root / "out" / "g.graphml"
        rc, out, _ = _run(["export", str(self.graph_path), "--to", "graphml", "--out", str(target), "--json"])
        self.assertEqual(rc, 0)
        self.assertEqual(json.loads(out)["path"], str(target))
        self.assertEqual(parse_graph(target.read_bytes(), "graphml").n_edges, 3)

    def test_unknown_graph_extension(self) -> None:
        odd = self.root / "g.txt"
        odd.write_text("{}", encoding="utf-8")
        rc, _, err = _run(["query", str(odd), "edge", "a", "b"])
        self.assertEqual(rc, 1)
        self.assertIn("--format", err)

    def test_discover(self) -> None:
        g = MixedGraph.dag("abc", [("a", "b"), ("c", "b")])
        csv_path, _ = write_csv(linear_gaussian_sample(g, 500, seed=3), self.root / "d.csv")
        argv = ["discover", str(csv_path), "--seed", "1", "--out", str(self.root / "runs"), "--ci", "fisher_z", "--alpha", "0.01", "--json"]
        rc, out, _ = _run(argv)
        self.assertEqual(rc, 0)
        payload = json.loads(out)
        self.assertEqual(payload["kind"], "cpdag")
        self.assertEqual(payload["config"], "pc_stable/fisher_z/a=0.01")
        learned = parse_graph(Path(payload["graph"]).read_bytes(), "json")
        self.assertTrue(learned.is_directed("a", "b"))
        self.assertTrue(learned.is_directed("c", "b"))

    def test_missing_seed_is_an_error(self) -> None:
        g = MixedGraph.dag("ab", [("a", "b")])
        csv_path, _ = write_csv(linear_gaussian_sample(g, 50), self.root / "d.csv")
        rc, _, err = _run(["discover", str(csv_path)])
        self.assertEqual(rc, 1)
        self.assertIn("seed", err)


if __name__ == "__main__":
    unittest.main()
