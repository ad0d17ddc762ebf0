import json
import tempfile
import unittest
from pathlib import Path

from autocd.config import (
    BenchConfig,
    bench_config_from_mapping,
    load_bench_config,
    load_pipeline_config,
    load_sim_spec,
    pipeline_config_from_mapping,
)
from autocd.errors import ConfigError


class PipelineConfigTests(unittest.TestCase):
    def setUp(self) -> None:
        self.root = Path(tempfile.mkdtemp(prefix="autocd-test-config-"))

    def _write(self, name: str, payload: dict) -> Path:
        path = self.root / name
        path.write_text(json.dumps(payload), encoding="utf-8")
        return path

    def test_defaults_and_relative_paths(self) -> None:
        path = self._write("run.json", {"data_path": "data.csv", "seed": 4, "cl": {"knowledge_path": "k.json"}})
        cfg = load_pipeline_config(path)
        self.assertEqual(cfg.data_path, str(self.root / "data.csv"))
        self.assertEqual(cfg.cl.knowledge_path, str(self.root / "k.json"))
        self.assertEqual(cfg.out_dir, str(self.root / "runs"))
        self.assertEqual(cfg.seed, 4)
        self.assertEqual(cfg.cl.algorithms, ["pc_stable", "fci"])
        self.assertEqual(len(cfg.afs.grid()), 8)
        self.assertEqual(len(cfg.cl.configs()), 4)
        self.assertEqual(cfg.oct.b, 1000)

    def test_overrides_and_hash(self) -> None:
        path = self._write("run.json", {"data_path": "data.csv", "seed": 1})
        first = load_pipeline_config(path, seed=9, out_dir="elsewhere")
        self.assertEqual(first.seed, 9)
        self.assertEqual(first.out_dir, "elsewhere")
        self.assertEqual(first.config_hash(), load_pipeline_config(path, seed=9, out_dir="elsewhere").config_hash())
        self.assertNotEqual(first.config_hash(), load_pipeline_config(path).config_hash())

    def test_validation(self) -> None:
        bad = [
            {"seed": 1},
            {"data_path": "d.csv"},
            {"data_path": "d.csv", "seed": 1, "max_lag": -1},
            {"data_path": "d.csv", "seed": 1, "max_lag": "auto"},
            {"data_path": "d.csv", "seed": 1, "oct": {"b": 50}},
            {"data_path": "d.csv", "seed": 1, "oct": {"k": 1}},
            {"data_path": "d.csv", "seed": 1, "cl": {"algorithms": ["ges"]}},
            {"data_path": "d.csv", "seed": 1, "cl": {"alphas": [1.5]}},
            {"data_path": "d.csv", "seed": 1, "afs": {"selectors": ["lasso"]}},
            {"data_path": "d.csv", "seed": 1, "bootstrap": {"n_boot": 0}},
        ]
        for mapping in bad:
            with self.assertRaises(ConfigError, msg=json.dumps(mapping)):
                pipeline_config_from_mapping(mapping)

    def test_auto_lag_with_target(self) -> None:
        cfg = pipeline_config_from_mapping({"data_path": "d.csv", "seed": 0, "max_lag": "auto", "target": "y"})
        self.assertEqual(cfg.max_lag, "auto")

    def test_unreadable_files(self) -> None:
        with self.assertRaises(ConfigError):
            load_pipeline_config(self.root / "missing.json")
        broken = self.root / "broken.json"
        broken.write_text('{"seed": 1,\n', encoding="utf-8")
        with self.assertRaises(ConfigError) as ctx:
            load_pipeline_config(broken)
        self.assertIn("broken.json:", str(ctx.exception))
        listing = self.root / "list.json"
        listing.write_text("[]", encoding="utf-8")
        with self.assertRaises(ConfigError):
            load_pipeline_config(listing)


class BenchConfigTests(unittest.TestCase):
    def test_defaults(self) -> None:
        cfg = load_bench_config(None, seed=3)
        self.assertEqual(cfg.seed, 3)
        self.assertEqual(cfg.node_counts, [20])
        self.assertEqual(cfg.cl.ci, "fisher_z")
        self.assertEqual(cfg.bootstrap.n_boot, 100)
        self.assertEqual(BenchConfig(seed=0).bootstrap.n_boot, 100)

    def test_sim_spec_per_replicate(self) -> None:
        cfg = bench_config_from_mapping({"seed": 1, "n_samples": 100, "holdout": 20, "sim": {"max_lag": 3}})
        first = cfg.sim_spec(5, 0)
        self.assertEqual(first.n_vars, 5)
        self.assertEqual(first.max_lag, 3)
        self.assertEqual(first.n_samples, 120)
        self.assertNotEqual(first.seed, cfg.sim_spec(5, 1).seed)
        self.assertEqual(first.seed, cfg.sim_spec(5, 0).seed)

    def test_validation(self) -> None:
        with self.assertRaises(ConfigError):
            bench_config_from_mapping({"replicates": 0})
        with self.assertRaises(ConfigError):
            bench_config_from_mapping({"sim": {"wobble": 1}})
        with self.assertRaises(ConfigError):
            bench_config_from_mapping({"sim": {"coef_range": [0.5, 2.0]}})


class SimSpecFileTests(unittest.TestCase):
    def test_load_sim_spec(self) -> None:
        path = Path(tempfile.mkdtemp(prefix="autocd-test-spec-")) / "spec.json"
        path.write_text(json.dumps({"n_vars": 4, "coef_range": [0.2, 0.4], "seed": 1}), encoding="utf-8")
        spec = load_sim_spec(path, seed=7)
        self.assertEqual(spec.n_vars, 4)
        self.assertEqual(spec.coef_range, (0.2, 0.4))
        self.assertEqual(spec.seed, 7)
        path.write_text(json.dumps({"n_vars": 4, "colour": "red"}), encoding="utf-8")
        with self.assertRaises(ConfigError):
            load_sim_spec(path)


if __name__ == "__main__":
    unittest.main()
