import tempfile
import unittest
from pathlib import Path

import joblib
import numpy as np

from autocd.dataset import CONTINUOUS, Dataset, categorical
from autocd.errors import ConfigError, InputError, SampleSizeError
from autocd.learner import constant_model, load_model, make_folds, predict, save_model, train_forest
from autocd.models import ForestSpec
from autocd.stats import r2_score


def _regression_data(n: int = 400, seed: int = 0) -> Dataset:
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n)
    w = rng.standard_normal(n)
    y = 2.0 * x + 0.1 * rng.standard_normal(n)
    return Dataset.from_arrays({"x": x, "w": w, "y": y}, dict.fromkeys(["x", "w", "y"], CONTINUOUS))


class FoldTests(unittest.TestCase):
    def test_folds_cover_rows_and_are_seeded(self) -> None:
        d = _regression_data(50)
        plan = make_folds(d, "y", k=5, seed=3)
        self.assertEqual(sorted(set(plan.assignments.tolist())), [0, 1, 2, 3, 4])
        self.assertEqual(plan, make_folds(d, "y", k=5, seed=3))
        self.assertNotEqual(plan, make_folds(d, "y", k=5, seed=4))
        for fold, train, test in plan:
            self.assertEqual(len(train) + len(test), 50)
            self.assertFalse(set(train) & set(test))

    def test_stratified_for_categorical_target(self) -> None:
        labels = np.array(["a"] * 20 + ["b"] * 10)
        d = Dataset.from_arrays(
            {"x": np.arange(30.0), "c": labels},
            {"x": CONTINUOUS, "c": categorical(["a", "b"])},
        )
        plan = make_folds(d, "c", k=5, seed=0)
        for fold in range(5):
            rows = plan.test_rows(fold)
            self.assertEqual(int(np.sum(labels[rows] == "b")), 2)

    def test_no_target_gives_plain_shuffled_folds(self) -> None:
        labels = np.array([0] * 24 + [1] * 6)
        d = Dataset.from_arrays(
            {"c": labels, "x": np.arange(30.0)},
            {"c": categorical([0, 1]), "x": CONTINUOUS},
        )
        plain = make_folds(d, k=3, seed=1)
        self.assertEqual(plain, make_folds(d, "x", k=3, seed=1))
        self.assertNotEqual(plain, make_folds(d, "c", k=3, seed=1))
        with self.assertRaises(InputError):
            make_folds(d, "nope", k=3)

    def test_fold_argument_checks(self) -> None:
        d = _regression_data(4)
        with self.assertRaises(ConfigError):
            make_folds(d, "y", k=1)
        with self.assertRaises(SampleSizeError):
            make_folds(d, "y", k=5)


class ForestTests(unittest.TestCase):
    def test_regression_forest_generalises(self) -> None:
        train, test = _regression_data(500).split(100)
        model = train_forest(train, "y", ["x", "w"], ForestSpec(n_trees=50, seed=1))
        self.assertEqual(model.kind, "regression")
        self.assertGreater(r2_score(test.values("y"), predict(model, test).values), 0.8)

    def test_same_seed_same_predictions(self) -> None:
        d = _regression_data(200)
        spec = ForestSpec(n_trees=20, seed=5)
        first = predict(train_forest(d, "y", ["x", "w"], spec), d).values
        second = predict(train_forest(d, "y", ["x", "w"], spec), d).values
        np.testing.assert_array_equal(first, second)

    def test_classifier_probabilities_follow_levels(self) -> None:
        rng = np.random.default_rng(2)
        x = rng.standard_normal(300)
        c = np.where(x > 0.5, "hi", np.where(x < -0.5, "lo", "mid"))
        d = Dataset.from_arrays({"x": x, "c": c}, {"x": CONTINUOUS, "c": categorical(["hi", "lo", "mid"])})
        model = train_forest(d, "c", ["x"], ForestSpec(n_trees=20))
        pred = predict(model, d)
        assert pred.proba is not None
        self.assertEqual(pred.proba.shape, (300, 3))
        np.testing.assert_allclose(pred.proba.sum(axis=1), 1.0)
        self.assertGreater(float(np.mean(pred.values == d.codes("c"))), 0.9)

    def test_constant_target_is_degenerate(self) -> None:
        d = Dataset.from_arrays({"x": np.arange(10.0), "y": np.full(10, 3.0)}, {"x": CONTINUOUS, "y": CONTINUOUS})
        model = train_forest(d, "y", ["x"], ForestSpec(n_trees=5))
        self.assertTrue(model.degenerate)
        np.testing.assert_array_equal(predict(model, d).values, np.full(10, 3.0))

    def test_constant_model_predicts_mean(self) -> None:
        d = _regression_data(40)
        model = constant_model(d, "y")
        self.assertAlmostEqual(float(predict(model, d).values[0]), float(np.mean(d.values("y"))))

    def test_argument_checks(self) -> None:
        d = _regression_data(40)
        with self.assertRaises(InputError):
            train_forest(d, "y", [], ForestSpec())
        with self.assertRaises(InputError):
            train_forest(d, "y", ["y"], ForestSpec())
        with self.assertRaises(ConfigError):
            ForestSpec(n_trees=0)


class PersistenceTests(unittest.TestCase):
    def test_save_and_load(self) -> None:
        d = _regression_data(100)
        model = train_forest(d, "y", ["x"], ForestSpec(n_trees=10, seed=2))
        path = Path(tempfile.mkdtemp(prefix="autocd-test-model-")) / "m.joblib"
        save_model(model, path)
        loaded = load_model(path)
        np.testing.assert_array_equal(predict(loaded, d).values, predict(model, d).values)

    def test_rejects_unknown_format(self) -> None:
        path = Path(tempfile.mkdtemp(prefix="autocd-test-model-")) / "bad.joblib"
        joblib.dump({"format_version": 999, "model": None}, path)
        with self.assertRaises(InputError):
            load_model(path)


if __name__ == "__main__":
    unittest.main()
