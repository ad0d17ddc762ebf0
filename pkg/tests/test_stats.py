import itertools
import math
import unittest

import numpy as np

from autocd.errors import ConfigError, InputError
from autocd.stats import auroc_score, mutual_information_score, permutation_indistinguishable, r2_score


class ScoreTests(unittest.TestCase):
    def test_gaussian_mutual_information(self) -> None:
        rng = np.random.default_rng(0)
        y = rng.standard_normal(500)
        pred = y + rng.standard_normal(500)
        rho = float(np.corrcoef(y, pred)[0, 1])
        self.assertAlmostEqual(mutual_information_score(y, pred), -0.5 * math.log(1 - rho**2))

    def test_constant_prediction_scores_zero(self) -> None:
        y = np.arange(10.0)
        self.assertEqual(mutual_information_score(y, np.ones(10)), 0.0)
        self.assertEqual(mutual_information_score(np.array([0, 1, 0, 1]), np.zeros(4), categorical=True), 0.0)

    def test_categorical_mutual_information(self) -> None:
        y = np.array([0, 1] * 50)
        self.assertAlmostEqual(mutual_information_score(y, y, categorical=True), math.log(2))

    def test_perfect_prediction_mi_is_capped(self) -> None:
        y = np.arange(20.0)
        self.assertTrue(math.isfinite(mutual_information_score(y, y)))

    def test_r2(self) -> None:
        y = np.array([1.0, 2.0, 3.0, 4.0])
        self.assertEqual(r2_score(y, y), 1.0)
        self.assertEqual(r2_score(y, np.full(4, 2.5)), 0.0)
        with self.assertRaises(InputError):
            r2_score(y, y[:2])

    def test_auroc_binary_and_multiclass(self) -> None:
        self.assertEqual(auroc_score([0, 0, 1, 1], [0.1, 0.2, 0.8, 0.9]), 1.0)
        self.assertEqual(auroc_score([0, 1, 0, 1], [0.5, 0.5, 0.5, 0.5]), 0.5)
        proba = np.array([[0.8, 0.1, 0.1], [0.1, 0.8, 0.1], [0.1, 0.1, 0.8], [0.7, 0.2, 0.1]])
        self.assertEqual(auroc_score([0, 1, 2, 0], proba), 1.0)
        with self.assertRaises(InputError):
            auroc_score([1, 1, 1], [0.2, 0.4, 0.6])


class PermutationTests(unittest.TestCase):
    def test_identical_scores_are_indistinguishable(self) -> None:
        scores = np.linspace(0.1, 0.9, 25)
        p, same = permutation_indistinguishable(scores, scores, b=200, rng=1)
        self.assertEqual(p, 1.0)
        self.assertTrue(same)

    def test_clearly_better_scores_are_distinguished(self) -> None:
        best = np.full(30, 1.0)
        other = np.zeros(30)
        p, same = permutation_indistinguishable(best, other, b=1000, rng=np.random.default_rng(2))
        self.assertAlmostEqual(p, 1 / 1001)
        self.assertFalse(same)

    def test_p_value_matches_full_sign_flip_enumeration(self) -> None:
        diffs_cases = [
            np.array([0.3, -0.1, 0.25, 0.05, -0.2, 0.15, 0.4, -0.05, 0.1, 0.2]),
            np.array([0.12, -0.3, 0.07, 0.2, -0.15, 0.01, 0.09, -0.04, 0.11, -0.08, 0.05, 0.02]),
        ]
        for diffs in diffs_cases:
            observed = diffs.mean()
            flips = np.array(list(itertools.product((-1.0, 1.0), repeat=diffs.size)))
            exact = float(np.mean((flips * diffs).mean(axis=1) >= observed - 1e-12))
            other = np.linspace(0.0, 1.0, diffs.size)
            p, same = permutation_indistinguishable(other + diffs, other, b=20000, rng=5)
            self.assertAlmostEqual(p, exact, delta=0.015)
            self.assertEqual(same, p > 0.05)

    def test_same_generator_seed_gives_same_p(self) -> None:
        rng = np.random.default_rng(3)
        best = rng.standard_normal(40) + 0.1
        other = rng.standard_normal(40)
        first = permutation_indistinguishable(best, other, b=500, rng=11)
        second = permutation_indistinguishable(best, other, b=500, rng=11)
        self.assertEqual(first, second)

    def test_rejects_small_b_and_bad_shapes(self) -> None:
        with self.assertRaises(ConfigError):
            permutation_indistinguishable([1.0], [0.0], b=99)
        with self.assertRaises(InputError):
            permutation_indistinguishable([1.0, 2.0], [0.0], b=100)


if __name__ == "__main__":
    unittest.main()
