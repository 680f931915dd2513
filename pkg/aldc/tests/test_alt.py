"""
Threshold and partition tests, including randomized checks against
straightforward loop implementations.
"""

import math
import unittest

import numpy as np

from aldc.core import ALDCError, ClassifierError
from aldc.data.models import FeatureSet, Strategy, Threshold
from aldc.engine.alt import (
    BASELINE_TAU,
    SimilarityScores,
    compute_threshold,
    partition,
    score_unlabeled,
    threshold_for_strategy,
)
from aldc.engine.classifier import init_base_weights, init_novel_weights

R = math.sqrt(2.0) / 2.0


def _weights(base_rows, novel_rows, dim):
    base = init_base_weights(FeatureSet.from_arrays(base_rows, list(range(len(base_rows)))))
    novel_ids = list(range(len(base_rows), len(base_rows) + len(novel_rows)))
    return init_novel_weights(base, FeatureSet.from_arrays(novel_rows, novel_ids))


def _scores(s_base, s_novel, base_arg=None, novel_arg=None):
    n = len(s_base)
    return SimilarityScores(
        s_base=np.asarray(s_base, dtype=np.float64),
        base_arg=np.asarray(base_arg if base_arg is not None else [0] * n, dtype=np.int64),
        s_novel=np.asarray(s_novel, dtype=np.float64),
        novel_arg=np.asarray(novel_arg if novel_arg is not None else [10] * n, dtype=np.int64),
    )


def _random_scores(rng, n):
    return _scores(
        rng.uniform(-1.0, 1.0, n),
        rng.uniform(-1.0, 1.0, n),
        rng.integers(0, 5, n),
        rng.integers(5, 10, n),
    )


# ---------------------------------------------------------------------------
# score_unlabeled
# ---------------------------------------------------------------------------


class TestScoreUnlabeled(unittest.TestCase):
    def test_base_weight_orthogonal_to_novel(self):
        w = _weights(np.eye(3)[:2], np.eye(3)[2:], 3)
        s = score_unlabeled(np.array([[0.0, 4.0, 0.0]]), w)
        self.assertAlmostEqual(s.s_base[0], 1.0)
        self.assertAlmostEqual(s.s_novel[0], 0.0)
        self.assertAlmostEqual(s.gap[0], 1.0)
        self.assertEqual(int(s.base_arg[0]), 1)
        self.assertEqual(int(s.novel_arg[0]), 2)

    def test_hand_cosine(self):
        w = _weights([[1.0, 0.0]], [[1.0, 1.0]], 2)
        s = score_unlabeled(np.array([[1.0, 0.0]]), w)
        self.assertAlmostEqual(s.s_base[0], 1.0)
        self.assertAlmostEqual(s.s_novel[0], 0.70711, places=5)
        self.assertAlmostEqual(s.gap[0], 0.29289, places=5)

    def test_equal_cosines_give_zero_gap(self):
        w = _weights([[1.0, 0.0]], [[0.0, 1.0]], 2)
        s = score_unlabeled(np.array([[1.0, 1.0]]), w)
        self.assertEqual(float(s.gap[0]), 0.0)

    def test_requires_novel_block(self):
        base = init_base_weights(FeatureSet.from_arrays(np.eye(2), [0, 1]))
        with self.assertRaises(ClassifierError):
            score_unlabeled(np.array([[1.0, 0.0]]), base)

    def test_empty_pool(self):
        w = _weights(np.eye(3)[:2], np.eye(3)[2:], 3)
        self.assertEqual(len(score_unlabeled(np.zeros((0, 3)), w)), 0)


# ---------------------------------------------------------------------------
# compute_threshold
# ---------------------------------------------------------------------------


class TestComputeThreshold(unittest.TestCase):
    def test_zero_gaps_collapse_to_m(self):
        t = compute_threshold(_scores([0.3, 0.1], [0.3, 0.1]), 0.5)
        self.assertEqual(t.tau, 0.5)
        self.assertEqual(t.n_scored, 2)

    def test_two_gaps(self):
        t = compute_threshold(_scores([0.6, 0.2], [0.0, 0.0]), 0.2)
        self.assertAlmostEqual(t.tau, 0.6)

    def test_single_gap_no_smoothing(self):
        t = compute_threshold(_scores([0.9], [0.35]), 0.0)
        self.assertAlmostEqual(t.tau, 0.55)

    def test_empty_scores_rejected(self):
        with self.assertRaises(ALDCError):
            compute_threshold(_scores([], []), 0.2)

    def test_matches_loop_oracle(self):
        rng = np.random.default_rng(2024)
        for _ in range(1000):
            n = int(rng.integers(1, 40))
            m = float(rng.uniform(0.0, 1.0))
            scores = _random_scores(rng, n)
            total = 0.0
            for b, nv in zip(scores.s_base, scores.s_novel):
                total += abs(float(b) - float(nv))
            self.assertLessEqual(abs(compute_threshold(scores, m).tau - (total / n + m)), 1e-10)


class TestThresholdForStrategy(unittest.TestCase):
    def setUp(self):
        self.scores = _scores([0.6, 0.2], [0.0, 0.0])

    def test_baseline_below_every_gap(self):
        t = threshold_for_strategy(Strategy.BASELINE, self.scores, 0.2, 0.3)
        self.assertEqual(t.tau, BASELINE_TAU)
        self.assertEqual(len(partition(self.scores, t).ambiguous), 0)

    def test_static_uses_configured_value(self):
        self.assertEqual(threshold_for_strategy(Strategy.STATIC, self.scores, 0.2, 0.3).tau, 0.3)

    def test_dynamic_and_drop_recompute(self):
        for strategy in (Strategy.DYNAMIC, Strategy.DROP):
            t = threshold_for_strategy(strategy, self.scores, 0.2, 0.3)
            self.assertAlmostEqual(t.tau, 0.6)


# ---------------------------------------------------------------------------
# partition
# ---------------------------------------------------------------------------


class TestPartition(unittest.TestCase):
    def test_confident_takes_base_label(self):
        scores = _scores([0.9], [0.2], base_arg=[4], novel_arg=[12])
        part = partition(scores, Threshold(tau=0.6, m=0.2))
        self.assertEqual(part.confident, ((0, 4),))
        self.assertEqual(part.ambiguous, ())

    def test_confident_takes_novel_label(self):
        scores = _scores([0.1], [0.9], base_arg=[4], novel_arg=[12])
        self.assertEqual(partition(scores, Threshold(tau=0.6, m=0.2)).confident, ((0, 12),))

    def test_tau_above_max_gap_makes_everything_ambiguous(self):
        scores = _scores([1.0, -1.0], [-1.0, 1.0], base_arg=[1, 2], novel_arg=[7, 8])
        part = partition(scores, Threshold(tau=2.5, m=0.0))
        self.assertEqual(part.confident, ())
        self.assertEqual(part.ambiguous, ((0, 1, 7), (1, 2, 8)))

    def test_zero_tau_with_positive_gaps(self):
        scores = _scores([0.5, 0.1, 0.3], [0.4, 0.2, 0.0])
        part = partition(scores, Threshold(tau=0.0, m=0.0))
        self.assertEqual(len(part.confident), 3)

    def test_gap_equal_to_tau_is_ambiguous(self):
        scores = _scores([0.5], [0.5])
        self.assertEqual(len(partition(scores, Threshold(tau=0.0, m=0.0)).ambiguous), 1)

    def test_contract_and_monotonicity(self):
        rng = np.random.default_rng(7)
        for _ in range(1000):
            n = int(rng.integers(1, 30))
            scores = _random_scores(rng, n)
            t1, t2 = sorted(rng.uniform(-0.5, 2.0, 2))
            low = partition(scores, Threshold(tau=float(t1), m=0.0))
            high = partition(scores, Threshold(tau=float(t2), m=0.0))

            confident = {i for i, _ in low.confident}
            ambiguous = {i for i, _, _ in low.ambiguous}
            self.assertEqual(confident | ambiguous, set(range(n)))
            self.assertFalse(confident & ambiguous)
            for i in range(n):
                self.assertEqual(i in confident, bool(scores.gap[i] > t1))
            self.assertLessEqual({i for i, _ in high.confident}, confident)


if __name__ == "__main__":
    unittest.main()
