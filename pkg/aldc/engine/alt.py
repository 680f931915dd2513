"""
Ambiguity-guided learnable threshold.

Every unlabeled feature is scored against the base block and the novel block
of the classifier separately. The absolute gap between the two best cosines
measures how ambiguous the sample is; tau = mean(gap) + m splits the pool
into confident (pseudo-labeled) and ambiguous (base/novel paired) samples.
"""

import logging
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from aldc.core import ALDCError, ClassifierError, unit_rows
from aldc.data.models import Strategy, Threshold
from aldc.engine.classifier import ClassifierWeights

logger = logging.getLogger(__name__)

# Below every possible gap, so the baseline strategy marks the whole pool confident.
BASELINE_TAU = -1.0


@dataclass(frozen=True, eq=False)
class SimilarityScores:
    s_base: np.ndarray
    base_arg: np.ndarray
    s_novel: np.ndarray
    novel_arg: np.ndarray

    def __len__(self) -> int:
        return int(self.s_base.shape[0])

    @property
    def gap(self) -> np.ndarray:
        return np.abs(self.s_base - self.s_novel)


@dataclass(frozen=True)
class Partition:
    confident: Tuple[Tuple[int, int], ...]  # (sample_index, pseudo_class_id)
    ambiguous: Tuple[Tuple[int, int, int], ...]  # (sample_index, base_arg, novel_arg)

    def __len__(self) -> int:
        return len(self.confident) + len(self.ambiguous)


def _block_max(f: np.ndarray, weights: ClassifierWeights, ids: List[int]) -> Tuple[np.ndarray, np.ndarray]:
    order, w = weights.matrix(ids)
    scores = f @ w.T
    best = np.argmax(scores, axis=1)
    return np.clip(scores[np.arange(len(f)), best], -1.0, 1.0), order[best]


def score_unlabeled(features: np.ndarray, weights: ClassifierWeights) -> SimilarityScores:
    """S^b and S^n per sample: the best cosine within each block and its class."""
    base_ids = list(weights.base_ids.class_ids)
    novel_ids = weights.novel_ids()
    if not base_ids:
        raise ClassifierError("no base weights to score against")
    if not novel_ids:
        raise ClassifierError("no novel weights to score against (base session has no threshold)")

    f = np.atleast_2d(np.asarray(features, dtype=np.float64))
    if f.shape[0] == 0:
        empty_f = np.zeros(0)
        empty_i = np.zeros(0, dtype=np.int64)
        return SimilarityScores(empty_f, empty_i, empty_f, empty_i)
    f = unit_rows(f, "unlabeled feature")

    s_base, base_arg = _block_max(f, weights, base_ids)
    s_novel, novel_arg = _block_max(f, weights, novel_ids)
    return SimilarityScores(s_base=s_base, base_arg=base_arg, s_novel=s_novel, novel_arg=novel_arg)


def compute_threshold(scores: SimilarityScores, m: float) -> Threshold:
    """tau = mean(|S^b - S^n|) + m over the current session's pool."""
    n = len(scores)
    if n == 0:
        raise ALDCError("cannot compute a threshold from an empty score list")
    tau = float(np.sum(scores.gap)) / n + m
    return Threshold(tau=tau, m=m, n_scored=n)


def threshold_for_strategy(
    strategy: Strategy, scores: SimilarityScores, m: float, static_threshold: float
) -> Threshold:
    """
    dynamic/drop: recomputed from this session's scores.
    static: the configured constant.
    baseline: below any gap, so nothing is ambiguous.
    """
    if strategy == Strategy.BASELINE:
        return Threshold(tau=BASELINE_TAU, m=m, n_scored=0)
    if strategy == Strategy.STATIC:
        return Threshold(tau=static_threshold, m=m, n_scored=0)
    return compute_threshold(scores, m)


def partition(scores: SimilarityScores, threshold: Threshold) -> Partition:
    """
    Confident iff gap > tau, labeled with the side holding the larger score
    (ties to base). Everything else is ambiguous with its (base, novel) pair.
    """
    gap = scores.gap
    confident: List[Tuple[int, int]] = []
    ambiguous: List[Tuple[int, int, int]] = []
    for i in range(len(scores)):
        b = int(scores.base_arg[i])
        nv = int(scores.novel_arg[i])
        if gap[i] > threshold.tau:
            label = b if scores.s_base[i] >= scores.s_novel[i] else nv
            confident.append((i, label))
        else:
            ambiguous.append((i, b, nv))

    logger.debug(
        "[ALT] partition tau=%.4f confident=%d ambiguous=%d",
        threshold.tau,
        len(confident),
        len(ambiguous),
    )
    return Partition(confident=tuple(confident), ambiguous=tuple(ambiguous))
