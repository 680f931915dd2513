"""
Cosine-prototype classifier.

Each class weight is the unit-normalized mean of the features supporting the
class. Classification is joint over every seen class; ties go to the lowest
class id because weights are always scanned in ascending id order.
"""

import logging
from dataclasses import dataclass, replace
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from aldc.core import ClassifierError, as_feature_set, unit_rows
from aldc.data.models import (
    ClassSet,
    FeatureSet,
    LabeledFeature,
    SessionMetrics,
    WeightUpdateRule,
)

logger = logging.getLogger(__name__)

Samples = Union[FeatureSet, Sequence[LabeledFeature]]

_UNIT_TOLERANCE = 1e-9


@dataclass(frozen=True, eq=False)
class ClassifierWeights:
    """
    Unit-norm weights keyed by class id, split into a base block and one
    novel block per incremental session. ``support_sums``/``support_counts``
    hold the feature sum behind every weight. Under the replace rule that is
    the batch that last set the weight; under accumulate it is every sample
    the class has ever seen.
    """

    vectors: Mapping[int, np.ndarray]
    base_ids: ClassSet
    novel_ids_by_session: Tuple[ClassSet, ...]
    support_sums: Mapping[int, np.ndarray]
    support_counts: Mapping[int, int]

    def __len__(self) -> int:
        return len(self.vectors)

    def class_ids(self) -> List[int]:
        return sorted(self.vectors)

    def novel_ids(self) -> List[int]:
        return sorted(c for block in self.novel_ids_by_session for c in block.class_ids)

    def is_base(self, class_id: int) -> bool:
        return class_id in self.base_ids

    def matrix(self, ids: Optional[Sequence[int]] = None) -> Tuple[np.ndarray, np.ndarray]:
        """(ids, W) with rows of W in ascending id order."""
        order = sorted(self.vectors) if ids is None else sorted(ids)
        if not order:
            return np.zeros(0, dtype=np.int64), np.zeros((0, 0))
        return np.asarray(order, dtype=np.int64), np.stack([self.vectors[c] for c in order])


def _prototype(vectors: np.ndarray, class_id: int) -> np.ndarray:
    mean = vectors.mean(axis=0)
    norm = np.linalg.norm(mean)
    if norm == 0.0 or not np.isfinite(norm):
        raise ClassifierError(f"degenerate prototype for class {class_id}")
    return mean / norm


def _fit_prototypes(
    samples: FeatureSet,
) -> Tuple[Dict[int, np.ndarray], Dict[int, np.ndarray], Dict[int, int]]:
    vectors: Dict[int, np.ndarray] = {}
    sums: Dict[int, np.ndarray] = {}
    counts: Dict[int, int] = {}
    for c in samples.class_ids():
        rows = samples.of_class(c)
        vectors[c] = _prototype(rows, c)
        sums[c] = rows.sum(axis=0)
        counts[c] = int(rows.shape[0])
    return vectors, sums, counts


def init_base_weights(
    base_samples: Samples, expected_ids: Optional[Sequence[int]] = None
) -> ClassifierWeights:
    """w_c = normalize(mean of class-c base samples)."""
    samples = as_feature_set(base_samples)
    if len(samples) == 0:
        raise ClassifierError("no base samples")
    present = samples.class_ids()
    if expected_ids is not None:
        missing = sorted(set(expected_ids) - set(present))
        if missing:
            raise ClassifierError(f"class {missing[0]} has zero samples")
    vectors, sums, counts = _fit_prototypes(samples)
    logger.debug("[CLASSIFIER] base weights initialized classes=%d", len(vectors))
    return ClassifierWeights(
        vectors=vectors,
        base_ids=ClassSet(session_index=0, class_ids=tuple(present)),
        novel_ids_by_session=(),
        support_sums=sums,
        support_counts=counts,
    )


def init_novel_weights(
    weights: ClassifierWeights,
    shots: Samples,
    expected_ids: Optional[Sequence[int]] = None,
    shots_per_class: Optional[int] = None,
) -> ClassifierWeights:
    """
    Add one normalized shot-mean weight per new class. Existing weights are
    carried over untouched.
    """
    samples = as_feature_set(shots)
    if len(samples) == 0:
        raise ClassifierError("no novel shots")
    new_ids = samples.class_ids()
    collisions = [c for c in new_ids if c in weights.vectors]
    if collisions:
        raise ClassifierError(f"class {collisions[0]} already has a weight")
    if expected_ids is not None and sorted(expected_ids) != new_ids:
        raise ClassifierError(
            f"shots cover classes {new_ids}, expected {sorted(expected_ids)}"
        )
    if shots_per_class is not None:
        for c in new_ids:
            got = int(np.sum(samples.labels == c))
            if got != shots_per_class:
                raise ClassifierError(f"class {c} has {got} shots, expected {shots_per_class}")

    vectors, sums, counts = _fit_prototypes(samples)
    session_index = len(weights.novel_ids_by_session) + 1
    return ClassifierWeights(
        vectors={**weights.vectors, **vectors},
        base_ids=weights.base_ids,
        novel_ids_by_session=weights.novel_ids_by_session
        + (ClassSet(session_index=session_index, class_ids=tuple(new_ids)),),
        support_sums={**weights.support_sums, **sums},
        support_counts={**weights.support_counts, **counts},
    )


def _as_matrix(features: Union[np.ndarray, Samples]) -> np.ndarray:
    if isinstance(features, np.ndarray):
        return np.atleast_2d(np.asarray(features, dtype=np.float64))
    return as_feature_set(features).vectors


def cosine_scores(
    features: Union[np.ndarray, Samples],
    weights: ClassifierWeights,
    ids: Optional[Sequence[int]] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """(class ids, cosine matrix of shape (n_features, n_classes))."""
    order, w = weights.matrix(ids)
    f = unit_rows(_as_matrix(features), "feature")
    return order, f @ w.T


def classify(
    features: Union[np.ndarray, Samples], weights: ClassifierWeights
) -> List[Tuple[int, float]]:
    """Per feature: (argmax class over all seen classes, winning cosine)."""
    order, scores = cosine_scores(features, weights)
    if scores.shape[0] == 0:
        return []
    best = np.argmax(scores, axis=1)
    return [(int(order[j]), float(scores[i, j])) for i, j in enumerate(best)]


def update_weights(
    weights: ClassifierWeights,
    augmented: Samples,
    rule: WeightUpdateRule = WeightUpdateRule.REPLACE,
) -> ClassifierWeights:
    """
    Re-estimate the weight of every class present in ``augmented``.

    replace:    w_c := normalize(mean of the augmented samples of c)
    accumulate: w_c := normalize(mean of all samples that ever supported c)

    Classes absent from ``augmented`` keep their weights; an empty update
    returns the weights unchanged.
    """
    samples = as_feature_set(augmented)
    if len(samples) == 0:
        return weights
    touched = samples.class_ids()
    unseen = [c for c in touched if c not in weights.vectors]
    if unseen:
        raise ClassifierError(f"update for unseen class {unseen[0]}")

    vectors = dict(weights.vectors)
    sums = dict(weights.support_sums)
    counts = dict(weights.support_counts)
    for c in touched:
        rows = samples.of_class(c)
        if rule == WeightUpdateRule.ACCUMULATE:
            sums[c] = sums[c] + rows.sum(axis=0)
            counts[c] = counts[c] + int(rows.shape[0])
        else:
            sums[c] = rows.sum(axis=0)
            counts[c] = int(rows.shape[0])
        vectors[c] = _prototype(sums[c][None, :] / counts[c], c)

    return replace(weights, vectors=vectors, support_sums=sums, support_counts=counts)


def check_unit_norm(weights: ClassifierWeights) -> None:
    for c, w in weights.vectors.items():
        if abs(np.linalg.norm(w) - 1.0) > _UNIT_TOLERANCE:
            raise ClassifierError(f"weight of class {c} is not unit norm")


def _percent(correct: np.ndarray) -> Optional[float]:
    if correct.size == 0:
        return None
    return 100.0 * float(np.count_nonzero(correct)) / float(correct.size)


def evaluate(test: Samples, weights: ClassifierWeights) -> SessionMetrics:
    """
    Accuracy over all test samples and over the base and novel groups.
    A group with no test samples reports None (printed as "-").
    """
    samples = as_feature_set(test)
    if len(samples) == 0:
        raise ClassifierError("empty test set")
    unseen = [c for c in samples.class_ids() if c not in weights.vectors]
    if unseen:
        raise ClassifierError(f"test label {unseen[0]} is not a seen class")

    predicted = np.asarray([c for c, _ in classify(samples.vectors, weights)], dtype=np.int64)
    correct = predicted == samples.labels
    base_mask = np.isin(samples.labels, np.asarray(weights.base_ids.class_ids, dtype=np.int64))

    return SessionMetrics(
        session_index=len(weights.novel_ids_by_session),
        acc_all=_percent(correct) or 0.0,
        acc_base=_percent(correct[base_mask]),
        acc_novel=_percent(correct[~base_mask]),
        n_test=len(samples),
        n_test_base=int(np.count_nonzero(base_mask)),
        n_test_novel=int(np.count_nonzero(~base_mask)),
    )
