"""
Domain types shared by every stage of the engine.

Array-valued records are frozen dataclasses over numpy arrays; configuration,
metrics and reports are pydantic models so they validate and serialize the
same way everywhere.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict

# FeatureVector: a 1-D float64 array of d finite components.
FeatureVector = np.ndarray


class Strategy(str, Enum):
    BASELINE = "baseline"
    DROP = "drop"
    STATIC = "static"
    DYNAMIC = "dynamic"


class WeightUpdateRule(str, Enum):
    REPLACE = "replace"
    ACCUMULATE = "accumulate"


class PoolScope(str, Enum):
    """Which novel classes may appear in an unlabeled pool."""

    ALL_SEEN = "all_seen"
    CURRENT = "current"


class ExperimentConfig(BaseModel):
    """
    Every knob of one experiment. Types are coerced by pydantic; domain
    invariants are checked by aldc.core.validate_config.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    dim: int = 64
    base_class_count: int = 20
    ways: int = 5
    shots: int = 5
    session_count: int = 4
    unlabeled_count: int = 50
    base_to_novel_ratio: float = 0.5
    m: float = 0.2
    alpha: float = 0.2
    k_base: int = 1
    generated_per_class: Optional[int] = None
    strategy: Strategy = Strategy.DYNAMIC
    static_threshold: float = 0.4
    seed: int = 0
    test_per_class: int = 100

    # Extension fields (optional in config files)
    base_samples_per_class: int = 200
    separation_radius: float = 5.0
    class_std: float = 1.0
    novel_mixing: float = 0.6
    novel_class_count: Optional[int] = None
    update_base_weights: bool = False
    include_ambiguous_in_stats: bool = True
    weight_update: WeightUpdateRule = WeightUpdateRule.REPLACE
    pool_scope: PoolScope = PoolScope.ALL_SEEN
    calibration: Optional[bool] = None

    @property
    def generated_count(self) -> int:
        """n_g per novel class; defaults to M // N."""
        if self.generated_per_class is not None:
            return self.generated_per_class
        return self.unlabeled_count // self.ways if self.ways else 0

    @property
    def total_novel_classes(self) -> int:
        if self.novel_class_count is not None:
            return self.novel_class_count
        return self.ways * self.session_count

    def calibration_enabled(self, strategy: Optional[Strategy] = None) -> bool:
        """Explicit override, else on for the static and dynamic strategies."""
        if self.calibration is not None:
            return self.calibration
        return (strategy or self.strategy) in (Strategy.STATIC, Strategy.DYNAMIC)


REQUIRED_CONFIG_KEYS: Tuple[str, ...] = (
    "dim",
    "base_class_count",
    "ways",
    "shots",
    "session_count",
    "unlabeled_count",
    "base_to_novel_ratio",
    "m",
    "alpha",
    "k_base",
    "generated_per_class",
    "strategy",
    "static_threshold",
    "seed",
    "test_per_class",
)


@dataclass(frozen=True)
class ClassSet:
    session_index: int
    class_ids: Tuple[int, ...]

    def __contains__(self, class_id: object) -> bool:
        return class_id in self.class_ids

    def __len__(self) -> int:
        return len(self.class_ids)


@dataclass(frozen=True, eq=False)
class LabeledFeature:
    vector: FeatureVector
    class_id: int


@dataclass(frozen=True, eq=False)
class FeatureSet:
    """
    A batch of labeled features. ``sample_ids`` identify generated instances
    for disjointness and leakage bookkeeping; -1 marks synthetic draws that
    never belonged to the benchmark.
    """

    vectors: np.ndarray
    labels: np.ndarray
    sample_ids: np.ndarray

    def __post_init__(self) -> None:
        if self.vectors.ndim != 2:
            raise ValueError("feature vectors must form a 2-D array")
        if not (len(self.vectors) == len(self.labels) == len(self.sample_ids)):
            raise ValueError("vectors, labels and sample_ids differ in length")

    def __len__(self) -> int:
        return int(self.vectors.shape[0])

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])

    def class_ids(self) -> List[int]:
        return sorted(int(c) for c in np.unique(self.labels))

    def of_class(self, class_id: int) -> np.ndarray:
        return self.vectors[self.labels == class_id]

    @classmethod
    def empty(cls, dim: int) -> "FeatureSet":
        return cls(
            vectors=np.zeros((0, dim)),
            labels=np.zeros(0, dtype=np.int64),
            sample_ids=np.zeros(0, dtype=np.int64),
        )

    @classmethod
    def from_arrays(
        cls,
        vectors: Sequence[Sequence[float]],
        labels: Sequence[int],
        sample_ids: Optional[Sequence[int]] = None,
    ) -> "FeatureSet":
        arr = np.asarray(vectors, dtype=np.float64)
        if arr.ndim == 1:
            arr = arr.reshape(len(labels), -1)
        lab = np.asarray(labels, dtype=np.int64)
        ids = (
            np.full(len(lab), -1, dtype=np.int64)
            if sample_ids is None
            else np.asarray(sample_ids, dtype=np.int64)
        )
        return cls(vectors=arr, labels=lab, sample_ids=ids)

    @classmethod
    def from_samples(cls, samples: Sequence[LabeledFeature]) -> "FeatureSet":
        if not samples:
            raise ValueError("cannot build a feature set from zero samples")
        return cls.from_arrays(
            np.stack([np.asarray(s.vector, dtype=np.float64) for s in samples]),
            [s.class_id for s in samples],
        )

    def to_samples(self) -> List[LabeledFeature]:
        return [
            LabeledFeature(vector=self.vectors[i].copy(), class_id=int(self.labels[i]))
            for i in range(len(self))
        ]

    @classmethod
    def concat(cls, parts: Iterable["FeatureSet"], dim: int) -> "FeatureSet":
        parts = [p for p in parts if len(p)]
        if not parts:
            return cls.empty(dim)
        return cls(
            vectors=np.concatenate([p.vectors for p in parts]),
            labels=np.concatenate([p.labels for p in parts]),
            sample_ids=np.concatenate([p.sample_ids for p in parts]),
        )


@dataclass(frozen=True, eq=False)
class UnlabeledPool:
    """Unlabeled features only; hidden truth travels separately in SessionData."""

    vectors: np.ndarray
    sample_ids: np.ndarray

    def __len__(self) -> int:
        return int(self.vectors.shape[0])


@dataclass(frozen=True, eq=False)
class SessionData:
    session_index: int
    labeled: FeatureSet
    unlabeled: UnlabeledPool
    unlabeled_truth: np.ndarray  # diagnostics only, never passed to scoring code
    test: FeatureSet
    new_classes: ClassSet


@dataclass(frozen=True, eq=False)
class ClassGenerator:
    class_id: int
    true_mean: np.ndarray
    true_covariance: np.ndarray
    parent_base_id: Optional[int] = None
    mixing: float = 0.0
    fresh_direction: Optional[np.ndarray] = None


class FeatureFileHeader(BaseModel):
    model_config = ConfigDict(frozen=True)

    dim: int
    class_count: int
    sample_count: int


class Threshold(BaseModel):
    model_config = ConfigDict(frozen=True)

    tau: float
    m: float
    n_scored: int = 0


class SessionMetrics(BaseModel):
    """
    Per-session numbers. Accuracies are percentages; acc_novel is None in
    the base session and pseudo_precision is None when nothing was confident.
    """

    model_config = ConfigDict(frozen=True)

    session_index: int
    acc_all: float
    acc_base: Optional[float] = None
    acc_novel: Optional[float] = None
    n_test: int = 0
    n_test_base: int = 0
    n_test_novel: int = 0
    pseudo_precision: Optional[float] = None
    n_confident: int = 0
    n_ambiguous: int = 0
    n_generated: int = 0
    tau_used: Optional[float] = None


def _mean_defined(values: Iterable[Optional[float]]) -> Optional[float]:
    present = [v for v in values if v is not None]
    if not present:
        return None
    return sum(present) / len(present)


class RunReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    label: str
    config: ExperimentConfig
    sessions: List[SessionMetrics]
    avg_all: float
    avg_base: Optional[float] = None
    avg_novel: Optional[float] = None

    @classmethod
    def from_sessions(
        cls, label: str, config: ExperimentConfig, sessions: Sequence[SessionMetrics]
    ) -> "RunReport":
        if not sessions:
            raise ValueError("a run report needs at least one session")
        return cls(
            label=label,
            config=config,
            sessions=list(sessions),
            avg_all=sum(s.acc_all for s in sessions) / len(sessions),
            avg_base=_mean_defined(s.acc_base for s in sessions),
            avg_novel=_mean_defined(s.acc_novel for s in sessions),
        )


@dataclass(frozen=True)
class ReportRow:
    """One parsed row of a report file plus its key-value block."""

    label: str
    session_acc: Tuple[float, ...]
    avg: float
    details: Dict[str, str] = field(default_factory=dict)
