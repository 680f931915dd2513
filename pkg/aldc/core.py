"""
Core contracts: error hierarchy, experiment validation, and the class-id
universe shared by every module.

Class ids are dense integers assigned base-first (0..B-1), then session by
session (B + (t-1)*N + j for the j-th new class of session t).
"""

import math
from typing import List, Sequence, Union

import numpy as np

from aldc.data.models import (
    ClassSet,
    ExperimentConfig,
    FeatureSet,
    LabeledFeature,
    PoolScope,
    Strategy,
    WeightUpdateRule,
)


class ALDCError(ValueError):
    """Root of every domain error raised by the engine."""


class ConfigError(ALDCError):
    pass


class DataFormatError(ALDCError):
    pass


class BenchmarkError(ALDCError):
    pass


class ClassifierError(ALDCError):
    pass


class CalibrationError(ALDCError):
    pass


class ProtocolError(ALDCError):
    pass


_SEED_LIMIT = 2**64


def _finite(value: float) -> bool:
    return math.isfinite(float(value))


def validate_config(config: ExperimentConfig) -> ExperimentConfig:
    """
    Check every domain invariant in field order.

    Returns the config unchanged when valid; raises ConfigError naming the
    first violated field otherwise. Pure: same input, same verdict.
    """
    if config.dim <= 0:
        raise ConfigError("dim must be positive")
    if config.base_class_count <= 0:
        raise ConfigError("base_class_count must be positive")
    if config.ways < 0:
        raise ConfigError("ways must be non-negative")
    if config.shots < 0:
        raise ConfigError("shots must be non-negative")
    if config.session_count < 0:
        raise ConfigError("session_count must be non-negative")
    if config.session_count > 0 and config.ways == 0:
        raise ConfigError("ways must be positive when session_count > 0")
    if config.session_count > 0 and config.shots == 0:
        raise ConfigError("shots must be positive when session_count > 0")
    if config.unlabeled_count < 0:
        raise ConfigError("unlabeled_count must be non-negative")
    if not _finite(config.base_to_novel_ratio) or not 0.0 <= config.base_to_novel_ratio <= 1.0:
        raise ConfigError("base_to_novel_ratio must lie in [0, 1]")
    if not _finite(config.m) or config.m < 0.0:
        raise ConfigError("m must be a finite value >= 0")
    if not _finite(config.alpha) or config.alpha < 0.0:
        raise ConfigError("alpha must be a finite value >= 0")
    if config.k_base < 0:
        raise ConfigError("k_base must be non-negative")
    if config.generated_per_class is not None and config.generated_per_class < 0:
        raise ConfigError("generated_per_class must be non-negative")
    if not isinstance(config.strategy, Strategy):
        raise ConfigError("strategy must be one of baseline, drop, static, dynamic")
    if not _finite(config.static_threshold):
        raise ConfigError("static_threshold must be finite")
    if not 0 <= config.seed < _SEED_LIMIT:
        raise ConfigError("seed must be a 64-bit non-negative integer")
    if config.test_per_class <= 0:
        raise ConfigError("test_per_class must be positive")
    if config.base_samples_per_class <= 0:
        raise ConfigError("base_samples_per_class must be positive")
    if not _finite(config.separation_radius) or config.separation_radius <= 0.0:
        raise ConfigError("separation_radius must be positive")
    if not _finite(config.class_std) or config.class_std < 0.0:
        raise ConfigError("class_std must be >= 0")
    if not _finite(config.novel_mixing) or not 0.0 <= config.novel_mixing <= 1.0:
        raise ConfigError("novel_mixing must lie in [0, 1]")
    if config.novel_class_count is not None and config.novel_class_count < 0:
        raise ConfigError("novel_class_count must be non-negative")
    if novel_class_budget(config) > config.total_novel_classes:
        raise ConfigError("novel_class_count is smaller than ways * session_count")
    if not isinstance(config.weight_update, WeightUpdateRule):
        raise ConfigError("weight_update must be replace or accumulate")
    if not isinstance(config.pool_scope, PoolScope):
        raise ConfigError("pool_scope must be all_seen or current")
    return config


def novel_class_budget(config: ExperimentConfig) -> int:
    """Novel classes the protocol will actually introduce (N * T)."""
    return config.ways * config.session_count


def class_universe(config: ExperimentConfig) -> List[ClassSet]:
    """C_0, C_1, ..., C_T as disjoint ClassSets."""
    base = ClassSet(session_index=0, class_ids=tuple(range(config.base_class_count)))
    sets = [base]
    start = config.base_class_count
    for t in range(1, config.session_count + 1):
        ids = tuple(range(start + (t - 1) * config.ways, start + t * config.ways))
        sets.append(ClassSet(session_index=t, class_ids=ids))
    return sets


def unit_rows(matrix: np.ndarray, what: str = "feature") -> np.ndarray:
    """L2-normalize each row; a zero-norm row raises ClassifierError."""
    norms = np.linalg.norm(matrix, axis=1)
    if np.any(norms == 0.0):
        index = int(np.flatnonzero(norms == 0.0)[0])
        raise ClassifierError(f"zero-norm {what} at row {index}")
    return matrix / norms[:, None]


def as_feature_set(samples: Union[FeatureSet, Sequence[LabeledFeature]], dim: int = 0) -> FeatureSet:
    """Accept either a FeatureSet or a list of LabeledFeature."""
    if isinstance(samples, FeatureSet):
        return samples
    if not samples:
        return FeatureSet.empty(dim)
    return FeatureSet.from_samples(samples)
