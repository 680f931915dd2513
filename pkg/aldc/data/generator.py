"""
Synthetic GSemi-FSCIL benchmark generator.

Base classes are isotropic Gaussians around random directions scaled by a
separation radius. Each novel class borrows a parent base class
(round-robin) and places its mean at (1 - lambda) * fresh + lambda * parent,
which is what produces samples that look like both a base and a novel class.

One seeded numpy Generator drives the whole benchmark, and draws happen in a
fixed order, so the same config always yields identical arrays.
"""

import logging
import math
from itertools import combinations
from typing import List, Optional, Sequence

import numpy as np

from aldc.core import BenchmarkError, class_universe, novel_class_budget, validate_config
from aldc.data.models import (
    ClassGenerator,
    ExperimentConfig,
    FeatureSet,
    PoolScope,
    SessionData,
    UnlabeledPool,
)

logger = logging.getLogger(__name__)


def novel_mean(fresh_direction: np.ndarray, parent_mean: np.ndarray, mixing: float) -> np.ndarray:
    """(1 - lambda) * fresh + lambda * parent."""
    return (1.0 - mixing) * np.asarray(fresh_direction, dtype=np.float64) + mixing * np.asarray(
        parent_mean, dtype=np.float64
    )


def _random_direction(rng: np.random.Generator, dim: int, radius: float) -> np.ndarray:
    while True:
        z = rng.standard_normal(dim)
        norm = np.linalg.norm(z)
        if norm > 0.0:
            return z / norm * radius


def make_class_generators(
    config: ExperimentConfig, rng: Optional[np.random.Generator] = None
) -> List[ClassGenerator]:
    """
    Base generators first (ids 0..B-1), then every available novel class.
    Novel class j is parented to base class j mod B.
    """
    validate_config(config)
    if rng is None:
        rng = np.random.default_rng(config.seed)

    d = config.dim
    cov = (config.class_std**2) * np.eye(d)
    generators: List[ClassGenerator] = []

    for c in range(config.base_class_count):
        generators.append(
            ClassGenerator(
                class_id=c,
                true_mean=_random_direction(rng, d, config.separation_radius),
                true_covariance=cov,
            )
        )

    for j in range(config.total_novel_classes):
        parent = generators[j % config.base_class_count]
        fresh = _random_direction(rng, d, config.separation_radius)
        generators.append(
            ClassGenerator(
                class_id=config.base_class_count + j,
                true_mean=novel_mean(fresh, parent.true_mean, config.novel_mixing),
                true_covariance=cov,
                parent_base_id=parent.class_id,
                mixing=config.novel_mixing,
                fresh_direction=fresh,
            )
        )

    logger.debug(
        "[DATAGEN] generators base=%d novel=%d min_base_separation=%.4f",
        config.base_class_count,
        config.total_novel_classes,
        base_separation(generators),
    )
    return generators


def base_separation(generators: Sequence[ClassGenerator]) -> float:
    """Smallest pairwise distance between base-class means (inf with < 2 bases)."""
    bases = [g.true_mean for g in generators if g.parent_base_id is None]
    if len(bases) < 2:
        return math.inf
    return float(min(np.linalg.norm(a - b) for a, b in combinations(bases, 2)))


class _Sampler:
    """Draws class-conditional samples and hands out unique instance ids."""

    def __init__(self, generators: Sequence[ClassGenerator], rng: np.random.Generator):
        self._generators = {g.class_id: g for g in generators}
        self._rng = rng
        self._next_id = 0

    def draw(self, class_id: int, n: int) -> FeatureSet:
        gen = self._generators[class_id]
        d = gen.true_mean.shape[0]
        std = np.sqrt(np.diag(gen.true_covariance))
        vectors = gen.true_mean + self._rng.standard_normal((n, d)) * std
        ids = np.arange(self._next_id, self._next_id + n, dtype=np.int64)
        self._next_id += n
        return FeatureSet(
            vectors=vectors, labels=np.full(n, class_id, dtype=np.int64), sample_ids=ids
        )

    def draw_labels(self, labels: np.ndarray, dim: int) -> FeatureSet:
        parts = [self.draw(int(c), 1) for c in labels]
        return FeatureSet.concat(parts, dim)


def pool_base_count(config: ExperimentConfig) -> int:
    """ceil(ratio * M); fractional counts round toward base."""
    return min(
        config.unlabeled_count,
        math.ceil(config.base_to_novel_ratio * config.unlabeled_count - 1e-9),
    )


def generate_benchmark(config: ExperimentConfig) -> List[SessionData]:
    """
    Build sessions 0..T.

    Session 0 holds base_samples_per_class labeled samples per base class and
    no unlabeled pool. Session t >= 1 holds N*K shots of its new classes and
    an M-sample pool whose hidden classes are drawn from C_0 (ceil(ratio*M)
    samples) and from every novel class seen so far (the rest), or only from
    the session's new classes when pool_scope is "current". Test sets are
    cumulative with test_per_class items per seen class.
    """
    needed = novel_class_budget(config)
    if needed > config.total_novel_classes:
        raise BenchmarkError(
            f"insufficient class budget: {config.session_count} sessions of "
            f"{config.ways} ways need {needed} novel classes, "
            f"{config.total_novel_classes} available"
        )
    validate_config(config)

    rng = np.random.default_rng(config.seed)
    generators = make_class_generators(config, rng)
    sampler = _Sampler(generators, rng)
    universe = class_universe(config)
    d = config.dim
    base_ids = np.asarray(universe[0].class_ids, dtype=np.int64)

    base_labeled = FeatureSet.concat(
        [sampler.draw(c, config.base_samples_per_class) for c in universe[0].class_ids], d
    )
    test_so_far = FeatureSet.concat(
        [sampler.draw(c, config.test_per_class) for c in universe[0].class_ids], d
    )
    sessions = [
        SessionData(
            session_index=0,
            labeled=base_labeled,
            unlabeled=UnlabeledPool(
                vectors=np.zeros((0, d)), sample_ids=np.zeros(0, dtype=np.int64)
            ),
            unlabeled_truth=np.zeros(0, dtype=np.int64),
            test=test_so_far,
            new_classes=universe[0],
        )
    ]

    n_base = pool_base_count(config)
    n_novel = config.unlabeled_count - n_base
    seen_novel: List[int] = []

    for t in range(1, config.session_count + 1):
        new = universe[t]
        shots = FeatureSet.concat([sampler.draw(c, config.shots) for c in new.class_ids], d)
        test_so_far = FeatureSet.concat(
            [test_so_far] + [sampler.draw(c, config.test_per_class) for c in new.class_ids], d
        )
        seen_novel.extend(new.class_ids)
        novel_scope = new.class_ids if config.pool_scope == PoolScope.CURRENT else seen_novel

        hidden = np.concatenate(
            [
                rng.choice(base_ids, size=n_base, replace=True),
                rng.choice(np.asarray(novel_scope, dtype=np.int64), size=n_novel, replace=True),
            ]
        ).astype(np.int64)
        hidden = hidden[rng.permutation(len(hidden))]
        pool = sampler.draw_labels(hidden, d)

        sessions.append(
            SessionData(
                session_index=t,
                labeled=shots,
                unlabeled=UnlabeledPool(vectors=pool.vectors, sample_ids=pool.sample_ids),
                unlabeled_truth=pool.labels,
                test=test_so_far,
                new_classes=new,
            )
        )

    logger.info(
        "[DATAGEN] benchmark sessions=%d base_classes=%d pool=%d "
        "(base=%d novel=%d scope=%s) seed=%d",
        len(sessions),
        config.base_class_count,
        config.unlabeled_count,
        n_base,
        n_novel,
        config.pool_scope.value,
        config.seed,
    )
    return sessions
