"""
Session runner for the generalized semi-supervised FSCIL protocol.

Base session: prototype weights and per-class Gaussian statistics from the
abundant base data. Each incremental session then:

  1. initializes the new classes' weights from their shots
  2. scores the unlabeled pool against the base and novel blocks
  3. sets tau for the strategy and partitions the pool
  4. pseudo-labels the confident samples
  5. calibrates and samples the new classes (strategies with calibration)
  6. updates the weights from shots + pseudo-labeled + generated features
  7. evaluates jointly over every seen class

Hidden pool labels are only read here, after partitioning, to measure
pseudo-label precision.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import product
from types import MappingProxyType
from typing import Dict, FrozenSet, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from aldc.config import Settings
from aldc.core import ProtocolError, class_universe, validate_config
from aldc.data.generator import generate_benchmark
from aldc.data.models import (
    ExperimentConfig,
    FeatureSet,
    RunReport,
    SessionData,
    SessionMetrics,
    Strategy,
    Threshold,
    WeightUpdateRule,
)
from aldc.engine.alt import Partition, partition, score_unlabeled, threshold_for_strategy
from aldc.engine.b2n import (
    ClassStatistics,
    calibrate,
    class_rng,
    class_statistics,
    sample_features,
    select_base_classes,
)
from aldc.engine.classifier import (
    ClassifierWeights,
    evaluate,
    init_base_weights,
    init_novel_weights,
    update_weights,
)

logger = logging.getLogger(__name__)

SWEEP_PARAMETERS = ("unlabeled_count", "base_to_novel_ratio", "m", "alpha")

# (label, strategy, calibration override) per component-ablation row
COMPONENT_VARIANTS: Tuple[Tuple[str, Strategy, bool], ...] = (
    ("baseline", Strategy.BASELINE, False),
    ("alt", Strategy.DROP, False),
    ("b2n", Strategy.BASELINE, True),
    ("aldc", Strategy.DYNAMIC, True),
)


@dataclass(frozen=True, eq=False)
class SessionState:
    weights: ClassifierWeights
    base_stats: Mapping[int, ClassStatistics]
    threshold: Threshold
    session_index: int
    trained_sample_ids: FrozenSet[int] = frozenset()


def run_base_session(session0: SessionData, config: ExperimentConfig) -> SessionState:
    """Base weights, stored base statistics, and the initial threshold."""
    if session0.session_index != 0:
        raise ProtocolError(f"expected session 0, got session {session0.session_index}")
    expected = class_universe(config)[0].class_ids
    weights = init_base_weights(session0.labeled, expected_ids=expected)

    stats = {
        c: class_statistics(session0.labeled.of_class(c), c) for c in session0.labeled.class_ids()
    }
    logger.info("[PROTOCOL] base session classes=%d samples=%d", len(stats), len(session0.labeled))
    return SessionState(
        weights=weights,
        base_stats=MappingProxyType(stats),
        threshold=Threshold(tau=config.static_threshold, m=config.m, n_scored=0),
        session_index=0,
        trained_sample_ids=frozenset(int(i) for i in session0.labeled.sample_ids),
    )


def _pseudo_labeled(
    data: SessionData, part: Partition, weights: ClassifierWeights, config: ExperimentConfig
) -> FeatureSet:
    rows = [
        (i, c)
        for i, c in part.confident
        if config.update_base_weights or not weights.is_base(c)
    ]
    if not rows:
        return FeatureSet.empty(config.dim)
    index = np.asarray([i for i, _ in rows], dtype=np.int64)
    return FeatureSet(
        vectors=data.unlabeled.vectors[index],
        labels=np.asarray([c for _, c in rows], dtype=np.int64),
        sample_ids=data.unlabeled.sample_ids[index],
    )


def _pseudo_precision(data: SessionData, part: Partition) -> Optional[float]:
    if not part.confident:
        return None
    hits = sum(1 for i, c in part.confident if int(data.unlabeled_truth[i]) == c)
    return hits / len(part.confident)


def _generate_novel_features(
    data: SessionData,
    part: Partition,
    state: SessionState,
    weights: ClassifierWeights,
    config: ExperimentConfig,
) -> FeatureSet:
    pairs = [(b, nv) for _, b, nv in part.ambiguous]
    generated: List[FeatureSet] = []

    for c in data.new_classes.class_ids:
        rows = data.labeled.of_class(c)
        if config.include_ambiguous_in_stats:
            extra = [i for i, _, nv in part.ambiguous if nv == c]
            if extra:
                rows = np.concatenate([rows, data.unlabeled.vectors[np.asarray(extra)]])
        novel = class_statistics(rows, c)
        chosen = select_base_classes(c, pairs, state.base_stats, weights.vectors[c], config.k_base)
        dist = calibrate(novel, [state.base_stats[b] for b in chosen], config.alpha)
        draws = sample_features(
            dist, config.generated_count, class_rng(config.seed, data.session_index, c)
        )
        logger.debug("[B2N] class=%d base=%s generated=%d", c, chosen, len(draws))
        generated.append(
            FeatureSet(
                vectors=draws,
                labels=np.full(len(draws), c, dtype=np.int64),
                sample_ids=np.full(len(draws), -1, dtype=np.int64),
            )
        )
    return FeatureSet.concat(generated, config.dim)


def run_incremental_session(
    state: SessionState,
    session_data: SessionData,
    config: ExperimentConfig,
    strategy: Optional[Strategy] = None,
) -> Tuple[SessionState, SessionMetrics]:
    """One incremental session; returns the next state and its metrics."""
    strategy = config.strategy if strategy is None else Strategy(strategy)
    t = session_data.session_index
    if t != state.session_index + 1:
        raise ProtocolError(f"expected session {state.session_index + 1}, got session {t}")

    weights = init_novel_weights(
        state.weights,
        session_data.labeled,
        expected_ids=session_data.new_classes.class_ids,
        shots_per_class=config.shots,
    )

    pool = session_data.unlabeled
    scores = score_unlabeled(pool.vectors, weights)
    if len(pool):
        threshold = threshold_for_strategy(strategy, scores, config.m, config.static_threshold)
    else:
        threshold = state.threshold
    part = partition(scores, threshold)

    pseudo = _pseudo_labeled(session_data, part, weights, config)
    generated = (
        _generate_novel_features(session_data, part, state, weights, config)
        if config.calibration_enabled(strategy)
        else FeatureSet.empty(config.dim)
    )

    parts = [pseudo, generated]
    # Under accumulate the shots already sit in the support sums from init_novel_weights.
    if config.weight_update == WeightUpdateRule.REPLACE:
        parts.insert(0, session_data.labeled)
    update_set = FeatureSet.concat(parts, config.dim)
    weights = update_weights(weights, update_set, config.weight_update)

    metrics = evaluate(session_data.test, weights).model_copy(
        update={
            "session_index": t,
            "pseudo_precision": _pseudo_precision(session_data, part),
            "n_confident": len(part.confident),
            "n_ambiguous": len(part.ambiguous),
            "n_generated": len(generated),
            "tau_used": threshold.tau,
        }
    )

    trained = set(state.trained_sample_ids)
    trained.update(int(i) for i in session_data.labeled.sample_ids)
    trained.update(int(i) for i in pseudo.sample_ids)

    logger.info(
        "[PROTOCOL] session=%d strategy=%s tau=%.4f confident=%d ambiguous=%d generated=%d acc=%.2f",
        t,
        strategy.value,
        threshold.tau,
        metrics.n_confident,
        metrics.n_ambiguous,
        metrics.n_generated,
        metrics.acc_all,
    )
    next_state = SessionState(
        weights=weights,
        base_stats=state.base_stats,
        threshold=threshold,
        session_index=t,
        trained_sample_ids=frozenset(trained),
    )
    return next_state, metrics


def run_sessions(
    config: ExperimentConfig, sessions: Sequence[SessionData]
) -> Tuple[List[SessionState], List[SessionMetrics]]:
    """Run a prepared benchmark; returns every intermediate state and metric."""
    if not sessions:
        raise ProtocolError("benchmark has no sessions")
    state = run_base_session(sessions[0], config)
    states = [state]
    metrics = [evaluate(sessions[0].test, state.weights)]
    for data in sessions[1:]:
        state, m = run_incremental_session(state, data, config)
        states.append(state)
        metrics.append(m)
    return states, metrics


def run_experiment(
    config: ExperimentConfig,
    sessions: Optional[Sequence[SessionData]] = None,
    label: Optional[str] = None,
) -> RunReport:
    """Base session then T incremental sessions; deterministic given the seed."""
    validate_config(config)
    if sessions is None:
        sessions = generate_benchmark(config)
    _, metrics = run_sessions(config, sessions)
    report = RunReport.from_sessions(label or config.strategy.value, config, metrics)
    logger.info("[PROTOCOL] run=%s avg=%.4f", report.label, report.avg_all)
    return report


def run_ablation(
    config: ExperimentConfig, sessions: Optional[Sequence[SessionData]] = None
) -> Dict[str, RunReport]:
    """All four strategies on one identical benchmark."""
    validate_config(config)
    if sessions is None:
        sessions = generate_benchmark(config)
    reports: Dict[str, RunReport] = {}
    for strategy in Strategy:
        variant = config.model_copy(update={"strategy": strategy})
        reports[strategy.value] = run_experiment(variant, sessions, label=strategy.value)
    return reports


def run_component_ablation(
    config: ExperimentConfig, sessions: Optional[Sequence[SessionData]] = None
) -> Dict[str, RunReport]:
    """Baseline, ALT only, B2N only, and both, on one identical benchmark."""
    validate_config(config)
    if sessions is None:
        sessions = generate_benchmark(config)
    reports: Dict[str, RunReport] = {}
    for label, strategy, calibration in COMPONENT_VARIANTS:
        variant = config.model_copy(update={"strategy": strategy, "calibration": calibration})
        reports[label] = run_experiment(variant, sessions, label=label)
    return reports


def sweep_points(grid: Mapping[str, Sequence[float]]) -> List[Dict[str, float]]:
    """Cartesian product of the grid in parameter-insertion order."""
    if not grid or any(len(values) == 0 for values in grid.values()):
        raise ProtocolError("sweep grid is empty")
    unknown = [name for name in grid if name not in SWEEP_PARAMETERS]
    if unknown:
        raise ProtocolError(
            f"cannot sweep {unknown[0]!r}; choose from {', '.join(SWEEP_PARAMETERS)}"
        )
    names = list(grid)
    return [dict(zip(names, combo)) for combo in product(*(grid[n] for n in names))]


def _sweep_value(name: str, value: float) -> float:
    if name != "unlabeled_count":
        return float(value)
    if not float(value).is_integer():
        raise ProtocolError(f"unlabeled_count must be a whole number, got {value:g}")
    return int(value)


def _point_label(point: Mapping[str, float]) -> str:
    return ";".join(f"{name}={value:g}" for name, value in point.items())


def sweep(
    config: ExperimentConfig,
    grid: Mapping[str, Sequence[float]],
    workers: Optional[int] = None,
) -> List[RunReport]:
    """
    One report per grid point, in grid order. Each point regenerates its
    benchmark from the same master seed; points may run on worker threads.
    """
    points = sweep_points(grid)
    variants = []
    for point in points:
        update = {name: _sweep_value(name, value) for name, value in point.items()}
        variants.append((_point_label(point), validate_config(config.model_copy(update=update))))

    def _run(item: Tuple[str, ExperimentConfig]) -> RunReport:
        label, variant = item
        return run_experiment(variant, label=label)

    n_workers = workers if workers is not None else Settings.sweep_workers()
    logger.info("[PROTOCOL] sweep points=%d workers=%d", len(variants), n_workers)
    if n_workers <= 1:
        return [_run(item) for item in variants]
    with ThreadPoolExecutor(max_workers=n_workers) as pool:
        return list(pool.map(_run, variants))
