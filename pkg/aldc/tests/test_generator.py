import numpy as np
import pytest

from aldc.core import BenchmarkError
from aldc.data.generator import (
    base_separation,
    generate_benchmark,
    make_class_generators,
    novel_mean,
    pool_base_count,
)
from aldc.data.models import ExperimentConfig, PoolScope

SMALL = dict(dim=16, base_class_count=6, base_samples_per_class=20, test_per_class=5)


def _config(**overrides):
    return ExperimentConfig(**{**SMALL, **overrides})


def test_sessions_introduce_ways_classes_with_shots():
    sessions = generate_benchmark(_config(session_count=8))
    assert len(sessions) == 9
    for t, data in enumerate(sessions[1:], start=1):
        assert len(data.new_classes) == 5
        assert len(data.labeled) == 25
        assert data.labeled.class_ids() == list(data.new_classes.class_ids)
        assert data.session_index == t


def test_base_session_has_no_pool():
    session0 = generate_benchmark(_config())[0]
    assert len(session0.unlabeled) == 0
    assert len(session0.labeled) == 6 * 20
    assert session0.labeled.class_ids() == list(range(6))


def test_ratio_one_keeps_pool_in_base_classes():
    for data in generate_benchmark(_config(base_to_novel_ratio=1.0))[1:]:
        assert np.all(data.unlabeled_truth < 6)


def test_ratio_half_splits_pool_exactly():
    config = _config(base_to_novel_ratio=0.5, unlabeled_count=50)
    for data in generate_benchmark(config)[1:]:
        assert int(np.sum(data.unlabeled_truth < 6)) == 25
        assert int(np.sum(data.unlabeled_truth >= 6)) == 25


def test_odd_remainder_goes_to_base():
    assert pool_base_count(_config(unlabeled_count=25, base_to_novel_ratio=0.5)) == 13


def test_pool_novel_labels_come_from_seen_classes_only():
    sessions = generate_benchmark(_config(session_count=3))
    for data in sessions[1:]:
        seen = set(range(6 + 5 * data.session_index))
        assert set(int(c) for c in data.unlabeled_truth) <= seen


def test_current_scope_pool_holds_only_new_novel_classes():
    config = _config(session_count=3, base_to_novel_ratio=0.2, pool_scope=PoolScope.CURRENT)
    for data in generate_benchmark(config)[1:]:
        novel = {int(c) for c in data.unlabeled_truth if c >= 6}
        assert novel
        assert novel <= set(data.new_classes.class_ids)


def test_all_seen_scope_reaches_earlier_sessions():
    config = _config(session_count=3, base_to_novel_ratio=0.0, unlabeled_count=200)
    assert config.pool_scope == PoolScope.ALL_SEEN
    last = generate_benchmark(config)[-1]
    earlier = {int(c) for c in last.unlabeled_truth} - set(last.new_classes.class_ids)
    assert earlier and all(c >= 6 for c in earlier)


def test_scope_leaves_shots_and_tests_alone():
    seen = generate_benchmark(_config(session_count=2))
    current = generate_benchmark(_config(session_count=2, pool_scope=PoolScope.CURRENT))
    assert np.array_equal(seen[1].labeled.vectors, current[1].labeled.vectors)
    assert np.array_equal(seen[1].test.labels, current[1].test.labels)


def test_base_sample_means_near_true_means():
    config = _config(base_samples_per_class=200, class_std=0.5)
    n = config.base_samples_per_class
    assert n >= 10 * config.dim
    session0 = generate_benchmark(config)[0]
    generators = make_class_generators(config, np.random.default_rng(config.seed))
    for g in generators[:6]:
        rows = session0.labeled.of_class(g.class_id)
        sigma_max = float(np.sqrt(np.max(np.diag(g.true_covariance))))
        gap = np.max(np.abs(rows.mean(axis=0) - g.true_mean))
        assert gap <= 4.0 * sigma_max / np.sqrt(n)


def test_test_sets_are_cumulative():
    sessions = generate_benchmark(_config())
    for data in sessions:
        n_classes = 6 + 5 * data.session_index
        assert data.test.class_ids() == list(range(n_classes))
        assert len(data.test) == n_classes * 5


def test_sample_ids_are_unique_across_splits():
    ids = []
    for data in generate_benchmark(_config()):
        ids.extend(int(i) for i in data.labeled.sample_ids)
        ids.extend(int(i) for i in data.unlabeled.sample_ids)
    assert len(ids) == len(set(ids))


def test_same_seed_same_arrays():
    a = generate_benchmark(_config(seed=11))
    b = generate_benchmark(_config(seed=11))
    for x, y in zip(a, b):
        assert np.array_equal(x.labeled.vectors, y.labeled.vectors)
        assert np.array_equal(x.unlabeled.vectors, y.unlabeled.vectors)
        assert np.array_equal(x.test.vectors, y.test.vectors)


def test_different_seed_different_arrays():
    a = generate_benchmark(_config(seed=1))[0]
    b = generate_benchmark(_config(seed=2))[0]
    assert not np.array_equal(a.labeled.vectors, b.labeled.vectors)


def test_insufficient_class_budget():
    with pytest.raises(BenchmarkError, match="insufficient class budget"):
        generate_benchmark(_config(novel_class_count=10))


def test_novel_mean_mixing_formula():
    assert np.allclose(novel_mean(np.array([0.0, 2.0]), np.array([2.0, 0.0]), 0.5), [1.0, 1.0])


def test_full_mixing_places_novel_on_parent():
    generators = make_class_generators(_config(novel_mixing=1.0))
    by_id = {g.class_id: g for g in generators}
    for g in generators[6:]:
        assert np.allclose(g.true_mean, by_id[g.parent_base_id].true_mean)


def test_zero_mixing_uses_fresh_direction_only():
    generators = make_class_generators(_config(novel_mixing=0.0))
    for g in generators[6:]:
        assert np.allclose(g.true_mean, g.fresh_direction)


def test_parents_round_robin_and_radius():
    config = _config(separation_radius=3.0)
    generators = make_class_generators(config)
    assert [g.parent_base_id for g in generators[6:12]] == [0, 1, 2, 3, 4, 5]
    for g in generators[:6]:
        assert np.linalg.norm(g.true_mean) == pytest.approx(3.0)
    assert 0.0 < base_separation(generators) <= 6.0
