import numpy as np
import pytest
from pydantic import ValidationError

from aldc.core import (
    ALDCError,
    ClassifierError,
    ConfigError,
    class_universe,
    novel_class_budget,
    unit_rows,
    validate_config,
)
from aldc.data.models import ExperimentConfig, PoolScope, Strategy, WeightUpdateRule


def test_default_config_is_valid():
    config = ExperimentConfig()
    assert validate_config(config) is config
    assert (config.ways, config.shots, config.unlabeled_count) == (5, 5, 50)
    assert config.m == 0.2 and config.alpha == 0.2


def test_zero_dim_rejected():
    with pytest.raises(ConfigError, match="dim must be positive"):
        validate_config(ExperimentConfig(dim=0))


def test_ratio_out_of_range_rejected():
    with pytest.raises(ConfigError, match="base_to_novel_ratio"):
        validate_config(ExperimentConfig(base_to_novel_ratio=1.5))


def test_first_violated_field_is_reported():
    with pytest.raises(ConfigError, match="^dim"):
        validate_config(ExperimentConfig(dim=0, m=-1.0))


@pytest.mark.parametrize(
    "overrides, field",
    [
        ({"m": -0.1}, "m must"),
        ({"alpha": float("nan")}, "alpha must"),
        ({"k_base": -1}, "k_base"),
        ({"seed": -1}, "seed"),
        ({"test_per_class": 0}, "test_per_class"),
        ({"novel_mixing": 1.2}, "novel_mixing"),
        ({"novel_class_count": 10}, "novel_class_count"),
        ({"shots": 0}, "shots must be positive"),
    ],
)
def test_invalid_fields_rejected(overrides, field):
    with pytest.raises(ConfigError, match=field):
        validate_config(ExperimentConfig(**overrides))


def test_config_errors_are_value_errors():
    assert issubclass(ConfigError, ALDCError)
    assert issubclass(ALDCError, ValueError)


def test_unknown_strategy_rejected_by_model():
    with pytest.raises(ValidationError):
        ExperimentConfig(strategy="aggressive")


def test_strategy_coerced_from_text():
    assert ExperimentConfig(strategy="static").strategy is Strategy.STATIC


def test_generated_count_defaults_to_pool_over_ways():
    assert ExperimentConfig().generated_count == 10
    assert ExperimentConfig(generated_per_class=3).generated_count == 3


def test_class_universe_is_dense_and_disjoint():
    config = ExperimentConfig(base_class_count=60, session_count=8)
    universe = class_universe(config)
    assert len(universe) == 9
    assert universe[0].class_ids == tuple(range(60))
    assert universe[1].class_ids == (60, 61, 62, 63, 64)
    assert universe[8].class_ids == (95, 96, 97, 98, 99)
    seen = [c for s in universe for c in s.class_ids]
    assert len(seen) == len(set(seen)) == 100


def test_novel_class_budget():
    assert novel_class_budget(ExperimentConfig()) == 20
    assert novel_class_budget(ExperimentConfig(session_count=0)) == 0


def test_budget_beyond_available_novel_classes():
    config = ExperimentConfig(session_count=5, novel_class_count=24)
    assert novel_class_budget(config) == 25
    with pytest.raises(ConfigError, match=r"ways \* session_count"):
        validate_config(config)


def test_extension_defaults():
    config = ExperimentConfig()
    assert config.weight_update is WeightUpdateRule.REPLACE
    assert config.pool_scope is PoolScope.ALL_SEEN
    assert config.update_base_weights is False
    assert ExperimentConfig(pool_scope="current").pool_scope is PoolScope.CURRENT
    with pytest.raises(ValidationError):
        ExperimentConfig(pool_scope="future")


def test_unit_rows_normalizes():
    out = unit_rows(np.array([[3.0, 4.0], [0.0, 2.0]]))
    assert np.allclose(out, [[0.6, 0.8], [0.0, 1.0]])


def test_unit_rows_rejects_zero_row():
    with pytest.raises(ClassifierError, match="row 1"):
        unit_rows(np.array([[1.0, 0.0], [0.0, 0.0]]))
