import json
from fractions import Fraction

import pytest

from collabsim.config import ExperimentConfig, ProtocolConfig, default_allocation, exact_fraction
from collabsim.errors import ConfigError


@pytest.mark.parametrize("k", range(0, 7))
def test_default_allocation_sums_to_one(k):
    alloc = default_allocation(k)
    assert len(alloc) == k
    if k:
        assert sum(alloc) == pytest.approx(1.0)


def test_round_budget_uses_decimal_fractions():
    p = ProtocolConfig(rounds=2, allocation=(0.2, 0.8))
    # 0.2 * 5 is exactly 1 in decimal but 1.0000000000000002 would not floor to 0 anyway;
    # 0.1 * 30 floors to 3, not 2
    assert p.round_budget(0, 5) == 1
    assert ProtocolConfig(rounds=1, allocation=(0.1,)).round_budget(0, 30) == 3
    assert exact_fraction(0.1) == Fraction(1, 10)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"rounds": -1},
        {"total_budget": -5},
        {"budget_fraction": 1.5},
        {"rounds": 2, "allocation": (1.0,)},
        {"rounds": 2, "allocation": (0.7, 0.4)},
        {"rounds": 1, "allocation": (-0.1,)},
        {"noise_sigma": -1},
    ],
)
def test_protocol_validation(kwargs):
    with pytest.raises(ConfigError):
        ProtocolConfig(**kwargs)


def test_allocation_summing_exactly_to_one_is_accepted():
    ProtocolConfig(rounds=3, allocation=(0.2, 0.6, 0.2))
    ProtocolConfig(rounds=3, allocation=(0.1, 0.2, 0.7))


def test_experiment_config_json_roundtrip(tmp_path):
    cfg = ExperimentConfig().with_protocol(rounds=2, budget_fraction=0.05)
    path = tmp_path / "c.json"
    path.write_text(json.dumps(cfg.to_dict()))
    again = ExperimentConfig.load(path)
    assert again.protocol == cfg.protocol and again.fusion == cfg.fusion and again.scenarios == cfg.scenarios


def test_unknown_keys_and_bad_json(tmp_path):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"protocl": {}})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"protocol": {"round": 1}})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"protocol": 3})
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    with pytest.raises(ConfigError):
        ExperimentConfig.load(bad)
    with pytest.raises(ConfigError):
        ExperimentConfig(detect_threshold=1.0)
