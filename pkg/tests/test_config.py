from __future__ import annotations

import pytest

from dynsplit.core.config import (
    ConfigError,
    ExperimentConfig,
    apply_overrides,
    dump_config,
    load_config,
    parse_override,
    validate_config,
)


def test_defaults():
    cfg = validate_config({})
    assert cfg.n_devices == 5
    assert cfg.n_splits == 5
    assert cfg.capacity_range == (0.5, 7.5)
    assert cfg.episodes == 50 and cfg.steps_per_episode == 75
    assert cfg.unavailability_prob == pytest.approx(0.10)
    assert cfg.replay_capacity == 10_000
    assert cfg.epsilon.start == 1.0 and cfg.epsilon.end == 0.05
    assert cfg.agent_mode == "shared" and cfg.merge_mode == "sequential"
    assert cfg.state_dim == 2


def test_unavailability_out_of_range_names_field():
    with pytest.raises(ConfigError) as exc:
        validate_config({"unavailability_prob": 1.5})
    assert exc.value.field == "unavailability_prob"
    assert "unavailability_prob" in str(exc.value)


def test_inverted_capacity_range():
    with pytest.raises(ConfigError, match="low >= high"):
        validate_config({"capacity_range": [7.5, 0.5]})


@pytest.mark.parametrize("raw, field", [
    ({"discount": 1.5}, "discount"),
    ({"n_splits": 1}, "n_splits"),
    ({"batch_size": 0}, "batch_size"),
    ({"reward": {"alpha": -1}}, "reward.alpha"),
    ({"reward": {"mode": "lenient"}}, "reward.mode"),
    ({"agent_mode": "solo"}, "agent_mode"),
    ({"merge_mode": "mixed"}, "merge_mode"),
    ({"state_dim": 4}, "state_dim"),
    ({"seed": 2**64}, "seed"),
    ({"seed": -1}, "seed"),
    ({"weight_decay": -0.1}, "weight_decay"),
    ({"distribution": {"kind": "dirichlet"}}, "distribution.kind"),
    ({"n_splits": 6}, "hidden"),
])
def test_range_errors(raw, field):
    with pytest.raises(ConfigError) as exc:
        validate_config(raw)
    assert exc.value.field == field


def test_unknown_keys_are_listed():
    with pytest.raises(ConfigError) as exc:
        validate_config({"learning_rate": 0.1, "reward": {"gamma": 1}})
    msg = str(exc.value)
    assert "learning_rate" in msg


def test_unknown_nested_key_has_prefix():
    with pytest.raises(ConfigError) as exc:
        validate_config({"reward": {"gamma": 1}})
    assert "reward.gamma" in str(exc.value)


def test_seed_accepts_full_u64():
    assert validate_config({"seed": 2**64 - 1}).seed == 2**64 - 1


def test_overrides_nested_and_typed():
    raw = apply_overrides({}, ["reward.beta=0.25", "lr=1e-3", "hidden=[16,16,16,16,16]"])
    cfg = validate_config(raw)
    assert cfg.reward.beta == 0.25
    assert cfg.lr == pytest.approx(1e-3)
    assert cfg.hidden == (16, 16, 16, 16, 16)


def test_parse_override_rejects_missing_equals():
    with pytest.raises(ConfigError):
        parse_override("episodes")


def test_yaml_roundtrip(tmp_path):
    cfg = validate_config({"seed": 7, "lr": 0.002, "reward": {"mode": "soft"}})
    path = tmp_path / "c.yaml"
    path.write_text(dump_config(cfg), encoding="utf-8")
    again = load_config(path)
    assert again == cfg
    assert again.config_hash() == cfg.config_hash()


def test_load_config_applies_overrides_over_file(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("episodes: 3\nseed: 1\n", encoding="utf-8")
    cfg = load_config(path, ["seed=9"])
    assert cfg.episodes == 3 and cfg.seed == 9


def test_load_config_rejects_non_mapping(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("- 1\n- 2\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_config(path)


def test_hash_changes_with_content():
    a = validate_config({})
    assert a.config_hash() == ExperimentConfig().config_hash()
    assert a.config_hash() != a.replace(lr=0.002).config_hash()
    assert len(a.config_hash()) == 12
