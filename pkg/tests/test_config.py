import pytest
from hypothesis import given, strategies as st

from swarmlearn.config import (ENVIRONMENTS, SEASONS, VARIANTS, ConfigError, ExperimentConfig,
                               SweepConfig, apply_preset, load_config, save_config)


def test_defaults_and_label():
    cfg = ExperimentConfig()
    assert cfg.arena.width == 1024.0 and cfg.evo.max_lifetime == 2500
    assert cfg.energy.start == 500.0
    (c,) = apply_preset("desk:abundant:static:EVO+IL")
    assert (c.env.token_count, c.env.token_value) == ENVIRONMENTS["abundant"]
    assert c.robot.count == 50 and c.run.max_iterations == 100_000 and c.run.runs == 10
    assert c.label == "abundant_p0_evo_il"


def test_grid_expands_factorial_design():
    cfgs = apply_preset("desk:grid")
    assert len(cfgs) == len(ENVIRONMENTS) * len(SEASONS) * len(VARIANTS) == 36
    assert len({c.label for c in cfgs}) == 36
    assert all(c.robot.count == 50 for c in cfgs)


@pytest.mark.parametrize("name", ["desk:tropical", "desk:balanced:weekly", "Lamarck"])
def test_invalid_preset(name):
    with pytest.raises(ConfigError):
        apply_preset(name)


def test_variant_slugs_and_names():
    assert apply_preset("baseline")[0].learn.variant == "Baseline"
    assert apply_preset("evo_il")[0].learn.variant == "EVO+IL"
    assert apply_preset("IL")[0].learn.variant == "IL"


def test_yaml_round_trip(tmp_path):
    cfg = apply_preset("desk:scarce:15k:IL")[0].with_overrides(**{"run.seed": 17})
    path = tmp_path / "c.yaml"
    save_config(cfg, path)
    back = load_config(path)
    assert back == cfg and back.digest() == cfg.digest()


def test_unknown_and_bad_values():
    with pytest.raises(ConfigError):
        ExperimentConfig().with_overrides(**{"env.colour": 3})
    with pytest.raises(ConfigError):
        ExperimentConfig().with_overrides(**{"robot.count": "many"})
    with pytest.raises(ConfigError):
        ExperimentConfig().with_overrides(**{"learn.variant": "Lamarck"})
    with pytest.raises(ConfigError):
        ExperimentConfig.loads("- just\n- a list\n")


def test_string_overrides_are_coerced():
    cfg = ExperimentConfig().with_overrides(**{"robot.count": "12", "evo.sigma": "0.2",
                                               "run.event_log": "false"})
    assert cfg.robot.count == 12 and cfg.evo.sigma == 0.2 and cfg.run.event_log is False


@given(st.integers(1, 500), st.integers(0, 5000), st.floats(1, 5000), st.sampled_from(VARIANTS))
def test_flat_round_trip(n, tokens, value, variant):
    cfg = ExperimentConfig().with_overrides(**{"robot.count": n, "env.token_count": tokens,
                                               "env.token_value": value, "learn.variant": variant})
    assert ExperimentConfig.loads(cfg.dumps()) == cfg


def test_sweep_config_round_trip():
    sw = SweepConfig(counts=(10, 20), values=(100.0,), iterations=50, runs=2, seed=4)
    back = SweepConfig.loads(sw.dumps())
    assert back == sw
    with pytest.raises(ConfigError):
        SweepConfig(counts=())


def test_full_scale_preset():
    cfgs = apply_preset("full:grid")
    assert len(cfgs) == 36
    c = cfgs[0]
    assert (c.robot.count, c.run.max_iterations, c.run.runs) == (100, 1_000_000, 30)
    assert c.run.epoch == 5000 and c.run.end_epochs == 2
