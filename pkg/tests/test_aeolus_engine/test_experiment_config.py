import pytest

from aeolus.aeolus_engine.experiment_config import (
    RESOLVED_CONFIG,
    build_experiment_config,
    experiment_to_strings,
    load_experiment_config,
    write_resolved_config,
)
from aeolus.config_file import parse_key_values
from aeolus.errors import ConfigError


def test_defaults_follow_the_task():
    """Test that the simulator ball count comes from the task."""
    config = build_experiment_config({"task": "reach"})
    assert config.sim.n_balls == 1
    assert config.task_spec.task_id == "reach"
    assert config.algorithm == "mpo"


def test_strings_round_trip():
    """Test that rendering a config and parsing it back gives the same config."""
    config = build_experiment_config({
        "task": "stack", "seed": "9", "sim.pixel_noise": "0.25", "mpo.hidden_sizes": "32, 16",
        "mpo.fixed_beta": "0.5", "crr.beta": "3.0",
    })
    assert config.mpo.hidden_sizes == (32, 16)
    assert build_experiment_config(experiment_to_strings(config)) == config


def test_resolved_config_is_reloadable(tmp_path):
    """Test that the written resolved config loads into the same experiment."""
    config = build_experiment_config({"task": "hover-center", "steps": "5000", "out": str(tmp_path)})
    path = write_resolved_config(config)
    assert path == tmp_path / RESOLVED_CONFIG
    assert "out" not in parse_key_values(path.read_text())
    assert load_experiment_config(path, {"out": str(tmp_path)}) == config


def test_overrides_beat_the_file(tmp_path):
    """Test that command-line overrides take precedence over file values."""
    path = tmp_path / "exp.txt"
    path.write_text("# experiment\ntask = hover\nseed = 1\nsim.pixel_noise = 2.0\n")
    config = load_experiment_config(path, {"seed": "4"})
    assert config.seed == 4
    assert config.sim.pixel_noise == 2.0


@pytest.mark.parametrize(
    "values",
    [
        {"bogus": "1"},
        {"learner.lr": "1"},
        {"sim.bogus": "1"},
        {"task": "juggle"},
        {"task": "hover", "task.task_id": "stack"},
        {"task": "hover", "sim.n_balls": "2"},
        {"steps": "lots"},
        {"seed": "-1"},
        {"algorithm": "ppo"},
        {"mpo.batch_size": "0"},
    ],
)
def test_invalid_experiments(values):
    """Test that bad keys, values and inconsistent settings are config errors."""
    with pytest.raises(ConfigError):
        build_experiment_config(values)


def test_missing_file_and_repeated_key(tmp_path):
    """Test the file-level config errors."""
    with pytest.raises(ConfigError):
        load_experiment_config(tmp_path / "absent.txt")
    with pytest.raises(ConfigError):
        parse_key_values("seed = 1\nseed = 2\n")
    with pytest.raises(ConfigError):
        parse_key_values("seed 1\n")
