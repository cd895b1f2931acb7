import csv
import threading

import numpy as np
import pytest

from aeolus.aeolus_engine.aeolus_engine import (
    LINE_PROFILE,
    AeolusEngine,
    learner_checkpoint_path,
    run_offline,
    run_online,
)
from aeolus.aeolus_engine.experiment_config import RESOLVED_CONFIG, build_experiment_config
from aeolus.config_file import read_key_value_file
from aeolus.errors import ConfigError, DatasetError
from aeolus.mnemosyne_replay.episode_log import file_sha256, read_log, write_log

TINY_MPO = {
    "mpo.batch_size": "16",
    "mpo.updates_per_episode": "2",
    "mpo.hidden_sizes": "8",
    "mpo.n_action_samples": "4",
    "mpo.target_period": "2",
}
TINY_CRR = {
    "crr.batch_size": "16",
    "crr.hidden_sizes": "8",
    "crr.advantage_samples": "2",
    "crr.eval_period": "2",
    "crr.eval_episodes": "1",
}


def online_config(out_dir, **extra):
    values = {"task": "reach", "steps": "2000", "seed": "3", "out": str(out_dir), "eval_period": "1",
              "eval_episodes": "1", **TINY_MPO}
    values.update(extra)
    return build_experiment_config(values)


def read_rows(path):
    with open(path, newline="") as handle:
        return list(csv.reader(handle))


def test_online_run_writes_its_artifacts(tmp_path):
    """Test the logs, CSVs and checkpoints of a two-episode online run."""
    summary = run_online(online_config(tmp_path))
    assert summary.episodes == 2
    assert summary.env_steps == 2000
    assert summary.learner_steps == 4
    assert [step for step, _ in summary.eval_returns] == [1000, 2000]
    assert read_rows(tmp_path / "train.csv")[0] == ["env_steps", "mean_episode_return"]
    assert [row[0] for row in read_rows(tmp_path / "eval.csv")[1:]] == ["1000", "2000"]
    assert learner_checkpoint_path(tmp_path, 1000).exists()
    assert learner_checkpoint_path(tmp_path, 2000).exists()
    assert (tmp_path / RESOLVED_CONFIG).exists()
    log = read_log(tmp_path / "episodes.bofl")
    assert log.task_id == "reach"
    assert log.n_episodes == 2
    assert all(0.0 <= r <= 1.0 for r in summary.train_returns)


def test_online_run_is_reproducible(tmp_path):
    """Test that one config run twice leaves byte-identical logs and configs."""
    first = run_online(online_config(tmp_path / "a", steps="1000"))
    second = run_online(online_config(tmp_path / "b", steps="1000"))
    assert file_sha256(tmp_path / "a" / "episodes.bofl") == file_sha256(tmp_path / "b" / "episodes.bofl")
    assert (tmp_path / "a" / RESOLVED_CONFIG).read_text() == (tmp_path / "b" / RESOLVED_CONFIG).read_text()
    assert first.train_returns == second.train_returns
    assert first.eval_returns == second.eval_returns


def test_online_run_needs_mpo(tmp_path):
    """Test that an offline config is refused by the online loop."""
    with pytest.raises(ConfigError):
        run_online(online_config(tmp_path, algorithm="crr"))


def test_evaluate_saved_learner(tmp_path):
    """Test that a saved learner evaluates deterministically and logs its episodes."""
    run_online(online_config(tmp_path / "train", steps="1000"))
    checkpoint = learner_checkpoint_path(tmp_path / "train", 1000)
    engine = AeolusEngine(online_config(tmp_path / "eval"))
    returns = engine.evaluate_checkpoint(checkpoint, 2)
    assert len(returns) == 2
    assert read_log(tmp_path / "eval" / "episodes.bofl").n_episodes == 2
    assert len(read_rows(tmp_path / "eval" / "eval_returns.csv")) == 3
    assert engine.evaluate_checkpoint(checkpoint, 2) == returns
    with pytest.raises(ConfigError):
        engine.evaluate_checkpoint(checkpoint, 0)


def test_offline_run_records_provenance(tmp_path, make_log):
    """Test the provenance hash and evaluation schedule of an offline run."""
    dataset = tmp_path / "data.bofl"
    write_log(dataset, make_log("reach", n_episodes=1, n_balls=1))
    config = build_experiment_config(
        {"task": "reach", "algorithm": "crr", "steps": "4", "out": str(tmp_path / "run"), **TINY_CRR}
    )
    summary = run_offline(config, dataset)
    provenance = read_key_value_file(tmp_path / "run" / "provenance.txt")
    assert provenance["dataset_sha256"] == file_sha256(dataset)
    assert provenance["dataset_transitions"] == "1000"
    assert summary.learner_steps == 4
    assert [step for step, _ in summary.eval_returns] == [2, 4]
    assert all(np.isfinite(score) for _, score in summary.eval_returns)


def test_offline_run_checks_the_dataset(tmp_path, make_log):
    """Test a missing dataset and one logged for another observation size."""
    config = build_experiment_config(
        {"task": "reach", "algorithm": "crr", "steps": "2", "out": str(tmp_path / "run"), **TINY_CRR}
    )
    with pytest.raises(DatasetError):
        run_offline(config, tmp_path / "absent.bofl")
    wrong = tmp_path / "hover.bofl"
    write_log(wrong, make_log("hover", n_episodes=1))
    with pytest.raises(ConfigError):
        run_offline(config, wrong)


def test_threaded_run_profiles_the_learner_only(tmp_path, monkeypatch):
    """Test that a threaded profiled run never enters the profiler from the actor thread."""
    profiling_threads = set()
    profiled = AeolusEngine._profiled

    def recording(self, fn, *args):
        profiling_threads.add(threading.current_thread().name)
        return profiled(self, fn, *args)

    monkeypatch.setattr(AeolusEngine, "_profiled", recording)
    config = online_config(tmp_path, threaded="true", eval_period="2")
    summary = AeolusEngine(config, profile=True).run_online()
    assert summary.episodes == 2
    assert profiling_threads == {threading.main_thread().name}
    assert "learner_step" in (tmp_path / LINE_PROFILE).read_text()
