import numpy as np
import pytest

from aeolus.errors import ConfigError
from aeolus.mnemosyne_replay.episode_log import read_log, write_log
from aeolus.mnemosyne_replay.relabel import log_to_buffer, relabel, relabel_file, reward_law
from aeolus.themis_tasks.rewards import reach_reward


def assert_only_rewards_differ(a, b):
    for name in a.records.dtype.names:
        if name != "reward":
            assert np.array_equal(a.records[name], b.records[name]), name


def test_relabel_is_idempotent(make_log):
    """Test that relabeling with the reward already stored changes nothing."""
    hover = relabel(make_log(), reward_law("hover", 3))
    again = relabel(hover, reward_law("hover", 3))
    assert np.allclose(again.records["reward"], hover.records["reward"], atol=1e-6)


def test_only_the_reward_column_changes(make_log):
    """Test field-wise equality of everything but the reward."""
    log = make_log()
    relabeled = relabel(log, reward_law("stack", 3))
    assert_only_rewards_differ(log, relabeled)
    assert not np.array_equal(log.records["reward"], relabeled.records["reward"])


def test_source_log_is_untouched(make_log):
    """Test that relabel returns a copy."""
    log = make_log()
    before = log.records.copy()
    relabel(log, reward_law("constant", 3))
    assert log.records.tobytes() == before.tobytes()


def test_hover_center_never_exceeds_hover(make_log):
    """Test that the center factor only lowers hover rewards."""
    log = make_log()
    hover = relabel(log, reward_law("hover", 3)).records["reward"]
    center = relabel(log, reward_law("hover-center", 3)).records["reward"]
    assert np.all(center <= hover)


def test_constant_law(make_log):
    """Test that the constant law gives reward 1 everywhere."""
    assert np.all(relabel(make_log(), reward_law("constant", 3)).records["reward"] == 1.0)


def test_reach_uses_stored_goals(make_log):
    """Test that reach rewards are scored against each record's goal."""
    log = make_log("reach", n_balls=1)
    rewards = relabel(log, reward_law("reach", 1)).records["reward"]
    expected = reach_reward(log.records["pixels"][:, 0].astype(np.float64), log.goals())
    assert np.allclose(rewards, expected, atol=1e-6)


def test_relabel_file(tmp_path, make_log):
    """Test the file-to-file relabeling path and the rewritten task header."""
    log = make_log()
    write_log(tmp_path / "in.bofl", log)
    relabel_file(tmp_path / "in.bofl", "rearrange", tmp_path / "out.bofl")
    out = read_log(tmp_path / "out.bofl")
    assert_only_rewards_differ(log, out)
    assert out.task_id == "rearrange"
    assert out.header_values()[1:3] == log.header_values()[1:3]
    assert np.array_equal(out.records["reward"], relabel(log, reward_law("rearrange", 3)).records["reward"])


def test_constant_relabel_keeps_source_task(tmp_path, make_log):
    """Test that the constant law leaves the header task alone."""
    write_log(tmp_path / "in.bofl", make_log("hover"))
    assert relabel_file(tmp_path / "in.bofl", "constant", tmp_path / "out.bofl").task_id == "hover"
    assert read_log(tmp_path / "out.bofl").task_id == "hover"


def test_relabel_file_rejects_goal_mismatch(tmp_path, make_log):
    """Test that a goal-free log cannot become a reach log and a reach log cannot lose its goals."""
    write_log(tmp_path / "hover.bofl", make_log("hover"))
    write_log(tmp_path / "reach.bofl", make_log("reach", n_balls=1))
    with pytest.raises(ConfigError):
        relabel_file(tmp_path / "hover.bofl", "reach", tmp_path / "a.bofl")
    with pytest.raises(ConfigError):
        relabel_file(tmp_path / "reach.bofl", "hover", tmp_path / "b.bofl")
    assert not (tmp_path / "b.bofl").exists()


def test_log_to_buffer_keeps_file_order(make_log):
    """Test that a log loads into a buffer holding exactly its transitions."""
    log = make_log(n_episodes=1)
    buffer = log_to_buffer(log)
    assert len(buffer) == log.n_transitions
    first, last = buffer.get(0), buffer.get(999)
    assert np.array_equal(first.observation, log.records["observation"][0].astype(np.float64))
    assert last.done and last.step == 999
