import numpy as np
import pytest

from aeolus.errors import BadMagicError, BadVersionError, DatasetError, TruncatedLogError
from aeolus.mnemosyne_replay.episode_log import (
    HEADER_SIZE,
    EpisodeLog,
    EpisodeLogWriter,
    decode_log,
    encode_log,
    file_sha256,
    read_log,
    write_log,
)


def test_round_trip_is_bit_exact(tmp_path, make_log):
    """Test that ten random episodes read back equal and rewrite to the same hash."""
    log = make_log(n_episodes=10)
    write_log(tmp_path / "a.bofl", log)
    loaded = read_log(tmp_path / "a.bofl")
    assert loaded == log
    write_log(tmp_path / "b.bofl", loaded)
    assert file_sha256(tmp_path / "a.bofl") == file_sha256(tmp_path / "b.bofl")


def test_reach_log_round_trip(tmp_path, make_log):
    """Test that goal-conditioned logs keep their goals."""
    log = make_log("reach", n_episodes=1, n_balls=1)
    write_log(tmp_path / "reach.bofl", log)
    loaded = read_log(tmp_path / "reach.bofl")
    assert loaded.task_id == "reach"
    assert np.array_equal(loaded.goals(), log.goals())


def test_header_layout(make_log):
    """Test the magic and header fields."""
    payload = encode_log(make_log(n_episodes=1, n_balls=2, history_length=3))
    assert payload[:4] == b"BOFL"
    assert np.frombuffer(payload, dtype="<u4", count=5, offset=4).tolist() == [1, 2, 3, 9, 0]


def test_header_only_log_is_empty():
    """Test that a log without records decodes to zero transitions."""
    log = decode_log(encode_log(EpisodeLog(3, 4, 0)))
    assert log.n_transitions == 0
    assert log.n_episodes == 0


def test_truncated_inside_record(make_log):
    """Test that a cut inside a record reports that record and its offset."""
    log = make_log(n_episodes=2)
    itemsize = log.dtype.itemsize
    payload = encode_log(log)[: HEADER_SIZE + 1500 * itemsize + 7]
    with pytest.raises(TruncatedLogError) as info:
        decode_log(payload)
    assert info.value.record_index == 1500
    assert info.value.byte_offset == HEADER_SIZE + 1500 * itemsize


def test_truncated_inside_episode(make_log):
    """Test that a cut on a record boundary inside an episode reports the episode start."""
    log = make_log(n_episodes=2)
    payload = encode_log(log)[: HEADER_SIZE + 1500 * log.dtype.itemsize]
    with pytest.raises(TruncatedLogError) as info:
        decode_log(payload)
    assert info.value.record_index == 1000


def test_bad_magic_and_version(make_log):
    """Test that magic and version errors have distinct categories."""
    payload = bytearray(encode_log(make_log(n_episodes=1)))
    with pytest.raises(BadMagicError):
        decode_log(b"BOFP" + bytes(payload[4:]))
    payload[4:8] = np.array([7], dtype="<u4").tobytes()
    with pytest.raises(BadVersionError) as info:
        decode_log(bytes(payload))
    assert info.value.category == "log-bad-version"


def test_missing_file(tmp_path):
    """Test that a missing log is a data error."""
    with pytest.raises(DatasetError):
        read_log(tmp_path / "absent.bofl")


def test_episode_lookup(make_log):
    """Test per-episode access and the error for a missing id."""
    log = make_log(n_episodes=3)
    assert log.episode_ids().tolist() == [0, 1, 2]
    episode = log.episode(1)
    assert len(episode) == 1000
    assert episode["step"][-1] == 999 and episode["done"][-1] == 1
    with pytest.raises(DatasetError):
        log.episode(9)


def test_goals_need_goal_conditioned_log(make_log):
    """Test that non-goal logs refuse to report goals."""
    with pytest.raises(DatasetError):
        make_log("hover", n_episodes=1).goals()


def test_writer_streams_episodes(tmp_path, make_log):
    """Test that the streaming writer produces the same file as a one-shot write."""
    log = make_log(n_episodes=2)
    transitions = list(log.transitions())
    with EpisodeLogWriter(tmp_path / "stream.bofl", log.n_balls, log.history_length, log.task_code) as writer:
        writer.write_episode(transitions[:1000])
        writer.write_episode(transitions[1000:])
    assert writer.n_episodes == 2
    assert read_log(tmp_path / "stream.bofl") == log


def test_writer_rejects_partial_episode(tmp_path, make_log):
    """Test that episodes must be exactly 1000 steps long."""
    log = make_log(n_episodes=1)
    with EpisodeLogWriter(tmp_path / "bad.bofl", log.n_balls, log.history_length, log.task_code) as writer:
        with pytest.raises(DatasetError):
            writer.write_episode(list(log.transitions())[:999])
