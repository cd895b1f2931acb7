import json

import pytest

from aeolus.aeolus_engine.cli import build_parser, main, resolve_config
from aeolus.mnemosyne_replay.episode_log import read_log, write_log


def last_error(capsys):
    return json.loads(capsys.readouterr().err.strip().splitlines()[-1])


def test_unknown_task_override_is_a_config_error(tmp_path, capsys):
    """Test the exit code and JSON report of a bad task override."""
    code = main(["train", "--out", str(tmp_path), "--set", "task=juggle"])
    assert code == 2
    assert last_error(capsys)["error"] == "config"


def test_malformed_override(tmp_path, capsys):
    """Test a --set item without an equals sign."""
    assert main(["train", "--out", str(tmp_path), "--set", "seed"]) == 2


def test_missing_dataset_is_a_data_error(tmp_path, capsys):
    """Test the exit code of offline training on an absent log."""
    code = main(["train-offline", "--data", str(tmp_path / "absent.bofl"), "--out", str(tmp_path / "run")])
    assert code == 3
    assert last_error(capsys)["error"] == "data"


def test_corrupt_log_is_a_format_error(tmp_path, capsys):
    """Test the exit code and category of a file without the log magic."""
    bad = tmp_path / "bad.bofl"
    bad.write_bytes(b"NOPE" + bytes(40))
    assert main(["relabel", "--in", str(bad), "--task", "hover", "--out", str(tmp_path / "o.bofl")]) == 3
    assert last_error(capsys)["error"] == "log-bad-magic"


def test_flags_fold_into_overrides():
    """Test that dedicated flags become config keys and beat --set."""
    args = build_parser().parse_args(
        ["train", "--task", "stack", "--seed", "5", "--set", "seed=1", "--fixed-beta", "0.5", "--avg-q"]
    )
    config = resolve_config(args)
    assert config.task == "stack"
    assert config.seed == 5
    assert config.mpo.fixed_beta == 0.5
    assert config.mpo.avg_q
    assert config.sim.n_balls == 2


def test_offline_flags():
    """Test the offline learner flags."""
    args = build_parser().parse_args(["train-offline", "--data", "x", "--beta", "2.5", "--bc"])
    config = resolve_config(args)
    assert config.algorithm == "crr"
    assert config.crr.beta == 2.5
    assert config.crr.behavior_cloning


def test_relabel_verb(tmp_path, make_log):
    """Test relabeling a log to constant rewards from the command line."""
    source = tmp_path / "in.bofl"
    write_log(source, make_log(n_episodes=1))
    assert main(["relabel", "--in", str(source), "--task", "constant", "--out", str(tmp_path / "out.bofl")]) == 0
    relabeled = read_log(tmp_path / "out.bofl")
    assert set(relabeled.records["reward"].tolist()) == {1.0}


def test_analyze_verb(tmp_path, make_log):
    """Test a visitation map from the command line."""
    source = tmp_path / "in.bofl"
    write_log(source, make_log(n_episodes=1))
    code = main(["analyze", "visits", "--in", str(source), "--out", str(tmp_path / "maps"), "--episodes", "1"])
    assert code == 0
    assert (tmp_path / "maps" / "visits_orange_bin_size_35.ppm").exists()


def test_unknown_verb_exits():
    """Test that argparse rejects unknown verbs."""
    with pytest.raises(SystemExit):
        main(["fly"])
