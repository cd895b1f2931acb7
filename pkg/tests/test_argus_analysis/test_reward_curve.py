import numpy as np
import pytest

from aeolus.argus_analysis.reward_curve import moving_average, read_curve_csv, reward_curve, write_curve_csv
from aeolus.errors import ConfigError, DatasetError


def write_csv(path, steps, values):
    lines = ["env_steps,mean_return"] + [f"{s},{v!r}" for s, v in zip(steps, values)]
    path.write_text("\n".join(lines) + "\n")
    return path


def test_constant_curve_is_flat(tmp_path):
    """Test that a constant return smooths to itself."""
    path = write_csv(tmp_path / "c.csv", range(0, 30_000, 1000), [0.4] * 30)
    series = reward_curve([path])
    assert np.allclose(series.mean, 0.4)
    assert series.n_runs == 1


def test_window_one_is_identity(rng):
    """Test that a one-wide window changes nothing."""
    values = rng.uniform(size=25)
    assert np.array_equal(moving_average(values, 1), values)


def test_ramp_matches_analytic_average():
    """Test a linear ramp against its trailing averages."""
    values = np.arange(20.0)
    smoothed = moving_average(values, 5)
    assert np.allclose(smoothed[4:], np.arange(4, 20) - 2.0)
    assert np.allclose(smoothed[:4], np.arange(4) / 2.0)


def test_bad_window():
    """Test that a window below one is a config error."""
    with pytest.raises(ConfigError):
        moving_average([1.0], 0)


def test_malformed_row_reports_line_number(tmp_path):
    """Test the line number of a non-numeric row."""
    path = tmp_path / "bad.csv"
    path.write_text("env_steps,mean_return\n1000,0.5\n2000,abc\n")
    with pytest.raises(DatasetError) as info:
        read_curve_csv(path)
    assert info.value.line_number == 3


def test_missing_and_empty_files(tmp_path):
    """Test that absent and empty CSVs are data errors."""
    with pytest.raises(DatasetError):
        read_curve_csv(tmp_path / "absent.csv")
    (tmp_path / "empty.csv").write_text("")
    with pytest.raises(DatasetError):
        read_curve_csv(tmp_path / "empty.csv")


def test_seeds_collapse_into_mean_and_range(tmp_path):
    """Test multi-run mean and band, truncated to the shortest run."""
    a = write_csv(tmp_path / "a.csv", [1000, 2000, 3000], [0.2, 0.2, 0.2])
    b = write_csv(tmp_path / "b.csv", [1000, 2000], [0.6, 0.6])
    series = reward_curve([a, b], window=1)
    assert series.steps.tolist() == [1000, 2000]
    assert np.allclose(series.mean, 0.4)
    assert np.allclose(series.low, 0.2) and np.allclose(series.high, 0.6)


def test_runs_must_share_steps(tmp_path):
    """Test that runs logged at different steps are rejected."""
    a = write_csv(tmp_path / "a.csv", [1000, 2000], [0.1, 0.2])
    b = write_csv(tmp_path / "b.csv", [1000, 2500], [0.1, 0.2])
    with pytest.raises(DatasetError):
        reward_curve([a, b])


def test_written_curve(tmp_path):
    """Test the curve CSV header and row count."""
    path = write_csv(tmp_path / "a.csv", [1000, 2000, 3000], [0.1, 0.2, 0.3])
    write_curve_csv(tmp_path / "out" / "curve.csv", reward_curve([path], window=2))
    lines = (tmp_path / "out" / "curve.csv").read_text().splitlines()
    assert lines[0] == "steps,mean,low,high"
    assert len(lines) == 4
