"""
Reward Curve Module

Smoothed return curves from the two-column CSVs the training runs write (a step count, then a
mean return, under a header row). Several seeds of one configuration collapse into a mean curve
with a min/max band.

Classes:
    CurveSeries: Steps, smoothed mean and range of one or more runs.

Functions:
    read_curve_csv(): Steps and returns from one CSV.
    moving_average(): Trailing moving average.
    reward_curve(): Smoothed mean and range across CSVs.
    write_curve_csv(): Dump a `CurveSeries`.
"""

import csv
from pathlib import Path
from typing import NamedTuple, Sequence, Tuple, Union

import numpy as np

from aeolus.errors import ConfigError, DatasetError

DEFAULT_WINDOW = 10


class CurveSeries(NamedTuple):
    steps: np.ndarray
    mean: np.ndarray
    low: np.ndarray
    high: np.ndarray
    n_runs: int


def read_curve_csv(path: Union[str, Path]) -> Tuple[np.ndarray, np.ndarray]:
    """(steps, returns) from a CSV with one header row.

    Raises:
        DatasetError: If the file is missing or empty, or a row does not hold two numbers; the
            error carries the 1-based line number of the bad row.
    """
    path = Path(path)
    if not path.is_file():
        raise DatasetError(f'Curve CSV "{path}" not found')
    steps, returns = [], []
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None:
            raise DatasetError(f'Curve CSV "{path}" is empty', line_number=1)
        for row in reader:
            line_number = reader.line_num
            if not row:
                continue
            try:
                if len(row) != 2:
                    raise ValueError(row)
                step, value = float(row[0]), float(row[1])
            except ValueError:
                raise DatasetError(
                    f'{path}:{line_number}: malformed row {row}', line_number=line_number
                ) from None
            if not (np.isfinite(step) and np.isfinite(value)):
                raise DatasetError(f"{path}:{line_number}: non-finite value", line_number=line_number)
            steps.append(step)
            returns.append(value)
    return np.asarray(steps), np.asarray(returns)


def moving_average(values: Sequence[float], window: int = DEFAULT_WINDOW) -> np.ndarray:
    """Mean of the last `window` values at each position; the first entries average what exists."""
    if window < 1:
        raise ConfigError(f"Moving-average window must be >= 1, got {window}")
    values = np.asarray(values, dtype=np.float64)
    if window == 1:
        return values.copy()
    totals = np.concatenate([[0.0], np.cumsum(values)])
    ends = np.arange(1, values.size + 1)
    starts = np.maximum(ends - window, 0)
    return (totals[ends] - totals[starts]) / (ends - starts)


def reward_curve(paths: Sequence[Union[str, Path]], window: int = DEFAULT_WINDOW) -> CurveSeries:
    """Smooth each run, then take mean, min and max across runs at each shared step.

    Runs are truncated to the shortest one.

    Raises:
        DatasetError: If no CSV is given or the runs disagree on their step columns.
    """
    if not paths:
        raise DatasetError("Reward curve needs at least one CSV.")
    runs = [read_curve_csv(path) for path in paths]
    length = min(steps.size for steps, _ in runs)
    steps = runs[0][0][:length]
    for path, (other, _) in zip(paths, runs):
        if not np.array_equal(other[:length], steps):
            raise DatasetError(f'Curve CSV "{path}" has different step counts than "{paths[0]}"')
    smoothed = np.stack([moving_average(returns[:length], window) for _, returns in runs])
    return CurveSeries(steps, smoothed.mean(axis=0), smoothed.min(axis=0), smoothed.max(axis=0), len(runs))


def write_curve_csv(path: Union[str, Path], series: CurveSeries):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["steps", "mean", "low", "high"])
        for row in zip(series.steps, series.mean, series.low, series.high):
            writer.writerow([f"{int(row[0])}", *(repr(float(v)) for v in row[1:])])
