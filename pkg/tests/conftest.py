import numpy as np
import pytest

from aeolus.boreas_sim.sim_config import EPISODE_LENGTH, N_NOZZLES
from aeolus.mnemosyne_replay.episode_log import EpisodeLog
from aeolus.themis_tasks.task_spec import TASK_IDS


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run long acceptance runs")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long acceptance run, skipped unless --runslow is given")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


def synthetic_log(
    task_id: str = "hover", n_episodes: int = 2, n_balls: int = 3, history_length: int = 4, seed: int = 0
) -> EpisodeLog:
    """Episode log of random records with consistent episode/step/done columns; reach logs carry
    one random goal per episode in the last two observation entries."""
    rng = np.random.default_rng(seed)
    log = EpisodeLog(n_balls, history_length, TASK_IDS.index(task_id))
    n = n_episodes * EPISODE_LENGTH
    records = np.zeros(n, dtype=log.dtype)
    obs_dim = records.dtype["observation"].shape[0]
    records["pixels"] = rng.uniform(0, 699, size=(n, n_balls, 2))
    records["action"] = rng.uniform(0, 1, size=(n, N_NOZZLES))
    records["reward"] = rng.uniform(0, 1, size=n)
    records["episode"] = np.repeat(np.arange(n_episodes), EPISODE_LENGTH)
    records["step"] = np.tile(np.arange(EPISODE_LENGTH), n_episodes)
    records["done"] = records["step"] == EPISODE_LENGTH - 1
    records["observation"] = rng.uniform(0, 699, size=(n, obs_dim))
    records["next_observation"] = rng.uniform(0, 699, size=(n, obs_dim))
    if log.goal_conditioned:
        goals = np.repeat(rng.uniform(20, 679, size=(n_episodes, 2)), EPISODE_LENGTH, axis=0)
        records["observation"][:, -2:] = goals
        records["next_observation"][:, -2:] = goals
    log.records = records
    return log


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def make_log():
    return synthetic_log
