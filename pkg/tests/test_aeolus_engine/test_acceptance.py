"""Long training runs checking learning trends end to end. Skipped unless --runslow is given."""

import hashlib

import numpy as np
import pytest

from aeolus.aeolus_engine.aeolus_engine import AeolusEngine, learner_checkpoint_path, run_offline, run_online
from aeolus.aeolus_engine.experiment_config import build_experiment_config
from aeolus.argus_analysis.heatmap import reach_error_heatmap
from aeolus.argus_analysis.reward_curve import moving_average
from aeolus.athena_learners.crr import checkpoint_path
from aeolus.boreas_sim.sim_config import EPISODE_LENGTH, N_NOZZLES
from aeolus.mnemosyne_replay.episode_log import read_log
from aeolus.mnemosyne_replay.relabel import relabel_file
from aeolus.themis_tasks.task_env import TaskEnvironment

SEEDS = (0, 1, 2)
TRAIN_STEPS = 300_000


def train(task, seed, out_dir, steps=TRAIN_STEPS):
    config = build_experiment_config({
        "task": task, "steps": str(steps), "seed": str(seed), "out": str(out_dir), "eval_period": "25",
        "eval_episodes": "10",
    })
    return run_online(config)


def steps_to_fraction_of_final(train_returns, fraction=0.9, window=10):
    smoothed = moving_average(train_returns, window)
    first = int(np.argmax(smoothed >= fraction * smoothed[-1]))
    return (first + 1) * EPISODE_LENGTH


def tree_hashes(root):
    return {
        str(path.relative_to(root)): hashlib.sha256(path.read_bytes()).hexdigest()
        for path in sorted(root.rglob("*")) if path.is_file()
    }


def mean_distance_from_center(log_path, ball):
    log = read_log(log_path)
    return float(np.mean(np.abs(log.records["pixels"][:, ball, 0].astype(np.float64) - 350.0)))


@pytest.fixture(scope="module")
def hover_runs(tmp_path_factory):
    root = tmp_path_factory.mktemp("hover")
    return {seed: train("hover", seed, root / f"seed{seed}") for seed in SEEDS}


@pytest.mark.slow
def test_identical_runs_leave_identical_files(tmp_path):
    """Test that two 50-episode hover runs of one seed leave byte-identical run directories."""
    for name in ("a", "b"):
        train("hover", 5, tmp_path / name, steps=50 * EPISODE_LENGTH)
    first, second = tree_hashes(tmp_path / "a"), tree_hashes(tmp_path / "b")
    assert "episodes.bofl" in first
    assert first == second


@pytest.mark.slow
def test_hover_learning_beats_random_actions(hover_runs):
    """Test that hover training reaches 0.7 on two of three seeds while random valves stay below 0.35."""
    config = build_experiment_config({"task": "hover"})
    env = TaskEnvironment(config.task_spec, config.sim)
    rng = np.random.default_rng(0)
    random_returns = []
    for seed in range(10):
        env.reset(seed)
        rewards = [env.step(rng.uniform(0, 1, size=N_NOZZLES)).reward for _ in range(EPISODE_LENGTH)]
        random_returns.append(np.mean(rewards))
    assert np.mean(random_returns) < 0.35
    best = [max(score for _, score in summary.eval_returns) for summary in hover_runs.values()]
    assert sum(score >= 0.7 for score in best) >= 2


@pytest.mark.slow
def test_rearrange_converges_sooner_than_hover(hover_runs, tmp_path):
    """Test that rearrange reaches 90% of its final return in fewer steps than hover on two of three seeds."""
    sooner = 0
    for seed in SEEDS:
        rearrange = train("rearrange", seed, tmp_path / f"rearrange{seed}")
        hover = hover_runs[seed]
        sooner += steps_to_fraction_of_final(rearrange.train_returns) < steps_to_fraction_of_final(hover.train_returns)
    assert sooner >= 2


@pytest.mark.slow
def test_center_relabeled_offline_policy_stays_nearer_the_middle(hover_runs, tmp_path):
    """Test that CRR on hover logs relabeled for centered hovering cuts the target ball's mean
    horizontal distance from the middle by at least a quarter."""
    source = hover_runs[0].out_dir
    dataset = tmp_path / "hover_center.bofl"
    relabel_file(source / "episodes.bofl", "hover-center", dataset)

    offline = build_experiment_config({
        "task": "hover-center", "algorithm": "crr", "steps": "20000", "seed": "0", "out": str(tmp_path / "crr"),
        "crr.eval_period": "5000", "crr.eval_episodes": "2",
    })
    crr_summary = run_offline(offline, dataset)

    mpo_eval = build_experiment_config({"task": "hover", "seed": "0", "out": str(tmp_path / "mpo_eval")})
    AeolusEngine(mpo_eval).evaluate_checkpoint(learner_checkpoint_path(source, TRAIN_STEPS), 100)
    crr_eval = build_experiment_config({
        "task": "hover-center", "algorithm": "crr", "seed": "0", "out": str(tmp_path / "crr_eval"),
    })
    AeolusEngine(crr_eval).evaluate_checkpoint(checkpoint_path(tmp_path / "crr", crr_summary.learner_steps), 100)

    ball = mpo_eval.task_spec.ball_index(mpo_eval.task_spec.target_color)
    mpo_distance = mean_distance_from_center(tmp_path / "mpo_eval" / "episodes.bofl", ball)
    crr_distance = mean_distance_from_center(tmp_path / "crr_eval" / "episodes.bofl", ball)
    assert crr_distance <= 0.75 * mpo_distance


@pytest.mark.slow
def test_bottom_center_goals_are_easier_than_top_corners(tmp_path):
    """Test that after reach training, goals in the bottom-center third are reached more closely
    than goals in the top corner thirds."""
    summary = train("reach", 0, tmp_path / "train")
    config = build_experiment_config({"task": "reach", "seed": "0", "out": str(tmp_path / "eval")})
    AeolusEngine(config).evaluate_checkpoint(learner_checkpoint_path(summary.out_dir, TRAIN_STEPS), 200)
    maps = reach_error_heatmap([read_log(tmp_path / "eval" / "episodes.bofl")], bin_size=234)
    counts = maps.counts
    cumulative = maps.cumulative.values
    assert counts.shape == (3, 3)
    assert counts[2, 1] > 0 and counts[0, 0] + counts[0, 2] > 0
    bottom_center = cumulative[2, 1] / counts[2, 1]
    top_corners = (cumulative[0, 0] + cumulative[0, 2]) / (counts[0, 0] + counts[0, 2])
    assert bottom_center < top_corners
