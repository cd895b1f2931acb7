import numpy as np
import pytest

from aeolus.athena_learners.crr import (
    CrrConfig,
    action_support_ratio,
    advantage,
    checkpoint_path,
    crr_learner_step,
    crr_weights,
    init_crr,
    latest_checkpoint,
    load_crr,
    offline_train,
    save_crr,
)
from aeolus.athena_learners.critic import q_values
from aeolus.athena_learners.policy import policy_distribution, squashed_log_prob
from aeolus.errors import DatasetError
from aeolus.metis_autodiff.mlp import MlpParams
from aeolus.mnemosyne_replay.relabel import log_to_buffer
from aeolus.mnemosyne_replay.replay_buffer import ReplayBuffer
from aeolus.mnemosyne_replay.transition import Transition

SMALL = CrrConfig(batch_size=16, hidden_sizes=(8,), advantage_samples=4, eval_period=5, target_period=3)


@pytest.fixture
def dataset(make_log):
    return log_to_buffer(make_log(n_episodes=1, n_balls=1, history_length=2))


def zero_policy(obs_dim):
    """Policy whose action distribution is N(0, 1) everywhere."""
    return MlpParams([obs_dim, 18], [np.zeros((obs_dim, 18))], [np.zeros(18)])


def test_weights_are_clipped_and_positive():
    """Test the clipped exponential weights."""
    w = crr_weights(np.array([-1e4, -1.0, 0.0, 1.0, 1e4]), beta=1.0, weight_clip=20.0)
    assert np.all(w > 0)
    assert w[2] == 1.0
    assert w[3] == pytest.approx(np.e)
    assert w[4] == 20.0


def test_high_temperature_gives_unit_weights(rng):
    """Test that a huge beta turns every weight into 1."""
    w = crr_weights(rng.normal(scale=10.0, size=1000), beta=1e9, weight_clip=20.0)
    assert np.allclose(w, 1.0, atol=1e-6)


def test_advantage_of_linear_critic_under_symmetric_policy(rng):
    """Test the sampled baseline against Q at the policy's mean action."""
    obs_dim = 4
    critic = MlpParams([obs_dim + 9, 1], [rng.normal(size=(obs_dim + 9, 1))], [np.zeros(1)])
    obs = rng.uniform(0, 699, size=(5, obs_dim))
    actions = rng.uniform(0, 1, size=(5, 9))
    estimate = advantage(critic, obs, actions, zero_policy(obs_dim), 20_000, rng)
    exact = q_values(critic, obs, actions) - q_values(critic, obs, np.full((5, 9), 0.5))
    assert np.allclose(estimate, exact, atol=0.1)


def test_high_temperature_matches_behavior_cloning(dataset):
    """Test that beta = 1e9 trains like plain behavior cloning, step for step over 1000 steps."""
    crr = CrrConfig(batch_size=16, hidden_sizes=(8,), advantage_samples=4, beta=1e9)
    bc = CrrConfig(batch_size=16, hidden_sizes=(8,), advantage_samples=4, behavior_cloning=True)
    a = init_crr(4, crr, np.random.default_rng(0))
    b = init_crr(4, bc, np.random.default_rng(0))
    for step in range(1000):
        a = crr_learner_step(a, dataset, crr, np.random.default_rng(step))
        b = crr_learner_step(b, dataset, bc, np.random.default_rng(step))
        assert abs(a.metrics["policy_loss"] - b.metrics["policy_loss"]) < 1e-6


def test_learner_step_refreshes_target(dataset):
    """Test the step counter and the target-critic period."""
    state = init_crr(4, SMALL, np.random.default_rng(0))
    for step in range(3):
        state = crr_learner_step(state, dataset, SMALL, np.random.default_rng(step))
        if step < 2:
            assert state.target_critic != state.critic
    assert state.step == 3
    assert state.target_critic == state.critic
    assert 0 < state.metrics["mean_weight"] <= SMALL.weight_clip


def test_checkpoint_round_trip(tmp_path, dataset):
    """Test that a saved offline learner loads back unchanged."""
    state = crr_learner_step(init_crr(4, SMALL, np.random.default_rng(0)), dataset, SMALL, np.random.default_rng(1))
    save_crr(tmp_path / "crr.bofp", state)
    loaded = load_crr(tmp_path / "crr.bofp", SMALL)
    assert loaded.policy == state.policy
    assert loaded.critic == state.critic
    assert loaded.target_critic == state.target_critic
    assert loaded.step == state.step == 1
    assert loaded.policy_opt.step == state.policy_opt.step


def test_offline_train_evaluates_and_checkpoints(tmp_path, dataset):
    """Test evaluation rows and checkpoints of a short run."""
    seen = []
    state, records = offline_train(dataset, SMALL, 10, 0, tmp_path, evaluate=lambda p: 0.25, step_hook=seen.append)
    assert state.step == 10
    assert [r.learner_steps for r in records] == [5, 10]
    assert all(r.mean_eval_return == 0.25 for r in records)
    assert len(seen) == 10
    assert latest_checkpoint(tmp_path) == checkpoint_path(tmp_path, 10)
    assert checkpoint_path(tmp_path, 0).exists()
    assert (tmp_path / "offline_eval.csv").read_text().splitlines()[0] == "learner_steps,mean_eval_return"


def test_resume_matches_uninterrupted_run(tmp_path, dataset):
    """Test that stopping at 10 steps and resuming to 20 ends in the uninterrupted state."""
    straight, straight_records = offline_train(dataset, SMALL, 20, 3, tmp_path / "a", evaluate=lambda p: 0.5)
    offline_train(dataset, SMALL, 10, 3, tmp_path / "b", evaluate=lambda p: 0.5)
    resumed, resumed_records = offline_train(
        dataset, SMALL, 20, 3, tmp_path / "b", evaluate=lambda p: 0.5, resume=True
    )
    assert resumed.policy == straight.policy
    assert resumed.critic == straight.critic
    assert resumed.target_critic == straight.target_critic
    assert resumed_records == straight_records


def test_zero_steps(tmp_path, dataset):
    """Test that a zero-step run only checkpoints the initial parameters."""
    state, records = offline_train(dataset, SMALL, 0, 0, tmp_path, evaluate=lambda p: 1.0)
    assert state.step == 0
    assert records == []
    assert latest_checkpoint(tmp_path) == checkpoint_path(tmp_path, 0)


def test_empty_dataset(tmp_path):
    """Test that training on nothing is a data error."""
    with pytest.raises(DatasetError):
        offline_train(ReplayBuffer(10), SMALL, 5, 0, tmp_path, evaluate=lambda p: 0.0)


def test_support_ratio():
    """Test the support ratio when the policy's mean action is itself in the dataset."""
    obs = np.zeros((3, 4))
    actions = np.array([np.full(9, 0.5), np.full(9, 0.1), np.full(9, 0.9)])
    assert action_support_ratio(zero_policy(4), obs, actions) == 0.0
    with pytest.raises(DatasetError):
        action_support_ratio(zero_policy(4), obs[:1], actions[:1])


def test_single_transition_likelihood_keeps_rising(tmp_path):
    """Test that on a dataset of one repeated transition the logged action only gains likelihood."""
    observation = np.array([120.0, 400.0, 130.0, 390.0])
    action = np.full(9, 0.8)
    transition = Transition(
        observation=observation,
        action=action,
        reward=0.5,
        next_observation=observation,
        done=False,
        pixels=np.array([[130.0, 390.0]]),
        episode=0,
        step=0,
    )
    dataset = ReplayBuffer(32)
    dataset.extend([transition] * 32)
    config = CrrConfig(batch_size=16, hidden_sizes=(8,), eval_period=20)

    def log_likelihood(policy):
        d = policy_distribution(policy, observation[None])
        return float(np.sum(squashed_log_prob(d, action[None]).value))

    _, records = offline_train(dataset, config, 200, 0, tmp_path, evaluate=log_likelihood)
    scores = [r.mean_eval_return for r in records]
    assert len(scores) == 10
    assert np.all(np.diff(scores) > 0)
