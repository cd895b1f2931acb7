import numpy as np
import pytest

from aeolus.boreas_sim.jet_field import air_velocity, calibrate_drag, clamp_action, effective_flows, hover_height
from aeolus.boreas_sim.sim_config import N_NOZZLES, SimConfig
from aeolus.errors import NonFiniteError, ShapeMismatchError


def single(i, value=1.0):
    a = np.zeros(N_NOZZLES)
    a[i] = value
    return a


def test_zero_action_gives_zero_flows():
    """Test that closed valves carry no flow."""
    assert np.array_equal(effective_flows(np.zeros(N_NOZZLES)), np.zeros(N_NOZZLES))


def test_coupling_examples():
    """Test the shared-supply law on one open valve and on all valves open."""
    assert effective_flows(single(0))[0] == pytest.approx(1 / 3)
    assert np.allclose(effective_flows(np.ones(N_NOZZLES)), 1 / 19)


def test_no_coupling_is_identity(rng):
    """Test that kappa = 0 passes the action through."""
    a = rng.uniform(0, 1, N_NOZZLES)
    assert np.array_equal(effective_flows(a, coupling=0.0), a)


def test_opening_other_valves_never_raises_a_flow(rng):
    """Test that f_i is non-increasing in every other valve."""
    for _ in range(1000):
        a = rng.uniform(0, 1, N_NOZZLES)
        i = rng.integers(N_NOZZLES)
        wider = np.minimum(a + rng.uniform(0, 1, N_NOZZLES), 1.0)
        wider[i] = a[i]
        assert effective_flows(wider)[i] <= effective_flows(a)[i]


def test_clamping_is_counted():
    """Test that out-of-range commands are clamped and counted."""
    a = np.full(N_NOZZLES, 0.5)
    a[[1, 4]] = [-0.2, 1.7]
    clamped, n = clamp_action(a)
    assert n == 2
    assert clamped[1] == 0.0 and clamped[4] == 1.0


def test_nan_action_is_rejected():
    """Test that a NaN valve command raises."""
    a = np.zeros(N_NOZZLES)
    a[3] = np.nan
    with pytest.raises(NonFiniteError):
        effective_flows(a)


def test_wrong_action_length():
    """Test that actions need nine entries."""
    with pytest.raises(ShapeMismatchError):
        effective_flows(np.zeros(8))


def test_still_air_without_flow(rng):
    """Test that closed valves give still air everywhere."""
    config = SimConfig()
    for x, y in rng.uniform(0, 0.7, size=(20, 2)):
        assert np.array_equal(air_velocity(config, x, y, np.zeros(N_NOZZLES)), [0.0, 0.0])


def test_peak_speed_above_open_nozzle():
    """Test that the jet exit speed is U0_max directly above a full-flow nozzle."""
    config = SimConfig()
    ux, uy = air_velocity(config, config.nozzle_positions[2], 0.0, single(2))
    assert uy == pytest.approx(config.jet_peak_speed)
    assert ux == pytest.approx(0.0)


def test_superposition(rng):
    """Test that two open nozzles give the sum of each alone."""
    config = SimConfig()
    f1, f2 = single(2, 0.4), single(6, 0.7)
    for x, y in rng.uniform(0, 0.7, size=(100, 2)):
        both = air_velocity(config, x, y, f1 + f2)
        apart = air_velocity(config, x, y, f1) + air_velocity(config, x, y, f2)
        assert np.allclose(both, apart, rtol=1e-12, atol=1e-15)


def test_entrainment_points_outward():
    """Test that the horizontal component pushes away from the jet axis."""
    config = SimConfig()
    x0 = config.nozzle_positions[4]
    assert air_velocity(config, x0 + 0.02, 0.1, single(4))[0] > 0
    assert air_velocity(config, x0 - 0.02, 0.1, single(4))[0] < 0


def test_query_outside_box():
    """Test that points outside the box are rejected."""
    with pytest.raises(ValueError):
        air_velocity(SimConfig(), 0.8, 0.1, np.zeros(N_NOZZLES))


def test_frozen_drag_hovers_ball_at_calibration_height():
    """Test that the default drag coefficient is the calibration output."""
    config = SimConfig()
    assert calibrate_drag(config) == pytest.approx(config.drag_coefficient, rel=1e-5)
    assert hover_height(config, config.drag_coefficient) == pytest.approx(0.35, abs=1e-5)
