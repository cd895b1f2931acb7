"""
Jet Field Module

The actuator side of the box: how valve commands become per-nozzle flows on a shared air supply,
and how those flows become an air velocity field. The field is a surrogate of superposed round
jets: a Gaussian cross-section that widens linearly with height and a centerline speed that decays
as 1/(y + y0), plus a small outward entrainment component.

Functions:
    clamp_action(): Clamp a valve command into [0, 1], reporting how many entries moved.
    effective_flows(): Per-valve drive levels under supply coupling.
    air_velocity(): Air velocity at a point inside the box.
    hover_height(): Height at which drag balances gravity above a single open nozzle.
    calibrate_drag(): Drag coefficient that hovers a ball at a target height.
"""

from typing import Tuple

import numpy as np
from scipy.optimize import brentq

from aeolus.boreas_sim.physics_kernels import jet_velocity
from aeolus.boreas_sim.sim_config import N_NOZZLES, SimConfig
from aeolus.errors import NonFiniteError, ShapeMismatchError

# Hover calibration: a single valve fully open under the center of the box.
CALIBRATION_NOZZLE = N_NOZZLES // 2
CALIBRATION_HEIGHT = 0.35


def clamp_action(action) -> Tuple[np.ndarray, int]:
    """Clamp a 9-valve command into [0, 1].

    Raises:
        ShapeMismatchError: If the action does not have 9 entries.
        NonFiniteError: If any entry is NaN.

    Returns:
        Tuple[np.ndarray, int]: The clamped float64 command and the number of clamped entries.
    """
    action = np.asarray(action, dtype=np.float64)
    if action.shape != (N_NOZZLES,):
        raise ShapeMismatchError(f"Action shape {action.shape} != ({N_NOZZLES},)")
    if np.isnan(action).any():
        raise NonFiniteError(f"Action holds NaN at valves {np.flatnonzero(np.isnan(action)).tolist()}")
    clamped = np.clip(action, 0.0, 1.0)
    return clamped, int(np.count_nonzero(clamped != action))


def effective_flows(action, coupling: float = 2.0) -> np.ndarray:
    """Per-valve drive levels f_i = a_i / (1 + kappa * sum_j a_j) on a unit supply.

    Out-of-range commands are clamped into [0, 1] first.

    Args:
        action: Nine valve openings.
        coupling (float): Shared-supply coupling kappa; 0 disables coupling.

    Returns:
        np.ndarray: Nine flows in [0, 1].
    """
    a, _ = clamp_action(action)
    return a / (1.0 + coupling * a.sum())


def _flows_array(flows) -> np.ndarray:
    flows = np.asarray(flows, dtype=np.float64)
    if flows.shape != (N_NOZZLES,):
        raise ShapeMismatchError(f"Flow shape {flows.shape} != ({N_NOZZLES},)")
    return flows


def air_velocity(config: SimConfig, x: float, y: float, flows) -> np.ndarray:
    """Air velocity (u_x, u_y) in m/s at (x, y) for the given per-valve flows.

    Raises:
        ValueError: If (x, y) lies outside the box.
    """
    if not (0.0 <= x <= config.box_width and 0.0 <= y <= config.box_height):
        raise ValueError(
            f"Air velocity queried at ({x}, {y}) outside the {config.box_width} x {config.box_height} box."
        )
    ux, uy = jet_velocity(
        float(x),
        float(y),
        _flows_array(flows),
        np.asarray(config.nozzle_positions, dtype=np.float64),
        np.asarray(config.nozzle_gains, dtype=np.float64),
        config.jet_peak_speed,
        config.jet_virtual_origin,
        config.jet_core_width,
        config.jet_spread,
        config.entrainment,
    )
    return np.array([ux, uy])


def hover_height(config: SimConfig, drag_coefficient: float, nozzle: int = CALIBRATION_NOZZLE) -> float:
    """Height above `nozzle` (fully open, alone) where drag on a still ball equals its weight.

    Returns 0.0 if the jet cannot lift the ball at all and the box height if it is never balanced.
    """
    action = np.zeros(N_NOZZLES)
    action[nozzle] = 1.0
    flows = effective_flows(action, config.coupling)
    x = config.nozzle_positions[nozzle]

    def net_lift(y: float) -> float:
        u = air_velocity(config, x, y, flows)[1]
        return drag_coefficient / config.ball_mass * u * u - config.gravity

    if net_lift(0.0) <= 0.0:
        return 0.0
    if net_lift(config.box_height) >= 0.0:
        return config.box_height
    return brentq(net_lift, 0.0, config.box_height, xtol=1e-12)


def calibrate_drag(
    config: SimConfig, height: float = CALIBRATION_HEIGHT, nozzle: int = CALIBRATION_NOZZLE
) -> float:
    """Bisect for the drag coefficient that hovers a ball at `height` above one open nozzle.

    The default `SimConfig.drag_coefficient` is the frozen output of this function.
    """
    if not 0.0 < height < config.box_height:
        raise ValueError(f"Calibration height={height} must be inside the box.")
    return brentq(
        lambda c_d: hover_height(config, c_d, nozzle) - height,
        1e-6,
        1e3,
        xtol=1e-12,
        rtol=1e-12,
    )
