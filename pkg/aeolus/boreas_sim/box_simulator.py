"""
Box Simulator Module

The seeded 2D box: balls under gravity, quadratic air drag, correlated turbulent forcing and
contacts, driven by the nine-nozzle jet field. A `SimState` is the complete Markov state of the
box, including its random generator, so stepping copies of one state with one action sequence
yields identical trajectories.

Classes:
    SimState: Ball kinematics, valve command, flows, RNG and step index.
    BoxSimulator: Resets and steps `SimState`s for one `SimConfig`.

Functions:
    ball_colors(): Color tags for the first n balls.
    ground_truth_pixels(): Exact pixel coordinates of every ball center.
    invariant_violations(): Containment and non-penetration checks on a state.

Mythology:
    Boreas is the North Wind, who carried off Oreithyia in a gust and kept the skies of Thrace in
    constant motion. Here he blows through nine nozzles at the bottom of a box.
"""

import copy
import logging
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from aeolus.boreas_sim import physics_kernels
from aeolus.boreas_sim.jet_field import clamp_action, effective_flows
from aeolus.boreas_sim.sim_config import EPISODE_LENGTH, N_NOZZLES, SimConfig
from aeolus.errors import SimulationError

logger = logging.getLogger(__name__)

NAMED_COLORS = ("orange", "purple", "green")
# Non-penetration tolerance after contact resolution, m.
PENETRATION_TOLERANCE = 1e-9
# Probability that a valve fires during one reset burst, and the opening range when it does.
BURST_PROBABILITY = 0.5
BURST_OPENING = (0.5, 1.0)


def ball_colors(n_balls: int) -> Tuple[str, ...]:
    """Color tags for the first `n_balls` balls: orange, purple, green, then ball3, ball4, ..."""
    return tuple(NAMED_COLORS[i] if i < len(NAMED_COLORS) else f"ball{i}" for i in range(n_balls))


@dataclass
class SimState:
    """Complete Markov state of the box.

    Attributes:
        positions (np.ndarray): (n_balls, 2) ball centers, m, origin bottom-left.
        velocities (np.ndarray): (n_balls, 2) ball velocities, m/s.
        ou_noise (np.ndarray): (n_balls, 2) unit-variance turbulence states.
        colors (Tuple[str, ...]): Color tag per ball.
        action (np.ndarray): Last (clamped) valve command.
        flows (np.ndarray): Effective flows derived from `action`.
        rng (np.random.Generator): Source of the turbulence draws.
        step_index (int): Control steps taken in the current episode.
    """

    positions: np.ndarray
    velocities: np.ndarray
    ou_noise: np.ndarray
    colors: Tuple[str, ...]
    action: np.ndarray
    flows: np.ndarray
    rng: np.random.Generator
    step_index: int = 0

    @property
    def n_balls(self) -> int:
        return self.positions.shape[0]

    def copy(self) -> "SimState":
        """Deep copy, including the generator state."""
        return SimState(
            self.positions.copy(),
            self.velocities.copy(),
            self.ou_noise.copy(),
            self.colors,
            self.action.copy(),
            self.flows.copy(),
            copy.deepcopy(self.rng),
            self.step_index,
        )

    def __repr__(self):
        return f"SimState(n_balls={self.n_balls}, step_index={self.step_index})"


def ground_truth_pixels(config: SimConfig, positions: np.ndarray) -> np.ndarray:
    """Map ball centers (m) to camera pixels: x scaled, y flipped about the last pixel row, both
    clipped to the grid. A ball resting on the floor sits at pixel row 679.

    Returns:
        np.ndarray: (n_balls, 2) float64 pixel coordinates (x right, y down).
    """
    scale = config.pixels_per_meter
    pixels = np.empty_like(positions, dtype=np.float64)
    pixels[:, 0] = positions[:, 0] * scale
    pixels[:, 1] = (config.pixel_height - 1) - positions[:, 1] * scale
    pixels[:, 0] = np.clip(pixels[:, 0], 0.0, config.pixel_width - 1)
    pixels[:, 1] = np.clip(pixels[:, 1], 0.0, config.pixel_height - 1)
    return pixels


def invariant_violations(config: SimConfig, state: SimState) -> List[str]:
    """Describe every containment or non-penetration violation in `state` (empty when valid)."""
    problems = []
    r = config.ball_radius
    upper = np.array([config.box_width - r, config.box_height - r])
    for b, (pos, color) in enumerate(zip(state.positions, state.colors)):
        if np.any(pos < r - PENETRATION_TOLERANCE) or np.any(pos > upper + PENETRATION_TOLERANCE):
            problems.append(f"ball {b} ({color}) at {pos.tolist()} leaves the box")
    for i in range(state.n_balls):
        for j in range(i + 1, state.n_balls):
            dist = float(np.linalg.norm(state.positions[i] - state.positions[j]))
            if dist < 2 * r - PENETRATION_TOLERANCE:
                problems.append(f"balls {i} and {j} overlap (distance {dist:.12f} m)")
    return problems


class BoxSimulator:
    """Resets and steps `SimState`s for one `SimConfig`.

    Attributes:
        config (SimConfig): Physical constants.
        clamp_events (int): Out-of-range action entries clamped since construction.

    Methods:
        reset(): A seeded post-air-burst state.
        step(): Advance one control step.
        pixels(): Ground-truth ball pixels of a state.
    """

    def __init__(self, config: SimConfig = None):
        self.config = config if config is not None else SimConfig()
        self.clamp_events = 0
        self._nozzle_x = np.asarray(self.config.nozzle_positions, dtype=np.float64)
        self._gains = np.asarray(self.config.nozzle_gains, dtype=np.float64)

    def _floor_positions(self, rng: np.random.Generator) -> np.ndarray:
        cfg = self.config
        r = cfg.ball_radius
        xs: List[float] = []
        for _attempt in range(1000 * cfg.n_balls):
            if len(xs) == cfg.n_balls:
                break
            x = rng.uniform(r, cfg.box_width - r)
            if all(abs(x - other) >= 2 * r for other in xs):
                xs.append(x)
        if len(xs) < cfg.n_balls:
            # crowded floor: fall back to even spacing
            xs = list(np.linspace(r, cfg.box_width - r, cfg.n_balls))
        return np.column_stack([np.array(xs, dtype=np.float64), np.full(cfg.n_balls, r)])

    def reset(self, seed: int) -> SimState:
        """Place the balls at rest on the floor, then scramble them with random air bursts.

        Args:
            seed (int): Seed of the state's generator; equal seeds give equal states.

        Returns:
            SimState: The post-burst state with valves closed and `step_index` 0.
        """
        cfg = self.config
        rng = np.random.default_rng(seed)
        n = cfg.n_balls
        state = SimState(
            positions=self._floor_positions(rng),
            velocities=np.zeros((n, 2)),
            ou_noise=np.zeros((n, 2)),
            colors=ball_colors(n),
            action=np.zeros(N_NOZZLES),
            flows=np.zeros(N_NOZZLES),
            rng=rng,
        )
        low, high = BURST_OPENING
        for _ in range(cfg.reset_steps):
            fire = rng.random(N_NOZZLES) < BURST_PROBABILITY
            burst = np.where(fire, rng.uniform(low, high, N_NOZZLES), 0.0)
            self._advance(state, burst)
        state.action = np.zeros(N_NOZZLES)
        state.flows = np.zeros(N_NOZZLES)
        state.step_index = 0
        return state

    def step(self, state: SimState, action) -> Tuple[SimState, np.ndarray]:
        """Advance one control step under `action`.

        Args:
            state (SimState): Current state; left untouched.
            action: Nine valve openings; entries outside [0, 1] are clamped and counted.

        Raises:
            ValueError: If the episode already has `EPISODE_LENGTH` steps.
            SimulationError: If integration produced NaN/Inf; carries the substep index.

        Returns:
            Tuple[SimState, np.ndarray]: The next state and its ground-truth ball pixels.
        """
        if state.step_index >= EPISODE_LENGTH:
            raise ValueError(f"Episode already has {EPISODE_LENGTH} steps; reset before stepping.")
        new_state = state.copy()
        self._advance(new_state, action)
        return new_state, self.pixels(new_state)

    def _advance(self, state: SimState, action):
        cfg = self.config
        clamped, n_clamped = clamp_action(action)
        if n_clamped:
            self.clamp_events += n_clamped
            logger.debug("Clamped %d action entries (total %d)", n_clamped, self.clamp_events)
        state.action = clamped
        state.flows = effective_flows(clamped, cfg.coupling)
        xi = state.rng.standard_normal((cfg.substeps, state.n_balls, 2))
        failed = physics_kernels.integrate_control_step(
            state.positions, state.velocities, state.ou_noise, state.flows,
            self._nozzle_x, self._gains, xi,
            cfg.physics_dt, cfg.gravity, cfg.drag_coefficient / cfg.ball_mass,
            cfg.ou_theta, cfg.ou_intensity,
            cfg.jet_peak_speed, cfg.jet_virtual_origin, cfg.jet_core_width,
            cfg.jet_spread, cfg.entrainment,
            cfg.ball_radius, cfg.box_width, cfg.box_height, cfg.restitution, cfg.rest_speed,
        )
        if failed >= 0:
            raise SimulationError(
                f"Non-finite ball state at substep {failed} of control step {state.step_index}",
                substep=int(failed),
            )
        state.step_index += 1

    def pixels(self, state: SimState) -> np.ndarray:
        return ground_truth_pixels(self.config, state.positions)

    def __repr__(self):
        return f"BoxSimulator(n_balls={self.config.n_balls}, substeps={self.config.substeps})"
