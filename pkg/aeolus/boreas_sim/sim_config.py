"""
Simulator Config Module

Physical and sensing constants of the simulated box. Defaults describe a 70 cm square box with nine
upward nozzles on a shared supply, table-tennis balls, a 20 Hz control rate with 200 Hz inner
integration, and a 700 x 700 pixel camera (1 px per mm).

Classes:
    SimConfig: Frozen, validated simulator constants.

Constants:
    N_NOZZLES: Number of valves/nozzles along the floor.
    EPISODE_LENGTH: Control steps per episode.
"""

from dataclasses import dataclass, field
from typing import Tuple

N_NOZZLES = 9
EPISODE_LENGTH = 1000


@dataclass(frozen=True)
class SimConfig:
    """Frozen, validated simulator constants (SI units unless noted).

    Attributes:
        box_width (float): Interior width, m.
        box_height (float): Interior height, m.
        ball_radius (float): Ball radius, m.
        ball_mass (float): Ball mass, kg.
        gravity (float): Gravitational acceleration, m/s^2.
        control_rate (float): Control steps per second, Hz.
        substeps (int): Physics substeps per control step.
        n_balls (int): Number of balls in the box.
        jet_peak_speed (float): Jet exit speed U0_max at full effective flow, m/s.
        jet_spread (float): Linear growth of the jet width with height, k_spread.
        jet_virtual_origin (float): Centerline-decay virtual origin y0, m.
        jet_core_width (float): Jet width at the nozzle sigma0, m.
        entrainment (float): Scale of the outward horizontal air component, k_entrain.
        coupling (float): Shared-supply coupling constant kappa.
        drag_coefficient (float): Quadratic drag c_d, kg/m (acceleration = c_d/m |u_rel| u_rel).
        restitution (float): Coefficient of restitution e for walls and balls.
        rest_speed (float): Impacts slower than this (m/s) are perfectly inelastic.
        ou_theta (float): Mean-reversion rate of the turbulence process, 1/s.
        ou_intensity (float): Turbulent fluctuation as a fraction of the local air speed.
        pixel_width (int): Camera grid width, px.
        pixel_height (int): Camera grid height, px.
        pixel_noise (float): Standard deviation of the blob-detector jitter, px.
        history_length (int): Frames H kept in the observation.
        reset_steps (int): Control steps of random air bursts during reset.
        nozzle_gains (Tuple[float, ...]): Per-nozzle exit-speed multipliers.

    Raises:
        ValueError: If a constant is out of range.
    """

    box_width: float = 0.70
    box_height: float = 0.70
    ball_radius: float = 0.020
    ball_mass: float = 0.0027
    gravity: float = 9.81
    control_rate: float = 20.0
    substeps: int = 10
    n_balls: int = 3
    jet_peak_speed: float = 6.0
    jet_spread: float = 0.1
    jet_virtual_origin: float = 0.05
    jet_core_width: float = 0.008
    entrainment: float = 0.15
    coupling: float = 2.0
    # Frozen output of `calibrate_drag()`: one valve at 1.0 hovers a ball at 0.35 m.
    drag_coefficient: float = 0.423792
    restitution: float = 0.8
    rest_speed: float = 0.1
    ou_theta: float = 5.0
    ou_intensity: float = 0.2
    pixel_width: int = 700
    pixel_height: int = 700
    pixel_noise: float = 1.0
    history_length: int = 4
    reset_steps: int = 40
    nozzle_gains: Tuple[float, ...] = field(default=(1.0,) * N_NOZZLES)

    def __post_init__(self):
        positive = (
            "box_width", "box_height", "ball_radius", "ball_mass", "gravity", "control_rate",
            "jet_peak_speed", "jet_spread", "jet_virtual_origin", "jet_core_width",
            "drag_coefficient", "ou_theta",
        )
        for name in positive:
            if not getattr(self, name) > 0:
                raise ValueError(f"SimConfig.{name} (={getattr(self, name)}) must be > 0.")
        non_negative = ("entrainment", "coupling", "rest_speed", "ou_intensity", "pixel_noise")
        for name in non_negative:
            if not getattr(self, name) >= 0:
                raise ValueError(f"SimConfig.{name} (={getattr(self, name)}) must be >= 0.")
        if not 0 <= self.restitution <= 1:
            raise ValueError(f"SimConfig.restitution (={self.restitution}) must be in [0, 1].")
        for name in ("substeps", "n_balls", "pixel_width", "pixel_height", "history_length"):
            if getattr(self, name) < 1:
                raise ValueError(f"SimConfig.{name} (={getattr(self, name)}) must be >= 1.")
        if self.reset_steps < 0:
            raise ValueError(f"SimConfig.reset_steps (={self.reset_steps}) must be >= 0.")
        if len(self.nozzle_gains) != N_NOZZLES or any(g < 0 for g in self.nozzle_gains):
            raise ValueError(f"SimConfig.nozzle_gains needs {N_NOZZLES} non-negative values.")
        if 2 * self.ball_radius * self.n_balls > self.box_width:
            raise ValueError(f"{self.n_balls} balls of radius {self.ball_radius} do not fit on the floor.")
        if EPISODE_LENGTH / self.control_rate <= 0:
            raise ValueError("Episode duration must be positive.")

    @property
    def control_dt(self) -> float:
        """Seconds per control step."""
        return 1.0 / self.control_rate

    @property
    def physics_dt(self) -> float:
        """Seconds per physics substep."""
        return self.control_dt / self.substeps

    @property
    def nozzle_positions(self) -> Tuple[float, ...]:
        """Nozzle x-positions, evenly spaced and strictly inside the floor."""
        return tuple((i + 0.5) * self.box_width / N_NOZZLES for i in range(N_NOZZLES))

    @property
    def pixels_per_meter(self) -> float:
        """Camera scale, px/m, rounded to 9 decimals so the default grid maps 1 mm to exactly 1 px."""
        return round(self.pixel_width / self.box_width, 9)

    @property
    def radius_px(self) -> float:
        """Ball radius on the camera grid, px."""
        return self.ball_radius * self.pixels_per_meter

    @property
    def episode_seconds(self) -> float:
        return EPISODE_LENGTH * self.control_dt
