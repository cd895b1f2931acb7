"""
Physics Kernels Module

Numba-compiled inner loops of the simulator: the superposed jet field, one control step of
semi-implicit Euler integration with stiff-stable quadratic drag and turbulence forcing, and the
impulse/projection contact solver for ball-ball and ball-wall contacts.

All kernels work in place on float64 arrays owned by the caller and return plain numbers, so the
Python layer stays in charge of validation, errors and RNG.

Functions:
    jet_velocity(): Air velocity at one point from all nozzles.
    integrate_control_step(): Advance balls by `substeps` physics substeps.
    resolve_contacts(): Impulses plus positional projection until no contact is violated.
"""

import numpy as np
from numba import njit

# Gauss-Seidel passes of the contact solver per substep.
MAX_CONTACT_PASSES = 64
# Overlaps below this are treated as touching, m.
CONTACT_SLOP = 1e-12


@njit
def jet_velocity(x, y, flows, nozzle_x, gains, peak_speed, virtual_origin, core_width, spread, entrainment):
    """Return (u_x, u_y) at (x, y) summed over nozzles with nonzero flow."""
    sigma = core_width + spread * y
    decay = virtual_origin / (y + virtual_origin)
    ux = 0.0
    uy = 0.0
    for i in range(flows.shape[0]):
        if flows[i] == 0.0:
            continue
        dx = x - nozzle_x[i]
        uy_i = peak_speed * flows[i] * gains[i] * decay * np.exp(-dx * dx / (2.0 * sigma * sigma))
        uy += uy_i
        ux += uy_i * dx / (y + virtual_origin) * entrainment
    return ux, uy


@njit
def _bounce(v, restitution, rest_speed):
    # v is the (negative) approach speed along the contact normal
    if -v > rest_speed:
        return -restitution * v
    return 0.0


@njit
def resolve_contacts(pos, vel, radius, width, height, restitution, rest_speed):
    """Apply contact impulses and project positions until balls neither overlap nor leave the box.

    Returns:
        int: Number of solver passes used.
    """
    n = pos.shape[0]
    min_dist = 2.0 * radius
    for sweep in range(MAX_CONTACT_PASSES):
        moved = False
        for i in range(n):
            for j in range(i + 1, n):
                dx = pos[i, 0] - pos[j, 0]
                dy = pos[i, 1] - pos[j, 1]
                dist = np.sqrt(dx * dx + dy * dy)
                if dist >= min_dist - CONTACT_SLOP:
                    continue
                if dist < 1e-12:
                    nx, ny = 1.0, 0.0
                else:
                    nx, ny = dx / dist, dy / dist
                vn = (vel[i, 0] - vel[j, 0]) * nx + (vel[i, 1] - vel[j, 1]) * ny
                if vn < 0.0:
                    # equal masses: each ball takes half of the relative velocity change
                    dv = 0.5 * (_bounce(vn, restitution, rest_speed) - vn)
                    vel[i, 0] += dv * nx
                    vel[i, 1] += dv * ny
                    vel[j, 0] -= dv * nx
                    vel[j, 1] -= dv * ny
                correction = 0.5 * (min_dist - dist)
                pos[i, 0] += correction * nx
                pos[i, 1] += correction * ny
                pos[j, 0] -= correction * nx
                pos[j, 1] -= correction * ny
                moved = True
        for b in range(n):
            if pos[b, 0] < radius:
                pos[b, 0] = radius
                if vel[b, 0] < 0.0:
                    vel[b, 0] = _bounce(vel[b, 0], restitution, rest_speed)
                moved = True
            elif pos[b, 0] > width - radius:
                pos[b, 0] = width - radius
                if vel[b, 0] > 0.0:
                    vel[b, 0] = -_bounce(-vel[b, 0], restitution, rest_speed)
                moved = True
            if pos[b, 1] < radius:
                pos[b, 1] = radius
                if vel[b, 1] < 0.0:
                    vel[b, 1] = _bounce(vel[b, 1], restitution, rest_speed)
                moved = True
            elif pos[b, 1] > height - radius:
                pos[b, 1] = height - radius
                if vel[b, 1] > 0.0:
                    vel[b, 1] = -_bounce(-vel[b, 1], restitution, rest_speed)
                moved = True
        if not moved:
            return sweep + 1
    return MAX_CONTACT_PASSES


@njit
def integrate_control_step(
    pos, vel, ou, flows, nozzle_x, gains, xi,
    dt, gravity, drag_per_mass, ou_theta, ou_intensity,
    peak_speed, virtual_origin, core_width, spread, entrainment,
    radius, width, height, restitution, rest_speed,
):
    """Advance every ball by `xi.shape[0]` substeps of length `dt`.

    Velocity is updated first with the drag term taken implicitly (linearized around the current
    relative speed), then position with the new velocity, then contacts are resolved.

    Args:
        pos, vel, ou: (n_balls, 2) positions, velocities and unit-variance turbulence states.
        flows: (9,) effective per-valve flows.
        xi: (substeps, n_balls, 2) standard normal draws for the turbulence process.

    Returns:
        int: Index of the first substep that produced a non-finite value, or -1.
    """
    n = pos.shape[0]
    ou_scale = np.sqrt(2.0 * ou_theta * dt)
    for s in range(xi.shape[0]):
        for b in range(n):
            ux, uy = jet_velocity(
                pos[b, 0], pos[b, 1], flows, nozzle_x, gains,
                peak_speed, virtual_origin, core_width, spread, entrainment,
            )
            air_speed = np.sqrt(ux * ux + uy * uy)
            ou[b, 0] += -ou_theta * ou[b, 0] * dt + ou_scale * xi[s, b, 0]
            ou[b, 1] += -ou_theta * ou[b, 1] * dt + ou_scale * xi[s, b, 1]
            air_x = ux + ou_intensity * air_speed * ou[b, 0]
            air_y = uy + ou_intensity * air_speed * ou[b, 1]
            rel_x = air_x - vel[b, 0]
            rel_y = air_y - vel[b, 1]
            c = drag_per_mass * np.sqrt(rel_x * rel_x + rel_y * rel_y) * dt
            vel[b, 0] = (vel[b, 0] + c * air_x) / (1.0 + c)
            vel[b, 1] = (vel[b, 1] - gravity * dt + c * air_y) / (1.0 + c)
            pos[b, 0] += vel[b, 0] * dt
            pos[b, 1] += vel[b, 1] * dt
        for b in range(n):
            if not (
                np.isfinite(pos[b, 0]) and np.isfinite(pos[b, 1])
                and np.isfinite(vel[b, 0]) and np.isfinite(vel[b, 1])
            ):
                return s
        resolve_contacts(pos, vel, radius, width, height, restitution, rest_speed)
    return -1
