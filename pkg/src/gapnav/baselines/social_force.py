"""Social Forces model (PySocialForce-style terms) and the SF ego controller.

The pairwise interaction follows the Moussaid et al. formulation used by
PySocialForce: the interaction direction mixes relative velocity and
relative position, and the repulsion decays exponentially with distance and
with the angle between the two. Group and obstacle terms use the same
defaults as PySocialForce.
"""

from dataclasses import dataclass

import numpy as np

from ..geometry import closest_points_on_segments
from ..prediction import crowd_arrays
from .common import VelocityCommand, cap_speed

_EPS = 1e-9


@dataclass(frozen=True)
class SfParams:
    v_max: float = 1.0
    A: float = 5.1
    lambda_importance: float = 3.0
    gamma: float = 0.35
    n: float = 1.0
    n_prime: float = 3.0
    relaxation_time: float = 0.5
    goal_threshold: float = 0.2
    dt: float = 0.1
    # planning horizon used only to place the gap planner's subgoal
    t_plan: float = 2.0
    group_coherence: float = 3.0
    group_repulsion: float = 1.0
    group_repulsion_threshold: float = 0.55
    group_gaze: float = 4.0
    obstacle_factor: float = 10.0
    obstacle_sigma: float = 0.2
    obstacle_threshold: float = 3.0


def interaction_on(pos_i, vel_i, pos_j, vel_j, params):
    """Repulsive force on agent i from each agent j.

    ``pos_j``/``vel_j`` are (K, 2); returns (K, 2).
    """
    diff = pos_i[None, :] - pos_j  # from j towards i
    dist = np.hypot(diff[:, 0], diff[:, 1])
    e = diff / np.maximum(dist, _EPS)[:, None]
    inter = params.lambda_importance * (vel_j - vel_i[None, :]) + e
    inter_len = np.hypot(inter[:, 0], inter[:, 1])
    t = inter / np.maximum(inter_len, _EPS)[:, None]
    theta = np.arctan2(t[:, 1], t[:, 0]) - np.arctan2(e[:, 1], e[:, 0])
    theta = np.mod(theta + np.pi, 2.0 * np.pi) - np.pi
    B = np.maximum(params.gamma * inter_len, _EPS)
    along = np.exp(-dist / B - (params.n_prime * B * theta) ** 2)
    across = -np.sign(theta) * np.exp(-dist / B - (params.n * B * theta) ** 2)
    normal = np.stack((-t[:, 1], t[:, 0]), axis=-1)
    return params.A * (along[:, None] * t + across[:, None] * normal)


def social_forces(positions, velocities, params):
    """Summed pairwise interaction force on every agent, (M, 2)."""
    m = len(positions)
    out = np.zeros((m, 2))
    if m < 2:
        return out
    diff = positions[:, None, :] - positions[None, :, :]
    dist = np.hypot(diff[..., 0], diff[..., 1])
    np.fill_diagonal(dist, 1.0)
    e = diff / np.maximum(dist, _EPS)[..., None]
    inter = params.lambda_importance * (velocities[None, :, :] - velocities[:, None, :]) + e
    inter_len = np.hypot(inter[..., 0], inter[..., 1])
    t = inter / np.maximum(inter_len, _EPS)[..., None]
    theta = np.arctan2(t[..., 1], t[..., 0]) - np.arctan2(e[..., 1], e[..., 0])
    theta = np.mod(theta + np.pi, 2.0 * np.pi) - np.pi
    B = np.maximum(params.gamma * inter_len, _EPS)
    along = np.exp(-dist / B - (params.n_prime * B * theta) ** 2)
    across = -np.sign(theta) * np.exp(-dist / B - (params.n * B * theta) ** 2)
    np.fill_diagonal(along, 0.0)
    np.fill_diagonal(across, 0.0)
    normal = np.stack((-t[..., 1], t[..., 0]), axis=-1)
    f = along[..., None] * t + across[..., None] * normal
    return params.A * f.sum(axis=1)


def desired_force(positions, velocities, goals, desired_speed, params):
    to_goal = goals - positions
    dist = np.hypot(to_goal[:, 0], to_goal[:, 1])
    direction = to_goal / np.maximum(dist, _EPS)[:, None]
    desired = direction * np.asarray(desired_speed, dtype=float).reshape(-1, 1)
    force = np.where((dist > params.goal_threshold)[:, None], desired - velocities, -velocities)
    return force / params.relaxation_time


def group_forces(positions, goals, groups, params):
    """Coherence, intra-group repulsion and gaze terms for each group (index arrays)."""
    out = np.zeros_like(positions)
    for members in groups:
        k = len(members)
        if k < 2:
            continue
        pos = positions[members]
        com = pos.mean(axis=0)
        to_com = com - pos
        norms = np.hypot(to_com[:, 0], to_com[:, 1])
        soft = (np.tanh(norms - (k - 1) / 2.0) + 1.0) / 2.0
        out[members] += params.group_coherence * to_com * soft[:, None]

        diff = pos[:, None, :] - pos[None, :, :]
        dist = np.hypot(diff[..., 0], diff[..., 1])
        mask = (dist <= params.group_repulsion_threshold) & ~np.eye(k, dtype=bool)
        out[members] += params.group_repulsion * (diff * mask[..., None]).sum(axis=1)

        to_goal = goals[members] - pos
        goal_dist = np.maximum(np.hypot(to_goal[:, 0], to_goal[:, 1]), _EPS)
        goal_dir = to_goal / goal_dist[:, None]
        rel_com = (pos.sum(axis=0)[None, :] - pos) / (k - 1) - pos
        com_dist = np.hypot(rel_com[:, 0], rel_com[:, 1])
        com_dir = rel_com / np.maximum(com_dist, _EPS)[:, None]
        proj = np.einsum("ij,ij->i", goal_dir, com_dir)
        out[members] += params.group_gaze * (com_dist * proj / goal_dist)[:, None] * goal_dir
    return out


def obstacle_forces(positions, radii, segments, params):
    """Exponential wall repulsion from the closest point of every segment in range."""
    if segments is None or len(segments) == 0:
        return np.zeros_like(positions)
    closest = closest_points_on_segments(positions, segments[:, 0], segments[:, 1])
    diff = positions[:, None, :] - closest
    dist = np.hypot(diff[..., 0], diff[..., 1])
    direction = diff / np.maximum(dist, _EPS)[..., None]
    gap = dist - np.asarray(radii).reshape(-1, 1)
    mag = np.exp(-gap / params.obstacle_sigma) * (gap < params.obstacle_threshold)
    return params.obstacle_factor * (mag[..., None] * direction).sum(axis=1)


def sf_step(ego, others, goal, params=SfParams(), segments=None):
    """Velocity command for a Social-Forces ego agent."""
    crowd = crowd_arrays(others)
    pos = ego.position[None, :]
    vel = ego.velocity[None, :]
    force = desired_force(pos, vel, np.asarray(goal, dtype=float)[None, :], params.v_max, params)[0]
    if len(crowd.positions):
        force = force + interaction_on(ego.position, ego.velocity, crowd.positions, crowd.velocities,
                                       params).sum(axis=0)
    if segments is not None and len(segments):
        force = force + obstacle_forces(pos, [ego.radius], segments, params)[0]
    v = cap_speed(ego.velocity + params.dt * force, params.v_max)
    return VelocityCommand(linear_speed=float(np.hypot(*v)), velocity=v)
