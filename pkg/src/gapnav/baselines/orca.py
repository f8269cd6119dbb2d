"""Optimal Reciprocal Collision Avoidance for a holonomic ego agent.

A direct port of the agent-agent part of the RVO2 library: one half-plane
constraint per neighbour, a 2D incremental linear program for the velocity
closest to the preferred one, and the 3D relaxation that minimises the
largest constraint violation when the program is infeasible.
"""

import math
from dataclasses import dataclass

import numpy as np

from ..prediction import crowd_arrays
from .common import VelocityCommand

RVO_EPSILON = 1e-5


@dataclass(frozen=True)
class OrcaParams:
    t_plan: float = 2.5
    dt: float = 0.25
    v_max: float = 1.0
    neighbor_dist: float = 4.0
    max_neighbors: int = 5
    # clockwise rotation of the preferred velocity; breaks perfect symmetry to the right
    symmetry_epsilon: float = 1e-4


def _det(a, b):
    return a[0] * b[1] - a[1] * b[0]


def _dot(a, b):
    return a[0] * b[0] + a[1] * b[1]


def orca_lines(position, velocity, radius, neighbors, params):
    """Half-plane constraints (point, direction) induced by each neighbour.

    ``neighbors`` is a list of (position, velocity, radius) tuples.
    """
    inv_horizon = 1.0 / params.t_plan
    lines = []
    for other_pos, other_vel, other_radius in neighbors:
        rel_pos = (other_pos[0] - position[0], other_pos[1] - position[1])
        rel_vel = (velocity[0] - other_vel[0], velocity[1] - other_vel[1])
        dist_sq = _dot(rel_pos, rel_pos)
        comb = radius + other_radius
        comb_sq = comb * comb
        if dist_sq > comb_sq:
            w = (rel_vel[0] - inv_horizon * rel_pos[0], rel_vel[1] - inv_horizon * rel_pos[1])
            w_len_sq = _dot(w, w)
            dot1 = _dot(w, rel_pos)
            if dot1 < 0.0 and dot1 * dot1 > comb_sq * w_len_sq:
                w_len = math.sqrt(w_len_sq)
                unit_w = (w[0] / w_len, w[1] / w_len)
                direction = (unit_w[1], -unit_w[0])
                scale = comb * inv_horizon - w_len
                u = (scale * unit_w[0], scale * unit_w[1])
            else:
                leg = math.sqrt(dist_sq - comb_sq)
                if _det(rel_pos, w) > 0.0:
                    direction = (
                        (rel_pos[0] * leg - rel_pos[1] * comb) / dist_sq,
                        (rel_pos[0] * comb + rel_pos[1] * leg) / dist_sq,
                    )
                else:
                    direction = (
                        -(rel_pos[0] * leg + rel_pos[1] * comb) / dist_sq,
                        -(-rel_pos[0] * comb + rel_pos[1] * leg) / dist_sq,
                    )
                dot2 = _dot(rel_vel, direction)
                u = (dot2 * direction[0] - rel_vel[0], dot2 * direction[1] - rel_vel[1])
        else:
            inv_step = 1.0 / params.dt
            w = (rel_vel[0] - inv_step * rel_pos[0], rel_vel[1] - inv_step * rel_pos[1])
            w_len = math.hypot(*w)
            if w_len < 1e-12:
                w, w_len = (1.0, 0.0), 1.0
            unit_w = (w[0] / w_len, w[1] / w_len)
            direction = (unit_w[1], -unit_w[0])
            scale = comb * inv_step - w_len
            u = (scale * unit_w[0], scale * unit_w[1])
        point = (velocity[0] + 0.5 * u[0], velocity[1] + 0.5 * u[1])
        lines.append((point, direction))
    return lines


def _linear_program1(lines, line_no, radius, opt, direction_opt):
    point, direction = lines[line_no]
    dot = _dot(point, direction)
    disc = dot * dot + radius * radius - _dot(point, point)
    if disc < 0.0:
        return None
    sq = math.sqrt(disc)
    t_left, t_right = -dot - sq, -dot + sq
    for i in range(line_no):
        p_i, d_i = lines[i]
        denom = _det(direction, d_i)
        numer = _det(d_i, (point[0] - p_i[0], point[1] - p_i[1]))
        if abs(denom) <= RVO_EPSILON:
            if numer < 0.0:
                return None
            continue
        t = numer / denom
        if denom >= 0.0:
            t_right = min(t_right, t)
        else:
            t_left = max(t_left, t)
        if t_left > t_right:
            return None
    if direction_opt:
        t = t_right if _dot(opt, direction) > 0.0 else t_left
    else:
        t = _dot(direction, (opt[0] - point[0], opt[1] - point[1]))
        t = min(max(t, t_left), t_right)
    return (point[0] + t * direction[0], point[1] + t * direction[1])


def _linear_program2(lines, radius, opt, direction_opt):
    if direction_opt:
        result = (opt[0] * radius, opt[1] * radius)
    elif _dot(opt, opt) > radius * radius:
        n = math.hypot(*opt)
        result = (opt[0] / n * radius, opt[1] / n * radius)
    else:
        result = opt
    for i, (p, d) in enumerate(lines):
        if _det(d, (p[0] - result[0], p[1] - result[1])) > 0.0:
            new = _linear_program1(lines, i, radius, opt, direction_opt)
            if new is None:
                return i, result
            result = new
    return len(lines), result


def _linear_program3(lines, begin, radius, result):
    distance = 0.0
    for i in range(begin, len(lines)):
        p_i, d_i = lines[i]
        if _det(d_i, (p_i[0] - result[0], p_i[1] - result[1])) > distance:
            proj = []
            for j in range(i):
                p_j, d_j = lines[j]
                det = _det(d_i, d_j)
                if abs(det) <= RVO_EPSILON:
                    if _dot(d_i, d_j) > 0.0:
                        continue
                    point = (0.5 * (p_i[0] + p_j[0]), 0.5 * (p_i[1] + p_j[1]))
                else:
                    s = _det(d_j, (p_i[0] - p_j[0], p_i[1] - p_j[1])) / det
                    point = (p_i[0] + s * d_i[0], p_i[1] + s * d_i[1])
                dx, dy = d_j[0] - d_i[0], d_j[1] - d_i[1]
                n = math.hypot(dx, dy)
                proj.append((point, (dx / n, dy / n)))
            fail, new = _linear_program2(proj, radius, (-d_i[1], d_i[0]), True)
            if fail >= len(proj):
                result = new
            distance = _det(d_i, (p_i[0] - result[0], p_i[1] - result[1]))
    return result


def solve_velocity(lines, v_max, preferred):
    fail, result = _linear_program2(lines, v_max, preferred, False)
    if fail < len(lines):
        result = _linear_program3(lines, fail, v_max, result)
    return result


def select_neighbors(position, crowd, params):
    """Indices of up to ``max_neighbors`` nearest agents within ``neighbor_dist``."""
    if len(crowd.positions) == 0:
        return np.empty(0, dtype=int)
    diff = crowd.positions - position[None, :]
    d2 = diff[:, 0] ** 2 + diff[:, 1] ** 2
    idx = np.flatnonzero(d2 < params.neighbor_dist ** 2)
    idx = idx[np.argsort(d2[idx], kind="stable")]
    return idx[: params.max_neighbors]


def preferred_velocity(position, goal, params):
    to_goal = np.asarray(goal, dtype=float) - position
    dist = math.hypot(to_goal[0], to_goal[1])
    if dist == 0.0:
        return (0.0, 0.0)
    speed = params.v_max
    c, s = math.cos(-params.symmetry_epsilon), math.sin(-params.symmetry_epsilon)
    ux, uy = to_goal[0] / dist, to_goal[1] / dist
    return (speed * (c * ux - s * uy), speed * (s * ux + c * uy))


def orca_step(ego, others, goal, params=OrcaParams(), others_radius=None):
    crowd = crowd_arrays(others)
    idx = select_neighbors(ego.position, crowd, params)
    if others_radius is None:
        others_radius = ego.radius
    radii = np.broadcast_to(np.asarray(others_radius, dtype=float), (len(crowd.positions),))
    neighbors = [(crowd.positions[k], crowd.velocities[k], float(radii[k])) for k in idx]
    lines = orca_lines(ego.position, ego.velocity, ego.radius, neighbors, params)
    pref = preferred_velocity(ego.position, goal, params)
    v = np.array(solve_velocity(lines, params.v_max, pref), dtype=float)
    speed = math.hypot(v[0], v[1])
    if speed > params.v_max:
        v *= params.v_max / speed
        speed = params.v_max
    return VelocityCommand(linear_speed=speed, velocity=v)
