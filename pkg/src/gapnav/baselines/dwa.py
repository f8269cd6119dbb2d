"""Predictive Dynamic Window Approach for a unicycle ego agent.

Arcs of constant (speed, yaw rate) are rolled out over the planning horizon
and checked against constant-velocity predictions of the other agents at the
matching time stamps. Colliding arcs are discarded; the rest are scored by
goal heading, speed and clearance.
"""

import math
from dataclasses import dataclass

import numpy as np

from ..prediction import crowd_arrays
from .common import VelocityCommand


@dataclass(frozen=True)
class DwaParams:
    t_plan: float = 2.0
    dt: float = 0.25
    v_min: float = 0.0
    v_max: float = 1.0
    yaw_rate_max: float = 1.0
    yaw_accel_max: float = 1.5
    accel_max: float = 1.5
    n_yaw: int = 10
    n_speed: int = 10
    # period over which the acceleration limits bound the next command
    window_dt: float = 0.25
    w_heading: float = 0.6
    w_speed: float = 0.2
    w_clearance: float = 0.2
    clearance_cap: float = 2.0
    # an arc passing this close to the goal reaches it and scores full heading
    goal_tolerance: float = 0.5

    def __post_init__(self):
        if self.n_yaw < 1 or self.n_speed < 1:
            raise ValueError("dynamic window grid needs at least one sample per axis")

    @property
    def steps(self):
        return int(round(self.t_plan / self.dt))


def dynamic_window(speed, yaw_rate, params):
    """Admissible (v_lo, v_hi, w_lo, w_hi) around the current command."""
    dv = params.accel_max * params.window_dt
    dw = params.yaw_accel_max * params.window_dt
    v_lo = max(params.v_min, speed - dv)
    v_hi = min(params.v_max, speed + dv)
    w_lo = max(-params.yaw_rate_max, yaw_rate - dw)
    w_hi = min(params.yaw_rate_max, yaw_rate + dw)
    if v_lo > v_hi:  # current speed outside limits; bring it back
        v_lo = v_hi = min(max(speed, params.v_min), params.v_max)
    if w_lo > w_hi:
        w_lo = w_hi = min(max(yaw_rate, -params.yaw_rate_max), params.yaw_rate_max)
    return v_lo, v_hi, w_lo, w_hi


def command_grid(speed, yaw_rate, params):
    """(S, 2) array of (v, w) samples; w = 0 is added when the window contains it."""
    v_lo, v_hi, w_lo, w_hi = dynamic_window(speed, yaw_rate, params)
    vs = np.linspace(v_lo, v_hi, params.n_speed)
    ws = np.linspace(w_lo, w_hi, params.n_yaw)
    if w_lo <= 0.0 <= w_hi and not np.any(ws == 0.0):
        ws = np.sort(np.append(ws, 0.0))
    V, W = np.meshgrid(vs, ws, indexing="ij")
    return np.stack((V.ravel(), W.ravel()), axis=1)


def unicycle_rollout(x, y, psi, v, w, dt, n):
    """Exact constant-command arcs; returns positions (S, n, 2) at t = dt..n*dt and headings (S, n)."""
    v = np.asarray(v, dtype=float)[:, None]
    w = np.asarray(w, dtype=float)[:, None]
    t = dt * np.arange(1, n + 1)[None, :]
    heading = psi + w * t
    straight = np.abs(w) < 1e-9
    w_safe = np.where(straight, 1.0, w)
    px = np.where(straight, x + v * t * math.cos(psi), x + v / w_safe * (np.sin(heading) - math.sin(psi)))
    py = np.where(straight, y + v * t * math.sin(psi), y - v / w_safe * (np.cos(heading) - math.cos(psi)))
    return np.stack((px, py), axis=-1), heading


def arc_clearances(arcs, crowd, radius_sum, dt, origin=None):
    """Surface clearances of each arc to each predicted agent.

    Returns ``(clear, violating)``, both (S, n): the minimum clearance over
    agents and whether any agent is penetrated deeper than it is at ``origin``
    (the current ego position). An agent already overlapping the ego only
    counts as a collision on steps where the overlap grows.
    """
    n = arcs.shape[1]
    if len(crowd.positions) == 0:
        return np.full(arcs.shape[:2], np.inf), np.zeros(arcs.shape[:2], dtype=bool)
    radius_sum = np.broadcast_to(np.asarray(radius_sum, dtype=float), (len(crowd.positions),))
    t = dt * np.arange(1, n + 1)
    pred = crowd.positions[:, None, :] + t[None, :, None] * crowd.velocities[:, None, :]  # (K, n, 2)
    diff = arcs[:, None, :, :] - pred[None, :, :, :]
    dist = np.hypot(diff[..., 0], diff[..., 1]) - radius_sum[None, :, None]  # (S, K, n)
    now = np.zeros(len(crowd.positions))
    if origin is not None:
        d0 = np.asarray(origin, dtype=float)[None, :] - crowd.positions
        now = np.minimum(np.hypot(d0[:, 0], d0[:, 1]) - radius_sum, 0.0)
    violating = (dist < now[None, :, None]).any(axis=1)
    return dist.min(axis=1), violating


def dwa_step(ego, others, goal, params=DwaParams(), yaw_rate=0.0, others_radius=None):
    """Best admissible (speed, yaw rate) command towards ``goal``.

    ``yaw_rate`` is the command currently being executed; together with the
    ego speed it centres the dynamic window.
    """
    crowd = crowd_arrays(others)
    grid = command_grid(ego.speed, yaw_rate, params)
    n = params.steps
    arcs, headings = unicycle_rollout(
        ego.position[0], ego.position[1], ego.heading, grid[:, 0], grid[:, 1], params.dt, n
    )
    if others_radius is None:
        others_radius = ego.radius
    radius_sum = ego.radius + np.broadcast_to(np.asarray(others_radius, dtype=float), (len(crowd.positions),))
    clear, colliding = arc_clearances(arcs, crowd, radius_sum, params.dt, origin=ego.position)

    end = arcs[:, -1, :]
    to_goal = np.asarray(goal, dtype=float)[None, :] - end
    goal_dir = np.arctan2(to_goal[:, 1], to_goal[:, 0])
    heading_score = (np.cos(goal_dir - headings[:, -1]) + 1.0) / 2.0
    gap = arcs - np.asarray(goal, dtype=float)
    reaches = (np.hypot(gap[..., 0], gap[..., 1]) < params.goal_tolerance).any(axis=1)
    heading_score = np.where(reaches, 1.0, heading_score)
    speed_score = grid[:, 0] / params.v_max
    min_clear = clear.min(axis=1)
    clear_score = np.clip(min_clear, 0.0, params.clearance_cap) / params.clearance_cap
    score = params.w_heading * heading_score + params.w_speed * speed_score + params.w_clearance * clear_score

    admissible = ~colliding.any(axis=1)
    if admissible.any():
        best = int(np.argmax(np.where(admissible, score, -np.inf)))
    else:
        # degraded mode: postpone the first predicted contact as long as possible
        first_hit = np.argmax(colliding, axis=1)
        latest = first_hit.max()
        best = int(np.argmax(np.where(first_hit == latest, score, -np.inf)))
    v, w = grid[best]
    return VelocityCommand(linear_speed=float(v), yaw_rate=float(w))
