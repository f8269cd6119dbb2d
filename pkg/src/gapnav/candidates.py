"""Fan-out candidate paths around the straight line to the goal, and their timing.

Each candidate is a three-segment polyline: a first leg of fixed length
leaving the straight line at a fan angle, a second leg parallel to the
straight line covering a fraction of the remaining distance, and a closing
leg to the planning goal. Paths are timed at constant speed, slowed down at
the start when a sharp initial turn is required.

Angle convention: positive fan angles turn clockwise (to the right of the
direction of travel), negative ones counter-clockwise (left).
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractViolation
from .geometry import rotate, wrap_angle


def _default_fan():
    return tuple(math.radians(a) for a in range(-80, 81, 16))


@dataclass(frozen=True)
class PgpConfig:
    horizon_T: float = 8.0
    rate: float = 4.0
    v_max: float = 1.0
    nominal_speed: float = 1.0
    fan_angles: tuple = field(default_factory=_default_fan)
    d_turned: float = 2.5
    outside_fractions: tuple = (0.0, 0.9)
    turn_slowdown_threshold: float = math.radians(30.0)
    turn_slowdown_factor: float = 0.5
    max_turn_rate: float = 1.0

    def __post_init__(self):
        if self.horizon_T <= 0 or self.rate <= 0 or self.v_max <= 0 or self.d_turned <= 0:
            raise ContractViolation("horizon_T, rate, v_max and d_turned must be positive")
        if not 0 < self.nominal_speed <= self.v_max:
            raise ContractViolation("nominal_speed must lie in (0, v_max]")
        if any(not 0.0 <= f < 1.0 for f in self.outside_fractions):
            raise ContractViolation("outside_fractions must lie in [0, 1)")
        if self.max_turn_rate <= 0:
            raise ContractViolation("max_turn_rate must be positive")

    @property
    def dt(self):
        return 1.0 / self.rate

    @property
    def horizon_steps(self):
        return int(round(self.horizon_T * self.rate))

    @property
    def d_goal(self):
        return self.horizon_T * self.v_max


@dataclass
class FanPath:
    fan_angle: float
    outside_fraction: float
    vertices: np.ndarray  # (V, 2), zero-length and collinear joints removed


@dataclass
class CandidateTrajectory:
    fan_angle: float
    outside_fraction: float
    positions: np.ndarray
    speeds: np.ndarray
    headings: np.ndarray
    goal_point: np.ndarray
    vertices: np.ndarray
    arrived: np.ndarray = None  # step i ends on the path end point

    def __post_init__(self):
        if self.arrived is None:
            self.arrived = np.zeros(len(self.speeds), dtype=bool)


def pgp_goal(ego, map_goal, config):
    """Planning goal on the ray to the map goal, at most one horizon of travel away."""
    start = np.asarray(getattr(ego, "position", ego), dtype=float)
    to_goal = np.asarray(map_goal, dtype=float) - start
    dist = math.hypot(to_goal[0], to_goal[1])
    if dist == 0.0:
        raise ContractViolation("ego already sits on the map goal")
    return start + to_goal * (min(config.d_goal, dist) / dist)


def _simplify(vertices, tol=1e-9):
    """Drop zero-length segments and interior vertices on a straight run."""
    pts = [vertices[0]]
    for p in vertices[1:]:
        if math.hypot(p[0] - pts[-1][0], p[1] - pts[-1][1]) > tol:
            pts.append(p)
    out = [pts[0]]
    for i in range(1, len(pts) - 1):
        ax, ay = pts[i][0] - out[-1][0], pts[i][1] - out[-1][1]
        bx, by = pts[i + 1][0] - pts[i][0], pts[i + 1][1] - pts[i][1]
        cross = ax * by - ay * bx
        if abs(cross) <= tol * math.hypot(ax, ay) * math.hypot(bx, by) and ax * bx + ay * by > 0:
            continue
        out.append(pts[i])
    if len(pts) > 1:
        out.append(pts[-1])
    return np.array(out)


def _same_polyline(a, b, atol=1e-9):
    return a.shape == b.shape and float(np.max(np.abs(a - b))) <= atol


def build_paths(ego_position, goal_point, config):
    """All unique fan-out polylines from ``ego_position`` to ``goal_point``."""
    start = np.asarray(ego_position, dtype=float)
    goal = np.asarray(goal_point, dtype=float)
    line = goal - start
    length = math.hypot(line[0], line[1])
    if length == 0.0:
        raise ContractViolation("goal coincides with ego position")
    u = line / length
    paths = []
    # polylines with different fan angles leave the start towards different
    # points, so only paths sharing an angle can coincide
    by_angle = {}
    for alpha in config.fan_angles:
        p_out = start + config.d_turned * rotate(u, -alpha)
        remaining = math.hypot(p_out[0] - goal[0], p_out[1] - goal[1])
        same = by_angle.setdefault(round(wrap_angle(alpha), 12), [])
        for frac in config.outside_fractions:
            p_side = p_out + frac * remaining * u
            verts = _simplify([start, p_out, p_side, goal])
            if any(_same_polyline(verts, q.vertices) for q in same):
                continue
            path = FanPath(fan_angle=float(alpha), outside_fraction=float(frac), vertices=verts)
            same.append(path)
            paths.append(path)
    return paths


def path_to_trajectory(path, config, ego_heading=None, goal_point=None):
    """Time a polyline at the nominal speed over the planning horizon.

    Positions are sampled at t = i * dt for i = 0..N-1. ``speeds[i]`` is the
    speed held between samples i and i+1; once the path is exhausted the
    trajectory rests on its end point with zero speed, and ``arrived`` marks
    every step that ends there. If ``ego_heading`` is
    given and the first leg requires a turn above the threshold, the first
    ceil(turn / max_turn_rate / dt) steps run at the reduced speed.
    """
    if not isinstance(path, FanPath):
        path = FanPath(0.0, 0.0, np.asarray(path, dtype=float))
    return time_paths([path], config, ego_heading, goal_point)[0]


def time_paths(paths, config, ego_heading=None, goal_point=None):
    """``path_to_trajectory`` for many paths at once (one batch of array operations)."""
    n_vert = max(len(p.vertices) for p in paths)
    # pad with copies of the end point; the padding segments have zero length
    verts = np.stack([np.concatenate([p.vertices, np.repeat(p.vertices[-1:], n_vert - len(p.vertices), 0)])
                      for p in paths])
    seg = np.diff(verts, axis=1)  # (P, S, 2)
    seg_len = np.hypot(seg[..., 0], seg[..., 1])
    total = seg_len.sum(axis=1)
    if np.any(total <= 0.0):
        raise ContractViolation("polyline has zero length")
    seg_heading = np.arctan2(seg[..., 1], seg[..., 0])
    cum = np.concatenate([np.zeros((len(paths), 1)), np.cumsum(seg_len, axis=1)], axis=1)

    n = config.horizon_steps
    dt = config.dt
    nominal = np.full((len(paths), n), config.nominal_speed)
    if ego_heading is not None:
        turn = np.abs(wrap_angle(seg_heading[:, 0] - ego_heading))
        for k in np.flatnonzero(turn > config.turn_slowdown_threshold):
            n_slow = math.ceil(turn[k] / config.max_turn_rate / dt - 1e-9)
            nominal[k, :n_slow] *= config.turn_slowdown_factor

    s = np.minimum(np.concatenate([np.zeros((len(paths), 1)), np.cumsum(nominal * dt, axis=1)], axis=1),
                   total[:, None])
    speeds = np.diff(s, axis=1) / dt
    arrived = s[:, 1:] >= total[:, None]
    s = s[:, :n]

    # segment of each sample: the last non-empty segment starting at or before it
    starts_before = (cum[:, None, :-1] <= s[:, :, None]) & (seg_len[:, None, :] > 0.0)
    idx = starts_before.shape[2] - 1 - np.argmax(starts_before[:, :, ::-1], axis=2)
    rows = np.arange(len(paths))[:, None]
    offset = s - cum[rows, idx]
    positions = verts[rows, idx] + (offset / seg_len[rows, idx])[..., None] * seg[rows, idx]
    headings = seg_heading[rows, idx]

    out = []
    for k, p in enumerate(paths):
        goal = p.vertices[-1] if goal_point is None else goal_point
        out.append(CandidateTrajectory(
            fan_angle=p.fan_angle,
            outside_fraction=p.outside_fraction,
            positions=positions[k],
            speeds=speeds[k],
            headings=headings[k],
            goal_point=np.asarray(goal, dtype=float),
            vertices=p.vertices,
            arrived=arrived[k],
        ))
    return out


def build_candidates(ego_position, ego_heading, map_goal, config):
    goal = pgp_goal(ego_position, map_goal, config)
    paths = build_paths(ego_position, goal, config)
    return time_paths(paths, config, ego_heading, goal)
