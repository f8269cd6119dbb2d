"""Small 2D helpers: angle wrapping, rotation, point-to-segment distance."""

import math

import numpy as np


def wrap_angle(angle):
    """Wrap an angle (scalar or array) into (-pi, pi]."""
    wrapped = np.mod(np.asarray(angle, dtype=float) + np.pi, 2.0 * np.pi) - np.pi
    wrapped = np.where(wrapped == -np.pi, np.pi, wrapped)
    if np.ndim(wrapped) == 0:
        return float(wrapped)
    return wrapped


def rotate(vec, angle):
    """Rotate 2D vector(s) counter-clockwise by ``angle`` radians."""
    c, s = math.cos(angle), math.sin(angle)
    vec = np.asarray(vec, dtype=float)
    x, y = vec[..., 0], vec[..., 1]
    return np.stack((c * x - s * y, s * x + c * y), axis=-1)


def unit(vec):
    vec = np.asarray(vec, dtype=float)
    norm = np.linalg.norm(vec)
    if norm == 0.0:
        raise ZeroDivisionError("cannot normalize a zero vector")
    return vec / norm


def heading_of(vec):
    return math.atan2(vec[1], vec[0])


def point_segment_distance(points, seg_a, seg_b):
    """Euclidean distance from points (..., 2) to every segment.

    ``seg_a`` and ``seg_b`` are (S, 2) endpoint arrays. Returns (..., S).
    """
    points = np.asarray(points, dtype=float)[..., None, :]
    a = np.asarray(seg_a, dtype=float)
    ab = np.asarray(seg_b, dtype=float) - a
    ab_sq = np.einsum("sk,sk->s", ab, ab)
    t = np.einsum("...sk,sk->...s", points - a, ab) / ab_sq
    t = np.clip(t, 0.0, 1.0)
    closest = a + t[..., None] * ab
    return np.linalg.norm(points - closest, axis=-1)


def closest_points_on_segments(points, seg_a, seg_b):
    """Closest point on each segment for every point; returns (..., S, 2)."""
    points = np.asarray(points, dtype=float)[..., None, :]
    a = np.asarray(seg_a, dtype=float)
    ab = np.asarray(seg_b, dtype=float) - a
    ab_sq = np.einsum("sk,sk->s", ab, ab)
    t = np.clip(np.einsum("...sk,sk->...s", points - a, ab) / ab_sq, 0.0, 1.0)
    return a + t[..., None] * ab
