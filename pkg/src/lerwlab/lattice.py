"""Integer-lattice geometry on Z^2.

Points are (x, y) integer pairs; paths are (N, 2) int64 arrays of
nearest-neighbor points.  The discrete ball of radius r is the set of
points with Euclidean norm < r; its boundary is the set of outside
points with a unit neighbor inside.  Ball membership is decided by
comparing the integer squared norm with r*r, which is exact whenever
r*r is representable (always true for the integer and e^k radii used
here, since integer squared norms below 2^53 are exact in float64).
"""

from __future__ import annotations

import math

import numpy as np

UNIT_STEPS = np.array([[1, 0], [-1, 0], [0, 1], [0, -1]], dtype=np.int64)


def norm(p) -> float:
    return math.hypot(p[0], p[1])


def argument(p) -> float:
    """Planar argument of a lattice point, in (-pi, pi]."""
    x, y = int(p[0]), int(p[1])
    if x == 0 and y == 0:
        raise ValueError("argument undefined at the origin")
    a = math.atan2(y, x)
    if a <= -math.pi:  # atan2 returns -pi for (-r, -0.0) style inputs
        a = math.pi
    return a


def angular_distance(a: float, b: float) -> float:
    """Distance between two angles on the circle, in [0, pi]."""
    d = math.fmod(abs(a - b), 2.0 * math.pi)
    return min(d, 2.0 * math.pi - d)


def is_inside(p, radius: float) -> bool:
    x, y = int(p[0]), int(p[1])
    return x * x + y * y < radius * radius


def ball_points(radius: float) -> np.ndarray:
    """All lattice points of norm < radius, as an (N, 2) array."""
    r = int(math.ceil(radius))
    xs, ys = np.mgrid[-r : r + 1, -r : r + 1]
    sq = xs * xs + ys * ys
    mask = sq < radius * radius
    return np.column_stack([xs[mask], ys[mask]]).astype(np.int64)


def boundary_points(radius: float) -> np.ndarray:
    """Points outside the open ball with a unit neighbor inside it."""
    r = int(math.ceil(radius)) + 1
    xs, ys = np.mgrid[-r : r + 1, -r : r + 1]
    sq = (xs * xs + ys * ys).astype(np.float64)
    r2 = radius * radius
    inside = sq < r2
    nbr_inside = np.zeros_like(inside)
    nbr_inside[1:, :] |= inside[:-1, :]
    nbr_inside[:-1, :] |= inside[1:, :]
    nbr_inside[:, 1:] |= inside[:, :-1]
    nbr_inside[:, :-1] |= inside[:, 1:]
    mask = (~inside) & nbr_inside
    return np.column_stack([xs[mask], ys[mask]]).astype(np.int64)


def is_nearest_neighbor_path(path: np.ndarray) -> bool:
    path = np.asarray(path)
    if path.ndim != 2 or path.shape[1] != 2 or path.shape[0] == 0:
        return False
    if path.shape[0] == 1:
        return True
    d = np.abs(np.diff(path, axis=0)).sum(axis=1)
    return bool(np.all(d == 1))


def first_exit_index(path: np.ndarray, radius: float):
    """Smallest index whose point lies outside the open ball, or None."""
    path = np.asarray(path, dtype=np.int64)
    sq = path[:, 0] ** 2 + path[:, 1] ** 2
    outside = sq >= radius * radius
    if not outside.any():
        return None
    return int(np.argmax(outside))
