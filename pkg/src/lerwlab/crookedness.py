"""Per-scale crossing statistics of lattice paths.

A path from the origin crosses the exponential shells of radius e^k at
first-hit indices eta_k; the angle swept between consecutive shell hits
measures how crooked the path is at that scale.  The straight count
(angle change <= delta) and crooked count (>= delta) summarize a path;
ties at exactly delta increment both, matching the non-strict
inequalities on the two sides.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .lattice import angular_distance, argument
from .looperase import LerwSampleConfig, sample_lerw
from .rng import RandomStream


@dataclass(frozen=True)
class CrossingStats:
    scale_indices: list  # k = 0 .. m
    hit_indices: list  # eta_k, strictly increasing
    angles: list  # arg(path(eta_k))
    angle_changes: list  # Y_k = circular distance of consecutive angles, k = 1 .. m


@dataclass(frozen=True)
class CrookednessCounts:
    delta: float
    straight_count: int
    crooked_count: int
    scales: int


def scale_crossings(path: np.ndarray, max_scale: int) -> CrossingStats:
    """First hits of the shells of radius e^0 .. e^max_scale, with angles."""
    path = np.asarray(path, dtype=np.int64)
    if path.shape[0] == 0 or path[0, 0] != 0 or path[0, 1] != 0:
        raise ValueError("path must start at the origin")
    sq = (path[:, 0] ** 2 + path[:, 1] ** 2).astype(np.float64)
    hits = []
    angles = []
    for k in range(max_scale + 1):
        r2 = math.exp(2.0 * k)
        beyond = sq >= r2
        if not beyond.any():
            raise ValueError(f"path never reaches norm e^{k}")
        eta = int(np.argmax(beyond))
        hits.append(eta)
        angles.append(argument(path[eta]))
    changes = [angular_distance(angles[k], angles[k - 1]) for k in range(1, max_scale + 1)]
    return CrossingStats(
        scale_indices=list(range(max_scale + 1)),
        hit_indices=hits,
        angles=angles,
        angle_changes=changes,
    )


def crookedness_counts(stats: CrossingStats, delta: float) -> CrookednessCounts:
    if not 0.0 < delta < math.pi / 2:
        raise ValueError("delta must lie in (0, pi/2)")
    straight = sum(1 for y in stats.angle_changes if y <= delta)
    crooked = sum(1 for y in stats.angle_changes if y >= delta)
    return CrookednessCounts(
        delta=delta,
        straight_count=straight,
        crooked_count=crooked,
        scales=len(stats.angle_changes),
    )


@dataclass(frozen=True)
class TailEstimate:
    probability: float
    stderr: float
    samples: int
    scales: int
    delta: float
    epsilon: float


def straightness_tail(
    n_scales: int,
    delta: float,
    epsilon: float,
    samples: int,
    stream: RandomStream,
) -> TailEstimate:
    """Fraction of LERW samples whose straight count reaches epsilon * n.

    Samples are drawn at inner radius e^n (outer 2 e^n).
    """
    if samples < 1:
        raise ValueError("need at least one sample")
    cfg = LerwSampleConfig(math.exp(n_scales))
    hits = 0
    for i in range(samples):
        path = sample_lerw(cfg, stream.substream(i))
        stats = scale_crossings(path, n_scales)
        counts = crookedness_counts(stats, delta)
        if counts.straight_count >= epsilon * n_scales:
            hits += 1
    p = hits / samples
    stderr = math.sqrt(p * (1.0 - p) / samples)
    return TailEstimate(
        probability=p,
        stderr=stderr,
        samples=samples,
        scales=n_scales,
        delta=delta,
        epsilon=epsilon,
    )
