"""Simple random walk engine.

Steps are decoded two bits at a time from the Philox word stream (see
rng.py): 0 -> +e1, 1 -> -e1, 2 -> +e2, 3 -> -e2, sixteen steps per
32-bit word, lowest bits first.  A walk consumes words sequentially, so
the generated path depends only on (seed, stream_id) and not on any
internal chunking.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit, uint32, uint64

from .lattice import is_inside, is_nearest_neighbor_path
from .rng import RandomStream, philox_block

STEP_CAP = 10**10


class StepCapExceeded(RuntimeError):
    """The walk failed to terminate within the hard step cap.

    Recurrence of the planar walk makes this unreachable for a working
    generator; hitting it indicates an implementation fault.
    """


@dataclass(frozen=True)
class WalkSample:
    path: np.ndarray  # (N, 2) int64, nearest-neighbor
    exit_index: int
    target_radius: float


@njit(cache=True)
def _walk_until_exit(seed, stream_id, sx, sy, r2, out, step_cap):
    """Fill `out` with the walk until first squared-norm >= r2.

    Returns (number of points written, finished flag, words consumed).
    If `out` fills up before exit, caller must retry with a larger
    buffer; words are re-generated from the start so the path is a pure
    function of the stream.
    """
    k0 = uint32(uint64(seed) >> uint64(32))
    k1 = uint32(uint64(seed))
    c2 = uint32(uint64(stream_id))
    c3 = uint32(uint64(stream_id) >> uint64(32))
    cap = out.shape[0]
    x = sx
    y = sy
    out[0, 0] = x
    out[0, 1] = y
    n = 1
    if np.float64(x * x + y * y) >= r2:
        return n, True, uint64(0)
    blk = uint64(0)
    steps = uint64(0)
    while True:
        x0, x1, x2, x3 = philox_block(uint32(blk), uint32(0), c2, c3, k0, k1)
        blk += uint64(1)
        for wi in range(4):
            if wi == 0:
                w = x0
            elif wi == 1:
                w = x1
            elif wi == 2:
                w = x2
            else:
                w = x3
            for _ in range(16):
                b = w & uint32(3)
                w = w >> uint32(2)
                if b == uint32(0):
                    x += 1
                elif b == uint32(1):
                    x -= 1
                elif b == uint32(2):
                    y += 1
                else:
                    y -= 1
                if n >= cap:
                    return n, False, blk
                out[n, 0] = x
                out[n, 1] = y
                n += 1
                steps += uint64(1)
                if np.float64(x * x + y * y) >= r2:
                    return n, True, blk
                if steps >= step_cap:
                    return n, True, uint64(0xFFFFFFFFFFFFFFFF)


@njit(cache=True)
def _walk_fixed(seed, stream_id, sx, sy, t, out):
    k0 = uint32(uint64(seed) >> uint64(32))
    k1 = uint32(uint64(seed))
    c2 = uint32(uint64(stream_id))
    c3 = uint32(uint64(stream_id) >> uint64(32))
    x = sx
    y = sy
    out[0, 0] = x
    out[0, 1] = y
    n = 1
    blk = uint64(0)
    while n <= t:
        x0, x1, x2, x3 = philox_block(uint32(blk), uint32(0), c2, c3, k0, k1)
        blk += uint64(1)
        for wi in range(4):
            if wi == 0:
                w = x0
            elif wi == 1:
                w = x1
            elif wi == 2:
                w = x2
            else:
                w = x3
            for _ in range(16):
                if n > t:
                    return
                b = w & uint32(3)
                w = w >> uint32(2)
                if b == uint32(0):
                    x += 1
                elif b == uint32(1):
                    x -= 1
                elif b == uint32(2):
                    y += 1
                else:
                    y -= 1
                out[n, 0] = x
                out[n, 1] = y
                n += 1


def srw_until_exit(radius: float, start, stream: RandomStream) -> WalkSample:
    """Run a simple random walk from `start` to its first exit of C_radius."""
    start = (int(start[0]), int(start[1]))
    if not is_inside(start, radius):
        raise ValueError(f"start {start} not inside C_{radius}")
    r2 = float(radius) * float(radius)
    # expected exit time from the origin is about radius^2; grow on demand
    cap = max(64, int(8 * r2) + 64)
    while True:
        out = np.empty((cap, 2), dtype=np.int64)
        n, done, blk = _walk_until_exit(
            np.uint64(stream.seed), np.uint64(stream.stream_id), start[0], start[1], r2, out, STEP_CAP
        )
        if done:
            if blk == 0xFFFFFFFFFFFFFFFF:
                raise StepCapExceeded(f"no exit of C_{radius} within {STEP_CAP} steps")
            return WalkSample(path=out[:n].copy(), exit_index=n - 1, target_radius=float(radius))
        cap *= 4


def srw_fixed_steps(t: int, start, stream: RandomStream) -> np.ndarray:
    """A walk of exactly t steps (t+1 points) from `start`."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    out = np.empty((t + 1, 2), dtype=np.int64)
    _walk_fixed(np.uint64(stream.seed), np.uint64(stream.stream_id), int(start[0]), int(start[1]), t, out)
    return out


def validate_path(path: np.ndarray) -> np.ndarray:
    path = np.asarray(path, dtype=np.int64)
    if not is_nearest_neighbor_path(path):
        raise ValueError("not a nearest-neighbor lattice path")
    return path
