"""Chronological loop erasure and LERW samplers.

`loop_erase` removes loops in time order: whenever the walk revisits a
point already on the growing self-avoiding path, the cycle since the
first visit is discarded.  This single pass is equivalent to the
last-visit recursion that defines the erased path (the equivalence is
exercised against a direct transcription of that recursion in the test
suite) and runs in O(length).

LERW samples toward an inner radius n are drawn by walking to the exit
of C_m (m = 2n by default), erasing loops, and truncating the erased
path at its first point of norm >= n.  Exact small-instance
distributions -- the Laplacian-walk enumeration and the fixed-time
enumeration over all 4^j walks -- serve as oracles for the sampler.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit, uint32, uint64

from .lattice import UNIT_STEPS, is_inside
from .rng import RandomStream, philox_block
from .walk import STEP_CAP, _walk_until_exit, srw_until_exit, validate_path

MAX_EXACT_RADIUS = 3
MAX_ENUM_TIME = 8


@njit(cache=True)
def _erase_into(pts, n, xmin, ymin, height, visited, out):
    """Loop-erase pts[:n] using `visited` (flat, -1-filled) as scratch.

    Returns the erased length; leaves `visited` reset to -1 on exit.
    """
    top = 0
    for i in range(n):
        x = pts[i, 0]
        y = pts[i, 1]
        key = (x - xmin) * height + (y - ymin)
        j = visited[key]
        if j >= 0:
            for k in range(j + 1, top):
                visited[(out[k, 0] - xmin) * height + (out[k, 1] - ymin)] = -1
            top = j + 1
        else:
            visited[key] = top
            out[top, 0] = x
            out[top, 1] = y
            top += 1
    for k in range(top):
        visited[(out[k, 0] - xmin) * height + (out[k, 1] - ymin)] = -1
    return top


def loop_erase(path: np.ndarray) -> np.ndarray:
    """Chronologically loop-erased version of a nearest-neighbor path."""
    path = validate_path(path)
    xmin = int(path[:, 0].min())
    ymin = int(path[:, 1].min())
    width = int(path[:, 0].max()) - xmin + 1
    height = int(path[:, 1].max()) - ymin + 1
    visited = np.full(width * height, -1, dtype=np.int64)
    out = np.empty_like(path)
    top = _erase_into(path, path.shape[0], xmin, ymin, height, visited, out)
    return out[:top].copy()


def is_self_avoiding(path: np.ndarray) -> bool:
    pts = {tuple(p) for p in np.asarray(path)}
    return len(pts) == len(path)


def truncate_at_radius(path: np.ndarray, radius: float) -> np.ndarray:
    """Initial segment of `path` through its first point of norm >= radius."""
    path = np.asarray(path, dtype=np.int64)
    sq = path[:, 0] ** 2 + path[:, 1] ** 2
    hits = sq >= radius * radius
    if not hits.any():
        raise ValueError(f"path never reaches norm {radius}")
    return path[: int(np.argmax(hits)) + 1].copy()


@dataclass(frozen=True)
class LerwSampleConfig:
    inner_radius: float
    outer_radius: float = 0.0  # 0 means "use 2 * inner_radius"

    def __post_init__(self):
        if self.inner_radius <= 0:
            raise ValueError("inner_radius must be positive")
        outer = self.outer_radius or 2.0 * self.inner_radius
        if outer < 2.0 * self.inner_radius:
            raise ValueError("outer_radius must be at least 2 * inner_radius")
        object.__setattr__(self, "outer_radius", outer)


def sample_lerw(cfg: LerwSampleConfig, stream: RandomStream) -> np.ndarray:
    """One LERW sample in Lambda_n under the finite-outer-radius measure."""
    sample = srw_until_exit(cfg.outer_radius, (0, 0), stream)
    erased = loop_erase(sample.path)
    return truncate_at_radius(erased, cfg.inner_radius)


@njit(cache=True)
def _lerw_batch(seed, stream_ids, inner_r2, outer_r2, walk_buf, erase_buf, visited, enc_out, len_out):
    """Batched LERW sampler returning encoded truncated paths.

    Encoding: bits 0-4 hold the number of steps l (must be < 29); bits
    5+2j hold step j (same 2-bit step code as the walk generator).
    Encodes -1 when a path is too long to encode.
    """
    height = visited.shape[1]
    half = (height - 1) // 2
    flat = visited.reshape(-1)
    for s in range(stream_ids.shape[0]):
        n, done, blk = _walk_until_exit(
            seed, stream_ids[s], 0, 0, outer_r2, walk_buf, STEP_CAP
        )
        # caller sizes walk_buf generously; treat overflow as a fault
        if not done:
            enc_out[s] = -2
            len_out[s] = 0
            continue
        top = _erase_into(walk_buf, n, -half, -half, height, flat, erase_buf)
        # truncate at first point with squared norm >= inner_r2
        l = top
        for i in range(top):
            if np.float64(erase_buf[i, 0] ** 2 + erase_buf[i, 1] ** 2) >= inner_r2:
                l = i + 1
                break
        len_out[s] = l - 1
        if l - 1 >= 29:
            enc_out[s] = -1
            continue
        code = uint64(l - 1)
        for i in range(1, l):
            dx = erase_buf[i, 0] - erase_buf[i - 1, 0]
            dy = erase_buf[i, 1] - erase_buf[i - 1, 1]
            if dx == 1:
                b = uint64(0)
            elif dx == -1:
                b = uint64(1)
            elif dy == 1:
                b = uint64(2)
            else:
                b = uint64(3)
            code |= b << uint64(5 + 2 * (i - 1))
        enc_out[s] = np.int64(code)


def sample_lerw_encoded(cfg: LerwSampleConfig, stream: RandomStream, samples: int,
                        stream_offset: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Draw `samples` LERW paths, returning (encoded paths, step counts).

    Sample i uses stream.substream(stream_offset + i), so any contiguous
    or distributed batching reproduces the same draws.
    """
    ids = np.array(
        [stream.substream(stream_offset + i).stream_id for i in range(samples)],
        dtype=np.uint64,
    )
    m = cfg.outer_radius
    cap = max(1024, int(32 * m * m) + 64)
    walk_buf = np.empty((cap, 2), dtype=np.int64)
    erase_buf = np.empty_like(walk_buf)
    half = int(np.ceil(m)) + 2
    visited = np.full((2 * half + 1, 2 * half + 1), -1, dtype=np.int64)
    enc = np.empty(samples, dtype=np.int64)
    lens = np.empty(samples, dtype=np.int64)
    _lerw_batch(
        np.uint64(stream.seed), ids,
        float(cfg.inner_radius) ** 2, float(cfg.outer_radius) ** 2,
        walk_buf, erase_buf, visited, enc, lens,
    )
    # exceptionally long walks overflow the shared buffer; redo them
    # individually (same stream, so the same draw) with a growing buffer
    for i in np.nonzero(enc == -2)[0]:
        path = sample_lerw(cfg, stream.substream(stream_offset + int(i)))
        lens[i] = path.shape[0] - 1
        enc[i] = encode_path(path) if path.shape[0] - 1 < 29 else -1
    return enc, lens


def decode_path(code: int) -> np.ndarray:
    """Inverse of the batched sampler's path encoding (origin-rooted)."""
    if code < 0:
        raise ValueError("path was not encodable")
    l = code & 31
    pts = np.zeros((l + 1, 2), dtype=np.int64)
    for i in range(l):
        b = (code >> (5 + 2 * i)) & 3
        pts[i + 1] = pts[i] + UNIT_STEPS[b]
    return pts


def encode_path(path: np.ndarray) -> int:
    path = np.asarray(path, dtype=np.int64)
    l = path.shape[0] - 1
    if l >= 29:
        raise ValueError("path too long to encode")
    code = l
    for i in range(1, l + 1):
        dx = int(path[i, 0] - path[i - 1, 0])
        dy = int(path[i, 1] - path[i - 1, 1])
        b = {(1, 0): 0, (-1, 0): 1, (0, 1): 2, (0, -1): 3}[(dx, dy)]
        code |= b << (5 + 2 * (i - 1))
    return code


def laplacian_step_distribution(path: np.ndarray, m: float) -> dict:
    """Next-step distribution of the Laplacian walk grown toward dC_m.

    Weights are the probabilities that a walk from each unit neighbor of
    the tip reaches dC_m without touching the current path; neighbors on
    the path get weight zero.
    """
    from .harmonic import avoidance_probability

    path = np.asarray(path, dtype=np.int64)
    tip = (int(path[-1, 0]), int(path[-1, 1]))
    if not is_inside(tip, m):
        raise ValueError("tip must lie inside C_m")
    weights = {}
    for dx, dy in UNIT_STEPS:
        x = (tip[0] + int(dx), tip[1] + int(dy))
        weights[x] = avoidance_probability(x, path, m)
    total = sum(weights.values())
    if total <= 0.0:
        raise ValueError("tip is enclosed by the path; no escaping neighbor")
    return {x: w / total for x, w in weights.items()}


def exact_lerw_distribution(cfg: LerwSampleConfig) -> dict:
    """Exact Lambda_n distribution of the Laplacian walk stopped at dC_n.

    Enumerates every self-avoiding growth history; feasible only for
    small inner radii (combinatorial explosion guard at n <= 3).
    """
    n = cfg.inner_radius
    if n > MAX_EXACT_RADIUS:
        raise ValueError(f"exact enumeration limited to inner radius <= {MAX_EXACT_RADIUS}")
    m = cfg.outer_radius
    dist: dict[tuple, float] = {}
    root = np.zeros((1, 2), dtype=np.int64)
    stack = [(root, 1.0)]
    while stack:
        path, prob = stack.pop()
        tip = (int(path[-1, 0]), int(path[-1, 1]))
        if not is_inside(tip, n):
            key = tuple(map(tuple, path))
            dist[key] = dist.get(key, 0.0) + prob
            continue
        step_probs = laplacian_step_distribution(path, m)
        for x, p in step_probs.items():
            if p > 0.0:
                nxt = np.vstack([path, np.array([x], dtype=np.int64)])
                stack.append((nxt, prob * p))
    return dist


def fixed_time_lerw_distribution(j: int) -> dict:
    """Distribution of the loop-erasure of a j-step walk, by enumeration."""
    if j > MAX_ENUM_TIME:
        raise ValueError(f"enumeration limited to j <= {MAX_ENUM_TIME}")
    if j < 0:
        raise ValueError("j must be nonnegative")
    p = 0.25 ** j
    dist: dict[tuple, float] = {}
    steps = [(1, 0), (-1, 0), (0, 1), (0, -1)]
    for code in range(4 ** j):
        pts = [(0, 0)]
        c = code
        for _ in range(j):
            dx, dy = steps[c & 3]
            c >>= 2
            pts.append((pts[-1][0] + dx, pts[-1][1] + dy))
        erased = _erase_tuples(pts)
        dist[tuple(erased)] = dist.get(tuple(erased), 0.0) + p
    return dist


def _erase_tuples(pts):
    idx = {pts[0]: 0}
    out = [pts[0]]
    for q in pts[1:]:
        if q in idx:
            k = idx[q]
            for r in out[k + 1 :]:
                del idx[r]
            del out[k + 1 :]
        else:
            idx[q] = len(out)
            out.append(q)
    return out
