"""Skorohod embedding of a planar simple random walk in Brownian motion.

The Brownian path B has variance parameter 1/2 per component; the
embedding works with its standard-clock version Bs(t) = B(2t) (every
second grid sample), whose unit-crossing times have mean one.  Each
component is embedded separately through the crossing times

    eta_{k+1} = inf{t >= eta_k : |Bs(t) - level_k| = 1},

with levels snapped to exact +-1 increments, and an independent +-1
walk W interleaves the two one-dimensional walks through
R_k = (W_k + k)/2, giving the planar walk S_k = (S1(R_k), S2(k - R_k)).

Crossings are detected on the dt grid with a Brownian-bridge correction:
between grid points the bridge from a to b crosses the level above with
probability exp(-2(1-a)(1-b)/dt), sampled with an auxiliary uniform
keyed by the grid index.  This removes the O(sqrt(dt)) bias of naive
threshold detection, so the measured mean crossing time is 1 up to
Monte Carlo noise.

The deviation of a coupled pair is sup over grid times t <= N/2 of
|Bs(t) - S(floor(2t))|; its median grows like N^(1/4).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit, uint32, uint64

from .fit import FitResult, loglog_fit
from .rng import RandomStream, philox_block

MAX_GRID_SAMPLES = 10**8


@dataclass(frozen=True)
class BrownianPath:
    """Grid discretization of planar Brownian motion, variance 1/2."""

    dt: float
    samples: np.ndarray  # (2, n + 1); increments are N(0, dt/2) per component

    @property
    def duration(self) -> float:
        return (self.samples.shape[1] - 1) * self.dt


@dataclass(frozen=True)
class EmbeddingRecord:
    eta_times: tuple  # per component, standard-clock crossing times (increasing)
    w_walk: np.ndarray  # auxiliary +-1 partial sums W_k, k = 0..N
    interleaver: np.ndarray  # R_k = (W_k + k)/2
    walk: np.ndarray  # (N + 1, 2) int64 embedded lattice walk
    deviation: float
    dt: float


def sample_bm(duration: float, dt: float, stream: RandomStream) -> BrownianPath:
    """Gaussian-increment discretization of variance-1/2 Brownian motion."""
    if dt <= 0 or dt > 1e-2:
        raise ValueError("dt must lie in (0, 1e-2]")
    if duration < 0:
        raise ValueError("duration must be nonnegative")
    n = int(round(duration / dt))
    if n > MAX_GRID_SAMPLES:
        raise ValueError(f"duration/dt = {n} exceeds the {MAX_GRID_SAMPLES} budget")
    out = np.empty((2, n + 1))
    scale = math.sqrt(dt / 2.0)
    for comp in range(2):
        out[comp, 0] = 0.0
        if n:
            np.cumsum(stream.substream(comp).normals(n) * scale, out=out[comp, 1:])
    return BrownianPath(dt=float(dt), samples=out)


@njit(cache=True, fastmath=True)
def _detect_crossings(bt, dt, k0, k1, c2, c3, out_idx, out_sign):
    """Bridge-corrected unit crossings of a standard-clock component.

    Returns the number of crossings found (capped at out_idx size).
    Auxiliary uniforms come from bank 1 with block = grid index, so the
    result is a pure function of (path, seed, stream id).
    """
    cap = out_idx.shape[0]
    inv = 1.0 / 4294967296.0
    gate = 1.0 - math.sqrt(13.8 * dt)  # bridge prob < 1e-6 beyond the gate
    anchor = bt[0]
    cnt = 0
    for j in range(1, bt.shape[0]):
        if cnt >= cap:
            return cnt
        a = bt[j - 1] - anchor
        b = bt[j] - anchor
        crossed = 0
        if b >= 1.0:
            crossed = 1
        elif b <= -1.0:
            crossed = -1
        elif a > gate or b > gate or a < -gate or b < -gate:
            x0, x1, x2, x3 = philox_block(
                uint32(uint64(j)), uint32(1), c2, c3, k0, k1
            )
            u = (np.float64(x0) + 0.5) * inv
            p_up = math.exp(-2.0 * (1.0 - a) * (1.0 - b) / dt)
            p_dn = math.exp(-2.0 * (1.0 + a) * (1.0 + b) / dt)
            if u < p_up:
                crossed = 1
            elif u < p_up + p_dn:
                crossed = -1
        while crossed != 0:
            anchor += crossed
            out_idx[cnt] = j
            out_sign[cnt] = crossed
            cnt += 1
            if cnt >= cap:
                return cnt
            off = bt[j] - anchor
            if off >= 1.0:
                crossed = 1
            elif off <= -1.0:
                crossed = -1
            else:
                crossed = 0
    return cnt


@njit(cache=True, fastmath=True)
def _max_deviation(bt1, bt2, dt, w1, w2, rk, n_steps):
    """sup over grid times t <= n_steps/2 of |Bs(t) - S(floor(2t))|."""
    jmax = int(math.floor(0.5 * n_steps / dt))
    if jmax > bt1.shape[0] - 1:
        jmax = bt1.shape[0] - 1
    best = 0.0
    for j in range(jmax + 1):
        k = int(math.floor(2.0 * j * dt))
        if k > n_steps:
            k = n_steps
        r = rk[k]
        d1 = bt1[j] - w1[r]
        d2 = bt2[j] - w2[k - r]
        d = d1 * d1 + d2 * d2
        if d > best:
            best = d
    return math.sqrt(best)


def skorohod_embed(bm: BrownianPath, n_steps: int, stream: RandomStream) -> EmbeddingRecord:
    """Embed an n_steps planar walk in bm; raises if bm is too short."""
    if n_steps < 1:
        raise ValueError("need at least one step")
    dt = bm.dt
    bt = bm.samples[:, ::2]  # standard-clock path, spacing dt
    if (bt.shape[1] - 1) * dt < 0.5 * n_steps:
        raise ValueError(
            f"path duration {bm.duration:g} too short; need at least {float(n_steps):g} "
            "(variance-1/2 clock) to cover the deviation window"
        )

    # auxiliary walk W: bit b_k = 1 routes step k to component 1
    bits = (stream.substream(0).words(n_steps) & 1).astype(np.int64)
    rk = np.zeros(n_steps + 1, dtype=np.int64)
    np.cumsum(bits, out=rk[1:])
    ks = np.arange(n_steps + 1)
    wk = 2 * rk - ks
    need = (int(rk[-1]), int(n_steps - rk[-1]))

    idx = [np.empty(need[c] + 1, dtype=np.int64) for c in range(2)]
    sign = [np.empty(need[c] + 1, dtype=np.int64) for c in range(2)]
    eta = []
    levels = []
    for c in range(2):
        sub = stream.substream(1 + c)
        k0 = uint32(np.uint64(sub.seed) >> np.uint64(32))
        k1 = uint32(np.uint64(sub.seed))
        c2 = uint32(np.uint64(sub.stream_id))
        c3 = uint32(np.uint64(sub.stream_id) >> np.uint64(32))
        cnt = _detect_crossings(bt[c], dt, k0, k1, c2, c3, idx[c], sign[c])
        if cnt < need[c]:
            per = (idx[c][cnt - 1] * dt / cnt) if cnt > 10 else 1.0
            req = 2.0 * per * (need[c] + 4.0 * math.sqrt(need[c]) + 16.0)
            raise ValueError(
                f"component {c + 1} produced {cnt} crossings, need {need[c]}; "
                f"resample with duration >= {max(req, float(n_steps)):.0f}"
            )
        eta.append(idx[c][: need[c]].astype(np.float64) * dt)
        lv = np.zeros(need[c] + 1, dtype=np.int64)
        np.cumsum(sign[c][: need[c]], out=lv[1:])
        levels.append(lv)

    walk = np.stack([levels[0][rk], levels[1][ks - rk]], axis=1)
    dev = _max_deviation(
        np.ascontiguousarray(bt[0]), np.ascontiguousarray(bt[1]),
        dt, levels[0], levels[1], rk, n_steps,
    )
    return EmbeddingRecord(
        eta_times=(eta[0], eta[1]),
        w_walk=wk,
        interleaver=rk,
        walk=walk,
        deviation=float(dev),
        dt=dt,
    )


@njit(cache=True, fastmath=True)
def _crossing_time_stream(seed, stream_id, dt, n_cross):
    """Streaming crossing-time statistics: no path storage.

    Generates standard-clock increments N(0, dt) inline (Box-Muller on
    bank-0 words, four normals per block) and detects bridge-corrected
    crossings exactly as `_detect_crossings`.  Returns (count, sum of
    crossing times, sum of squares).
    """
    k0 = uint32(uint64(seed) >> uint64(32))
    k1 = uint32(uint64(seed))
    c2 = uint32(uint64(stream_id))
    c3 = uint32(uint64(stream_id) >> uint64(32))
    inv = 1.0 / 4294967296.0
    sigma = math.sqrt(dt)
    gate = 1.0 - math.sqrt(13.8 * dt)

    pos = 0.0
    anchor = 0.0
    cnt = 0
    s1 = 0.0
    s2 = 0.0
    last = uint64(0)
    j = uint64(0)
    blk = uint64(0)
    spare = 0.0
    have_spare = False
    while cnt < n_cross:
        # polar (Marsaglia) normals, two uniform pairs per Philox block
        if have_spare:
            z = spare
            have_spare = False
        else:
            while True:
                x0, x1, x2, x3 = philox_block(uint32(blk), uint32(0), c2, c3, k0, k1)
                blk += uint64(1)
                u = 2.0 * (np.float64(x0) + 0.5) * inv - 1.0
                v = 2.0 * (np.float64(x1) + 0.5) * inv - 1.0
                ss = u * u + v * v
                if 0.0 < ss < 1.0:
                    break
                u = 2.0 * (np.float64(x2) + 0.5) * inv - 1.0
                v = 2.0 * (np.float64(x3) + 0.5) * inv - 1.0
                ss = u * u + v * v
                if 0.0 < ss < 1.0:
                    break
            f = sigma * math.sqrt(-2.0 * math.log(ss) / ss)
            z = u * f
            spare = v * f
            have_spare = True
        j += uint64(1)
        a = pos - anchor
        pos += z
        b = pos - anchor
        crossed = 0
        if b >= 1.0:
            crossed = 1
        elif b <= -1.0:
            crossed = -1
        elif a > gate or b > gate or a < -gate or b < -gate:
            y0, y1, y2, y3 = philox_block(uint32(j), uint32(1), c2, c3, k0, k1)
            u = (np.float64(y0) + 0.5) * inv
            p_up = math.exp(-2.0 * (1.0 - a) * (1.0 - b) / dt)
            p_dn = math.exp(-2.0 * (1.0 + a) * (1.0 + b) / dt)
            if u < p_up:
                crossed = 1
            elif u < p_up + p_dn:
                crossed = -1
        while crossed != 0 and cnt < n_cross:
            anchor += crossed
            eta = np.float64(j - last) * dt
            last = j
            s1 += eta
            s2 += eta * eta
            cnt += 1
            off = pos - anchor
            if off >= 1.0:
                crossed = 1
            elif off <= -1.0:
                crossed = -1
            else:
                crossed = 0
        if cnt >= n_cross:
            break
    return cnt, s1, s2


@dataclass(frozen=True)
class CrossingTimeStats:
    mean: float
    stderr: float
    variance: float
    crossings: int
    dt: float


def crossing_time_stats(crossings: int, dt: float, stream: RandomStream) -> CrossingTimeStats:
    """Mean unit-crossing time over a long streamed path (expected value 1)."""
    if crossings < 2:
        raise ValueError("need at least 2 crossings")
    if dt <= 0 or dt > 1e-2:
        raise ValueError("dt must lie in (0, 1e-2]")
    cnt, s1, s2 = _crossing_time_stream(
        np.uint64(stream.seed), np.uint64(stream.stream_id), float(dt), crossings
    )
    mean = s1 / cnt
    var = max(s2 / cnt - mean * mean, 0.0) * cnt / (cnt - 1)
    return CrossingTimeStats(
        mean=mean,
        stderr=math.sqrt(var / cnt),
        variance=var,
        crossings=cnt,
        dt=float(dt),
    )


def deviation_scaling(
    horizons, replications: int, dt: float, stream: RandomStream
) -> FitResult:
    """Median coupling deviation per horizon, fitted on log-log axes."""
    horizons = sorted(int(n) for n in horizons)
    if len(horizons) < 2:
        raise ValueError("need at least 2 horizons")
    if replications < 1:
        raise ValueError("need at least one replication")
    points = []
    for n in horizons:
        devs = []
        for rep in range(replications):
            sub = stream.substream(n, rep)
            duration = 1.15 * n + 16.0 * math.sqrt(n) + 50.0
            for _ in range(6):
                bm = sample_bm(duration, dt, sub.substream(0))
                try:
                    record = skorohod_embed(bm, n, sub.substream(1))
                    break
                except ValueError:
                    duration *= 1.4
            else:
                raise RuntimeError(f"embedding kept failing at horizon {n}")
            devs.append(record.deviation)
        points.append((n, float(np.median(devs))))
    return loglog_fit(points)
