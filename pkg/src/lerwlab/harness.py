"""Exponent-estimation experiments.

Each experiment draws per-sample randomness from a stream derived as
substream(experiment id, radius, sample index), so the estimate is a
pure function of (parameters, seed) no matter how samples are chunked
across workers.  Per-sample values are assembled into index order
before aggregation, and sums use compensated summation, so worker
count never changes the output.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .fit import FitResult, loglog_fit
from .harmonic import escape_probability, x_n_exact
from .looperase import LerwSampleConfig, loop_erase, sample_lerw_encoded
from .rng import RandomStream
from .walk import srw_until_exit

EXPERIMENT_IDS = {
    "growth": 1,
    "beurling": 2,
    "xn_scaling": 3,
    "tail": 4,
    "nonerasure": 5,
    "crookedness": 6,
    "extremal": 7,
    "coupling": 8,
    "lerw_sample": 9,
}


def resolve_workers(workers=None) -> int:
    """--workers flag, LERWLAB_WORKERS variable, machine cores, in that order."""
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get("LERWLAB_WORKERS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


@dataclass(frozen=True)
class ExperimentRecord:
    name: str
    parameters: dict
    points: list  # dicts with n, estimate, stderr, samples (and power where relevant)
    fit: FitResult | None
    runtime: float
    fits: dict = field(default_factory=dict)  # per-power fits where relevant


def _run_chunks(fn, common, total, workers):
    """Per-sample values fn(common, lo, hi) assembled in index order."""
    workers = resolve_workers(workers)
    if workers <= 1 or total < 2 * workers:
        return np.asarray(fn(common, 0, total))
    bounds = np.linspace(0, total, workers + 1).astype(int)
    out = np.empty(total)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futs = [
            (lo, hi, pool.submit(fn, common, int(lo), int(hi)))
            for lo, hi in zip(bounds[:-1], bounds[1:])
            if hi > lo
        ]
        for lo, hi, fut in futs:
            out[lo:hi] = fut.result()
    return out


def _mean_stderr(values) -> tuple[float, float]:
    values = np.asarray(values, dtype=float)
    n = len(values)
    mean = math.fsum(values) / n
    if n < 2:
        return mean, math.nan
    var = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var / n)


def _growth_chunk(common, lo, hi):
    stream, radius = common
    cfg = LerwSampleConfig(radius)
    _, lens = sample_lerw_encoded(cfg, stream, hi - lo, stream_offset=lo)
    return lens.astype(float)


def growth_exponent_experiment(
    radii, samples: int, stream: RandomStream, workers=None
) -> ExperimentRecord:
    """Mean number of LERW steps to reach dC_n, fitted against n."""
    radii = sorted(float(r) for r in radii)
    if len(radii) < 3:
        raise ValueError("need at least 3 radii")
    if samples < 2:
        raise ValueError("need at least 2 samples")
    t0 = time.perf_counter()
    points = []
    for r in radii:
        sub = stream.substream(EXPERIMENT_IDS["growth"], int(r))
        lens = _run_chunks(_growth_chunk, (sub, r), samples, workers)
        mean, stderr = _mean_stderr(lens)
        points.append(
            {"n": r, "estimate": mean, "stderr": stderr, "samples": samples}
        )
    fit = loglog_fit([(p["n"], p["estimate"]) for p in points])
    return ExperimentRecord(
        name="growth",
        parameters={"radii": radii, "samples": samples, "seed": stream.seed},
        points=points,
        fit=fit,
        runtime=time.perf_counter() - t0,
    )


def half_line_obstacle(radius: float) -> np.ndarray:
    """The positive-axis half line out through dC_radius."""
    k = int(math.ceil(radius))
    return np.stack([np.arange(k + 1), np.zeros(k + 1, dtype=np.int64)], axis=1)


def beurling_experiment(radii) -> ExperimentRecord:
    """Exact escape probabilities past the half line, fitted against n."""
    radii = sorted(float(r) for r in radii)
    if len(radii) < 3:
        raise ValueError("need at least 3 radii")
    t0 = time.perf_counter()
    points = []
    for r in radii:
        es = escape_probability(half_line_obstacle(r), r)
        points.append({"n": r, "estimate": es, "stderr": 0.0, "samples": 1})
    fit = loglog_fit([(p["n"], p["estimate"]) for p in points])
    return ExperimentRecord(
        name="beurling",
        parameters={"radii": radii},
        points=points,
        fit=fit,
        runtime=time.perf_counter() - t0,
    )


def _xn_chunk(common, lo, hi):
    stream, radius, drop_origin = common
    cfg = LerwSampleConfig(radius)
    out = np.empty(hi - lo)
    from .looperase import sample_lerw

    for i in range(lo, hi):
        path = sample_lerw(cfg, stream.substream(i))
        out[i - lo] = x_n_exact(path, radius, drop_origin=drop_origin)
    return out


def xn_scaling_experiment(
    radii,
    samples: int,
    stream: RandomStream,
    powers=(1, 3),
    workers=None,
    drop_origin: bool = False,
) -> ExperimentRecord:
    """Escape-probability moments E[X_n^k]; one exact solve per sample."""
    radii = sorted(float(r) for r in radii)
    if len(radii) < 3:
        raise ValueError("need at least 3 radii")
    if samples < 2:
        raise ValueError("need at least 2 samples")
    powers = tuple(int(k) for k in powers)
    if any(k not in (1, 2, 3) for k in powers):
        raise ValueError("powers must be drawn from {1, 2, 3}")
    t0 = time.perf_counter()
    points = []
    per_power_points: dict = {k: [] for k in powers}
    for r in radii:
        sub = stream.substream(EXPERIMENT_IDS["xn_scaling"], int(r))
        vals = _run_chunks(_xn_chunk, (sub, r, drop_origin), samples, workers)
        for k in powers:
            mean, stderr = _mean_stderr(vals**k)
            pt = {
                "n": r,
                "estimate": mean,
                "stderr": stderr,
                "samples": samples,
                "power": k,
            }
            points.append(pt)
            per_power_points[k].append(pt)
    fits = {
        k: loglog_fit([(p["n"], p["estimate"]) for p in pts])
        for k, pts in per_power_points.items()
    }
    return ExperimentRecord(
        name="xn_scaling",
        parameters={
            "radii": radii,
            "samples": samples,
            "powers": list(powers),
            "seed": stream.seed,
            "drop_origin": drop_origin,
        },
        points=points,
        fit=fits.get(1, fits[powers[0]]),
        runtime=time.perf_counter() - t0,
        fits=fits,
    )


@dataclass(frozen=True)
class ProbabilityEstimate:
    probability: float
    stderr: float
    samples: int
    parameters: dict


def tail_experiment(
    n: float, c: float, delta: float, samples: int, stream: RandomStream, workers=None
) -> ProbabilityEstimate:
    """Empirical P{X_n >= c * n^(-1/2 - delta)}."""
    if samples < 2:
        raise ValueError("need at least 2 samples")
    sub = stream.substream(EXPERIMENT_IDS["tail"], int(n))
    vals = _run_chunks(_xn_chunk, (sub, float(n), False), samples, workers)
    threshold = c * float(n) ** (-0.5 - delta)
    hits = int((vals >= threshold).sum())
    p = hits / samples
    return ProbabilityEstimate(
        probability=p,
        stderr=math.sqrt(p * (1.0 - p) / samples),
        samples=samples,
        parameters={"n": float(n), "c": c, "delta": delta, "threshold": threshold},
    )


def _nonerasure_chunk(common, lo, hi):
    stream, n, j = common
    out = np.empty(hi - lo)
    for i in range(lo, hi):
        sample = srw_until_exit(2.0 * n, (0, 0), stream.substream(i))
        path = sample.path
        sq = path[:, 0] ** 2 + path[:, 1] ** 2
        sigma_n = int(np.argmax(sq >= n * n))
        if j > sigma_n:
            out[i - lo] = 0.0
            continue
        erased = loop_erase(path[: j + 1])
        suffix = {(int(x), int(y)) for x, y in path[j + 1 :]}
        hit = any((int(x), int(y)) in suffix for x, y in erased)
        out[i - lo] = 0.0 if hit else 1.0
    return out


def nonerasure_experiment(
    n: int, j: int, samples: int, stream: RandomStream, workers=None
) -> ProbabilityEstimate:
    """Frequency of {j <= sigma_n and L(S[0,j]) avoids S[j+1, sigma_2n]}."""
    n = int(n)
    j = int(j)
    if not n * n <= j <= 2 * n * n:
        raise ValueError("j must lie in [n^2, 2 n^2]")
    if samples < 2:
        raise ValueError("need at least 2 samples")
    sub = stream.substream(EXPERIMENT_IDS["nonerasure"], n, j)
    vals = _run_chunks(_nonerasure_chunk, (sub, float(n), j), samples, workers)
    p = math.fsum(vals) / samples
    return ProbabilityEstimate(
        probability=p,
        stderr=math.sqrt(max(p * (1.0 - p), 0.0) / samples),
        samples=samples,
        parameters={"n": n, "j": j},
    )
