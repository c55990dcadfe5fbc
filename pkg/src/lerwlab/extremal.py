"""Discrete extremal length on grid-discretized planar domains.

A domain is a set of h-grid vertices with unit conductance on every
grid edge joining two of them.  The extremal length (modulus) of the
family of curves connecting two vertex sets V1, V2 is computed through
its electrical dual: solve the discrete potential u = 0 on V1, 1 on V2,
harmonic (free / Neumann) elsewhere, and take the reciprocal of the
Dirichlet energy sum_edges (du)^2.  For the model shapes this converges
to the continuum modulus as h -> 0: a/b for the a-by-b rectangle,
n/(2 pi) for the annulus between radii e^-n and 1.

The module also provides the serial (reversed-triangle) rule across
concentric shells, the Pfluger comparison of harmonic measure with
exp(-pi * modulus), and a regression of log escape probability against
path crookedness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.sparse.csgraph import connected_components

from .fit import OlsResult, ols
from .harmonic import RESIDUAL_TOL, SolverError, escape_probability
from .crookedness import crookedness_counts, scale_crossings
from .looperase import LerwSampleConfig, sample_lerw
from .rng import RandomStream


@dataclass(frozen=True)
class GridDomain:
    """Vertex set on the h-grid with implied unit-conductance edges.

    Masks are indexed as [i, j] for the vertex at origin + (i*h, j*h);
    edges join 4-adjacent included vertices.
    """

    mesh: float
    origin: tuple  # planar coordinates of grid index (0, 0)
    mask: np.ndarray  # bool, included vertices
    v1: np.ndarray  # bool, subset of mask
    v2: np.ndarray  # bool, subset of mask
    shape: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if ((self.v1 & ~self.mask) | (self.v2 & ~self.mask)).any():
            raise ValueError("V1 and V2 must be subsets of the vertex set")

    @property
    def vertex_count(self) -> int:
        return int(self.mask.sum())

    def vertices(self) -> np.ndarray:
        """Planar coordinates of all vertices, one row each."""
        ii, jj = np.nonzero(self.mask)
        return np.stack(
            [self.origin[0] + ii * self.mesh, self.origin[1] + jj * self.mesh], axis=1
        )


@dataclass(frozen=True)
class ModulusResult:
    extremal_length: float  # +inf when V1 and V2 are disconnected
    energy: float
    mesh: float
    connected: bool = True


def _neighbor_shifts():
    return ((1, 0), (-1, 0), (0, 1), (0, -1))


def _shifted(arr, di, dj, fill=False):
    out = np.full_like(arr, fill)
    src_i = slice(max(di, 0), arr.shape[0] + min(di, 0))
    dst_i = slice(max(-di, 0), arr.shape[0] + min(-di, 0))
    src_j = slice(max(dj, 0), arr.shape[1] + min(dj, 0))
    dst_j = slice(max(-dj, 0), arr.shape[1] + min(-dj, 0))
    out[dst_i, dst_j] = arr[src_i, src_j]
    return out


def _adjacency(mask: np.ndarray) -> sp.csr_matrix:
    idx = np.full(mask.shape, -1, dtype=np.int64)
    nv = int(mask.sum())
    idx[mask] = np.arange(nv)
    rows = []
    cols = []
    for di, dj in ((1, 0), (0, 1)):
        both = mask & _shifted(mask, di, dj)
        a = idx[both]
        b = idx[_shifted(both, -di, -dj)]
        rows.append(a)
        cols.append(b)
    r = np.concatenate(rows)
    c = np.concatenate(cols)
    data = np.ones(len(r))
    adj = sp.csr_matrix((data, (r, c)), shape=(nv, nv))
    return adj + adj.T


def _is_connected(mask, v1, v2) -> bool:
    adj = _adjacency(mask)
    _, labels = connected_components(adj, directed=False)
    idx = np.full(mask.shape, -1, dtype=np.int64)
    idx[mask] = np.arange(int(mask.sum()))
    l1 = set(labels[idx[v1]].tolist())
    l2 = set(labels[idx[v2]].tolist())
    return bool(l1 & l2)


def _modulus(mask, v1, v2, mesh) -> ModulusResult:
    if not v1.any() or not v2.any():
        raise ValueError("V1 and V2 must be non-empty")
    if (v1 & v2).any():
        raise ValueError("V1 and V2 overlap")
    if not _is_connected(mask, v1, v2):
        return ModulusResult(math.inf, 0.0, mesh, connected=False)

    values = np.zeros(mask.shape)
    values[v2] = 1.0
    free = mask & ~v1 & ~v2
    nf = int(free.sum())
    if nf > 0:
        idx = np.full(mask.shape, -1, dtype=np.int64)
        fi, fj = np.nonzero(free)
        idx[fi, fj] = np.arange(nf)
        rows = [np.arange(nf)]
        cols = [np.arange(nf)]
        diag = np.zeros(nf)
        rhs = np.zeros(nf)
        off_rows = []
        off_cols = []
        for di, dj in _neighbor_shifts():
            has = _shifted(mask, di, dj)[fi, fj]
            diag += has
            ni, nj = fi + di, fj + dj
            # clip to stay in-array; out-of-range implies has == False
            ni = np.clip(ni, 0, mask.shape[0] - 1)
            nj = np.clip(nj, 0, mask.shape[1] - 1)
            nidx = idx[ni, nj]
            linked = has & (nidx >= 0)
            off_rows.append(np.nonzero(linked)[0])
            off_cols.append(nidx[linked])
            clamped = has & (nidx < 0)
            rhs[clamped] += values[ni[clamped], nj[clamped]]
        r = np.concatenate(rows + off_rows)
        c = np.concatenate(cols + off_cols)
        data = np.concatenate([diag, -np.ones(len(r) - nf)])
        lap = sp.csr_matrix((data, (r, c)), shape=(nf, nf))
        sol, info = spla.cg(lap, rhs, rtol=1e-13, atol=1e-13, maxiter=40 * max(mask.shape))
        resid = np.abs(lap @ sol - rhs).max() if info == 0 else np.inf
        if resid > RESIDUAL_TOL:
            sol = spla.spsolve(lap.tocsc(), rhs)
            resid = np.abs(lap @ sol - rhs).max()
            if resid > RESIDUAL_TOL:
                raise SolverError(f"potential residual {resid:.2e} exceeds {RESIDUAL_TOL}")
        values[fi, fj] = sol

    energy = 0.0
    for di, dj in ((1, 0), (0, 1)):
        both = mask & _shifted(mask, di, dj)
        d = values[both] - values[_shifted(both, -di, -dj)]
        energy += float((d * d).sum())
    if energy <= 0.0:
        return ModulusResult(math.inf, 0.0, mesh, connected=False)
    return ModulusResult(1.0 / energy, energy, mesh)


def _ring_masks(origin, mesh, shape, inner_r, outer_r):
    """Annulus mask inner_r <= |p| <= outer_r with boundary-circle V sets."""
    ii, jj = np.mgrid[0 : shape[0], 0 : shape[1]]
    xs = origin[0] + ii * mesh
    ys = origin[1] + jj * mesh
    rr = np.hypot(xs, ys)
    mask = (rr >= inner_r) & (rr <= outer_r)
    too_in = rr < inner_r
    too_out = rr > outer_r
    near_in = np.zeros_like(mask)
    near_out = np.zeros_like(mask)
    for di, dj in _neighbor_shifts():
        near_in |= _shifted(too_in, di, dj)
        near_out |= _shifted(too_out, di, dj)
    return rr, mask, mask & near_in, mask & near_out


def _rasterize_polyline(points, origin, mesh, shape) -> np.ndarray:
    """Grid vertices within half a mesh of the polyline, as a mask."""
    hit = np.zeros(shape, dtype=bool)
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    for a, b in zip(pts[:-1], pts[1:]):
        n = max(2, int(np.hypot(*(b - a)) / (0.25 * mesh)) + 2)
        ts = np.linspace(0.0, 1.0, n)
        sx = a[0] + ts * (b[0] - a[0])
        sy = a[1] + ts * (b[1] - a[1])
        gi = np.rint((sx - origin[0]) / mesh).astype(np.int64)
        gj = np.rint((sy - origin[1]) / mesh).astype(np.int64)
        keep = (gi >= 0) & (gi < shape[0]) & (gj >= 0) & (gj < shape[1])
        hit[gi[keep], gj[keep]] = True
    return hit


def build_domain(shape: str, mesh: float, **params) -> GridDomain:
    """Grid discretizations of the model domains.

    Shapes: rectangle(a, b); split_annulus(n) between radii e^-n and 1,
    cut along the positive real axis; slit_disk(r, slit) the full
    annulus between e^-r and 1 minus a polyline slit; log_strip(r, arc)
    the rectangle [0, r] x [0, 2 pi] with V2 the arc interval on the
    u = 0 side (log-coordinate image of the disk with a boundary arc).
    """
    if mesh <= 0:
        raise ValueError("mesh must be positive")

    if shape == "rectangle":
        a, b = float(params["a"]), float(params["b"])
        if a <= 0 or b <= 0:
            raise ValueError("rectangle sides must be positive")
        if mesh > min(a, b) / 8:
            raise ValueError("mesh too coarse for rectangle dimensions")
        ni = int(round(a / mesh))
        nj = int(round(b / mesh))
        mask = np.ones((ni + 1, nj + 1), dtype=bool)
        v1 = np.zeros_like(mask)
        v2 = np.zeros_like(mask)
        v1[0, :] = True
        v2[ni, :] = True
        return GridDomain(mesh, (0.0, 0.0), mask, v1, v2, shape, dict(params))

    if shape == "split_annulus":
        n = int(params["n"])
        if n < 1:
            raise ValueError("annulus scale n must be >= 1")
        inner = math.exp(-n)
        if mesh > inner / 8:
            raise ValueError("mesh too coarse for inner radius")
        half = int(math.ceil(1.0 / mesh)) + 1
        side = 2 * half + 1
        origin = (-half * mesh, -half * mesh)
        rr, mask, v1, v2 = _ring_masks(origin, mesh, (side, side), inner, 1.0)
        ii, jj = np.mgrid[0:side, 0:side]
        xs = origin[0] + ii * mesh
        on_cut = (jj == half) & (xs > inner) & (xs < 1.0) & ~v1 & ~v2
        mask = mask & ~on_cut
        return GridDomain(mesh, origin, mask, v1 & mask, v2 & mask, shape, dict(params))

    if shape == "slit_disk":
        r = int(params.get("r", 1))
        if not 1 <= r <= 8:
            raise ValueError("inner scale r must be in [1, 8]")
        inner = math.exp(-r)
        if mesh > inner / 8:
            raise ValueError("mesh too coarse for inner radius")
        half = int(math.ceil(1.0 / mesh)) + 1
        side = 2 * half + 1
        origin = (-half * mesh, -half * mesh)
        rr, mask, v1, v2 = _ring_masks(origin, mesh, (side, side), inner, 1.0)
        slit = params.get("slit")
        if slit is not None:
            cut = _rasterize_polyline(slit, origin, mesh, (side, side))
            mask = mask & ~cut
        return GridDomain(mesh, origin, mask, v1 & mask, v2 & mask, shape, dict(params))

    if shape == "log_strip":
        r = float(params["r"])
        lo, hi = params["arc"]
        if r <= 0:
            raise ValueError("strip width must be positive")
        if not 0.0 <= lo < hi <= 2.0 * math.pi:
            raise ValueError("arc must be a nonempty subinterval of [0, 2 pi]")
        if mesh > min(r, hi - lo) / 8:
            raise ValueError("mesh too coarse for strip features")
        ni = int(round(r / mesh))
        nj = int(round(2.0 * math.pi / mesh))
        mask = np.ones((ni + 1, nj + 1), dtype=bool)
        v1 = np.zeros_like(mask)
        v2 = np.zeros_like(mask)
        v1[ni, :] = True
        vs = np.arange(nj + 1) * mesh
        v2[0, (vs >= lo) & (vs <= hi)] = True
        return GridDomain(mesh, (0.0, 0.0), mask, v1, v2, shape, dict(params))

    raise ValueError(f"unknown shape {shape!r}")


def extremal_length(domain: GridDomain) -> ModulusResult:
    """Modulus of the V1-to-V2 connecting family; +inf if disconnected."""
    return _modulus(domain.mask, domain.v1, domain.v2, domain.mesh)


@dataclass(frozen=True)
class SerialRuleReport:
    left: float  # modulus across the full shell range
    terms: list  # per-consecutive-pair moduli
    slack: float  # left - sum(terms); superadditivity predicts >= 0
    relative_slack: float


def serial_rule_check(domain: GridDomain, shells) -> SerialRuleReport:
    """Superadditivity of the modulus across concentric shells e^-j.

    `shells` lists scale indices j in increasing order; the modulus from
    the innermost circle to the outermost is compared with the sum over
    consecutive shell pairs, all on the domain's own grid.
    """
    shells = sorted(int(j) for j in shells)
    if len(shells) < 1:
        raise ValueError("need at least one shell")
    ii, jj = np.mgrid[0 : domain.mask.shape[0], 0 : domain.mask.shape[1]]
    xs = domain.origin[0] + ii * domain.mesh
    ys = domain.origin[1] + jj * domain.mesh
    rr = np.hypot(xs, ys)

    def pair_modulus(j_in, j_out):
        # half-mesh tolerance keeps the electrodes non-empty when a
        # shell coincides with the domain's own boundary circle
        r_in = math.exp(-j_in) + 0.5 * domain.mesh
        r_out = math.exp(-j_out) - 0.5 * domain.mesh
        inner = domain.mask & (rr <= r_in)
        outer = domain.mask & (rr >= r_out)
        return _modulus(domain.mask, inner, outer & ~inner, domain.mesh)

    jmax, jmin = shells[-1], shells[0]
    if len(shells) == 1:
        return SerialRuleReport(0.0, [], 0.0, 0.0)
    left = pair_modulus(jmax, jmin).extremal_length
    terms = [
        pair_modulus(shells[k], shells[k - 1]).extremal_length
        for k in range(len(shells) - 1, 0, -1)
    ]
    if math.isinf(left):
        return SerialRuleReport(left, terms, math.inf, math.inf)
    slack = left - sum(terms)
    return SerialRuleReport(left, terms, slack, slack / left if left else 0.0)


@dataclass(frozen=True)
class PflugerReport:
    harmonic_measure: float
    modulus: float  # Delta_1 of the disk between circle e^-r and the arc
    window: float  # log(hm) + pi * modulus; bounded across instances
    arc_length: float
    r: int
    mesh: float


def pfluger_check(arc_length: float, r: int, mesh: float) -> PflugerReport:
    """Compare harmonic measure of a boundary arc with exp(-pi * modulus).

    The harmonic measure of the arc is computed on the disk grid and
    averaged over the circle of radius e^-r; the modulus is computed in
    log coordinates on the strip [0, r] x [0, 2 pi], where the arc sits
    centered on the far side of the cut.
    """
    if not 0.0 < arc_length <= 2.0 * math.pi:
        raise ValueError("arc length must lie in (0, 2 pi]")
    if not 1 <= r <= 5:
        raise ValueError("r must be an integer in [1, 5]")

    # Dirichlet solve on the unit-disk grid: 1 on the arc, 0 elsewhere
    half = int(math.ceil(1.0 / mesh)) + 1
    side = 2 * half + 1
    origin = (-half * mesh, -half * mesh)
    ii, jj = np.mgrid[0:side, 0:side]
    xs = origin[0] + ii * mesh
    ys = origin[1] + jj * mesh
    rr = np.hypot(xs, ys)
    inside = rr < 1.0
    outside = ~inside
    bd = np.zeros_like(inside)
    for di, dj in _neighbor_shifts():
        bd |= inside & _shifted(outside, di, dj)
    # boundary ring values: arc centered at angle pi
    theta = np.mod(np.arctan2(ys, xs), 2.0 * math.pi)
    on_arc = np.abs(theta - math.pi) <= arc_length / 2.0
    mask = inside
    v2 = mask & bd & on_arc
    v1 = mask & bd & ~on_arc
    if not v2.any():
        raise ValueError("mesh too coarse to resolve the arc")
    values = np.zeros(mask.shape)
    values[v2] = 1.0
    res = _solve_dirichlet_values(mask, v1, v2, values)
    ring = inside & ~bd & (np.abs(rr - math.exp(-r)) <= mesh * 0.75)
    hm = float(res[ring].mean()) if ring.any() else float(res[half, half])

    arc = (math.pi - arc_length / 2.0, math.pi + arc_length / 2.0)
    strip = build_domain("log_strip", mesh, r=float(r), arc=arc)
    mod = extremal_length(strip)
    window = math.log(max(hm, 1e-300)) + math.pi * mod.extremal_length
    return PflugerReport(hm, mod.extremal_length, window, arc_length, r, mesh)


def _solve_dirichlet_values(mask, v1, v2, values):
    """Potential on mask with the clamped values in `values`; returns grid."""
    free = mask & ~v1 & ~v2
    nf = int(free.sum())
    if nf == 0:
        return values
    idx = np.full(mask.shape, -1, dtype=np.int64)
    fi, fj = np.nonzero(free)
    idx[fi, fj] = np.arange(nf)
    diag = np.zeros(nf)
    rhs = np.zeros(nf)
    off_rows = []
    off_cols = []
    for di, dj in _neighbor_shifts():
        has = _shifted(mask, di, dj)[fi, fj]
        diag += has
        ni = np.clip(fi + di, 0, mask.shape[0] - 1)
        nj = np.clip(fj + dj, 0, mask.shape[1] - 1)
        nidx = idx[ni, nj]
        linked = has & (nidx >= 0)
        off_rows.append(np.nonzero(linked)[0])
        off_cols.append(nidx[linked])
        clamped = has & (nidx < 0)
        rhs[clamped] += values[ni[clamped], nj[clamped]]
    r = np.concatenate([np.arange(nf)] + off_rows)
    c = np.concatenate([np.arange(nf)] + off_cols)
    data = np.concatenate([diag, -np.ones(len(r) - nf)])
    lap = sp.csr_matrix((data, (r, c)), shape=(nf, nf))
    sol, info = spla.cg(lap, rhs, rtol=1e-13, atol=1e-13, maxiter=40 * max(mask.shape))
    resid = np.abs(lap @ sol - rhs).max() if info == 0 else np.inf
    if resid > RESIDUAL_TOL:
        sol = spla.spsolve(lap.tocsc(), rhs)
        resid = np.abs(lap @ sol - rhs).max()
        if resid > RESIDUAL_TOL:
            raise SolverError(f"potential residual {resid:.2e} exceeds {RESIDUAL_TOL}")
    out = values.copy()
    out[fi, fj] = sol
    return out


@dataclass(frozen=True)
class EscapeRegressionReport:
    fit: OlsResult
    m_coefficient: float
    z_coefficient: float
    m_stderr: float
    z_stderr: float
    rows: list  # (m, Z, escape) per sampled path
    bucket_means: dict  # (m, Z) -> (mean escape, count)
    delta: float


def escape_vs_crookedness(
    scales, walkers: int, delta: float, stream: RandomStream
) -> EscapeRegressionReport:
    """Regress log escape probability on scale and crookedness count.

    For each scale m, `walkers` LERW paths to radius e^m are sampled;
    each path's crooked count Z (angle changes >= delta between shell
    crossings) and exact escape probability (independent walk from the
    origin avoiding the whole path out to e^m) feed the regression
    log(escape) ~ 1 + m + Z.
    """
    scales = sorted(int(m) for m in scales)
    if walkers < 1:
        raise ValueError("need at least one walker per scale")
    if len(scales) < 2:
        raise ValueError("need at least two scales")
    rows = []
    for m in scales:
        cfg = LerwSampleConfig(math.exp(m))
        for i in range(walkers):
            sub = stream.substream(m, i)
            path = sample_lerw(cfg, sub)
            stats = scale_crossings(path, m)
            z = crookedness_counts(stats, delta).crooked_count
            esc = escape_probability(path, math.exp(m))
            if esc <= 0.0:
                continue  # fully enclosed origin; cannot enter the regression
            rows.append((m, z, esc))
    design = np.array([[1.0, m, z] for m, z, _ in rows])
    resp = np.log([e for _, _, e in rows])
    if len({(m, z) for m, z, _ in rows}) < 4:
        raise ValueError("degenerate design: too few distinct (m, Z) pairs")
    res = ols(design, resp)
    buckets: dict = {}
    for m, z, e in rows:
        tot, cnt = buckets.get((m, z), (0.0, 0))
        buckets[(m, z)] = (tot + e, cnt + 1)
    bucket_means = {k: (tot / cnt, cnt) for k, (tot, cnt) in buckets.items()}
    return EscapeRegressionReport(
        fit=res,
        m_coefficient=float(res.coefficients[1]),
        z_coefficient=float(res.coefficients[2]),
        m_stderr=float(res.stderrs[1]),
        z_stderr=float(res.stderrs[2]),
        rows=rows,
        bucket_means=bucket_means,
        delta=delta,
    )
