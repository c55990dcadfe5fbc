"""Figure rendering for experiment records.

Every CLI run that produces per-point estimates also renders a figure
next to the delimited output; the CSV stays the authoritative artifact.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def save_fit_figure(record, path) -> None:
    """Log-log scatter of an ExperimentRecord with its fitted line(s)."""
    fig, ax = plt.subplots(figsize=(6, 4.5))
    groups: dict = {}
    for p in record.points:
        groups.setdefault(p.get("power"), []).append(p)
    fits = dict(getattr(record, "fits", {}) or {})
    if record.fit is not None and not fits:
        fits = {None: record.fit}
    for power, pts in groups.items():
        ns = [p["n"] for p in pts]
        vs = [p["estimate"] for p in pts]
        errs = [p["stderr"] if p["stderr"] == p["stderr"] else 0.0 for p in pts]
        label = record.name if power is None else f"{record.name} k={power}"
        ax.errorbar(ns, vs, yerr=errs, fmt="o", capsize=3, label=label)
        fit = fits.get(power)
        if fit is not None:
            xs = [min(ns), max(ns)]
            ys = [math.exp(fit.intercept) * x**fit.slope for x in xs]
            ax.plot(xs, ys, "--", label=f"slope {fit.slope:.3f}")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("n")
    ax.set_ylabel("estimate")
    ax.set_title(record.name)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_points_figure(name, points, path, logscale=True) -> None:
    """Generic per-point figure for experiments without a fitted record."""
    fig, ax = plt.subplots(figsize=(6, 4.5))
    ns = [p["n"] for p in points]
    vs = [p["estimate"] for p in points]
    errs = [p.get("stderr", 0.0) or 0.0 for p in points]
    ax.errorbar(ns, vs, yerr=errs, fmt="o-", capsize=3)
    if logscale and all(isinstance(n, (int, float)) and n > 0 for n in ns) and all(
        v > 0 for v in vs
    ):
        ax.set_xscale("log")
        ax.set_yscale("log")
    ax.set_xlabel("n")
    ax.set_ylabel("estimate")
    ax.set_title(name)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_paths_figure(paths, path) -> None:
    """Overlay of sampled lattice paths."""
    fig, ax = plt.subplots(figsize=(5.5, 5.5))
    for p in paths:
        ax.plot(p[:, 0], p[:, 1], lw=0.9, alpha=0.8)
    ax.set_aspect("equal")
    ax.set_title(f"{len(paths)} loop-erased walk samples")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
