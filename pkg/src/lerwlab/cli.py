"""Command-line interface: run experiments, persist CSV/JSON artifacts.

Every run writes into the --out directory:
  data.csv       per-point estimates (experiment, n, estimate, stderr, samples)
  fit.json       fitted slopes where the experiment produces a fit
  manifest.json  version, command line, config, seed, timestamps, file paths
  figure.png     rendered view of the per-point data
The CSV is a pure function of (subcommand flags, seed); timestamps live
only in the manifest, so re-running a manifest's command line
reproduces the CSV byte for byte at any worker count.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, coupling, crookedness, extremal, harness, report
from .harmonic import SolverError
from .looperase import LerwSampleConfig, sample_lerw
from .rng import RandomStream

CSV_COLUMNS = ("experiment", "n", "estimate", "stderr", "samples")

DEFAULT_RADII = {
    "lerw-sample": [8.0],
    "growth": [8.0, 16.0, 32.0, 64.0, 128.0, 256.0],
    "beurling": [8.0, 16.0, 32.0, 64.0, 128.0, 256.0],
    "moments": [8.0, 16.0, 32.0, 64.0],
    "tail": [16.0, 32.0, 64.0],
    "nonerasure": [8.0, 16.0, 32.0],
    "crookedness": [3.0, 4.0, 5.0, 6.0],
    "extremal": [],
    "coupling": [],
}

DEFAULT_SAMPLES = {
    "lerw-sample": 10,
    "growth": 2000,
    "beurling": 1,
    "moments": 500,
    "tail": 2000,
    "nonerasure": 2000,
    "crookedness": 300,
    "extremal": 1,
    "coupling": 20000,
}


def _parse_radii(text):
    return [float(x) for x in text.split(",") if x.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lerwlab",
        description="Loop-erased random walk exponent experiments",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    names = [
        "lerw-sample",
        "growth",
        "beurling",
        "moments",
        "tail",
        "nonerasure",
        "crookedness",
        "extremal",
        "coupling",
        "all",
    ]
    for name in names:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--seed", type=int, default=0, help="64-bit RNG seed")
        p.add_argument("--workers", type=int, default=None,
                       help="worker count (default: LERWLAB_WORKERS or cores)")
        p.add_argument("--samples", type=int, default=None,
                       help="samples per estimate point")
        p.add_argument("--radii", type=_parse_radii, default=None,
                       help="comma-separated radius (or scale) list")
        p.add_argument("--delta", type=float, default=None,
                       help="angle threshold / tail offset, per experiment")
        p.add_argument("--epsilon", type=float, default=0.5,
                       help="straightness fraction for the crookedness tail")
        p.add_argument("--mesh", type=float, default=1.0 / 64.0,
                       help="grid mesh for extremal-length computations")
        p.add_argument("--power", type=str, default="1,3",
                       help="comma-separated moment powers (moments only)")
        p.add_argument("--out", type=str, default=None,
                       help="output directory (default runs/<command>)")
    return parser


def _record_rows(record) -> list:
    rows = []
    for p in record.points:
        name = record.name
        if p.get("power") is not None:
            name = f"{record.name}_k{p['power']}"
        rows.append((name, p["n"], p["estimate"], p["stderr"], p["samples"]))
    return rows


def _fit_dict(fit) -> dict:
    d = dataclasses.asdict(fit)
    return d


def _write_outputs(outdir: Path, rows, fits: dict, manifest: dict, figures: dict):
    outdir.mkdir(parents=True, exist_ok=True)
    csv_path = outdir / "data.csv"
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for row in rows:
            w.writerow([repr(x) if isinstance(x, float) else x for x in row])
    paths = {"data.csv": str(csv_path)}
    if fits:
        fit_path = outdir / "fit.json"
        with open(fit_path, "w") as fh:
            json.dump(fits, fh, indent=2, sort_keys=True)
        paths["fit.json"] = str(fit_path)
    for fname, renderer in figures.items():
        fig_path = outdir / fname
        renderer(fig_path)
        paths[fname] = str(fig_path)
    manifest = dict(manifest)
    manifest["outputs"] = paths
    manifest["end_time"] = datetime.now(timezone.utc).isoformat()
    with open(outdir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    return paths


def _run_one(command: str, args) -> tuple[list, dict, dict]:
    """Returns (csv rows, fits dict, figure renderers) for one experiment."""
    seed = args.seed
    stream = RandomStream(seed)
    radii = args.radii if args.radii is not None else DEFAULT_RADII[command]
    samples = args.samples if args.samples is not None else DEFAULT_SAMPLES[command]
    rows: list = []
    fits: dict = {}
    figures: dict = {}

    if command == "lerw-sample":
        cfg = LerwSampleConfig(radii[0])
        sub = stream.substream(harness.EXPERIMENT_IDS["lerw_sample"])
        paths = [sample_lerw(cfg, sub.substream(i)) for i in range(samples)]
        for i, p in enumerate(paths):
            rows.append(("lerw-sample", radii[0], float(p.shape[0] - 1), 0.0, 1))
        figures["figure.png"] = lambda path: report.save_paths_figure(paths, path)
        figures["paths.jsonl"] = lambda path: Path(path).write_text(
            "".join(json.dumps(p.tolist()) + "\n" for p in paths)
        )
        return rows, fits, figures

    if command == "growth":
        rec = harness.growth_exponent_experiment(radii, samples, stream, args.workers)
        rows += _record_rows(rec)
        fits["growth"] = _fit_dict(rec.fit)
        figures["figure.png"] = lambda path: report.save_fit_figure(rec, path)
        return rows, fits, figures

    if command == "beurling":
        rec = harness.beurling_experiment(radii)
        rows += _record_rows(rec)
        fits["beurling"] = _fit_dict(rec.fit)
        figures["figure.png"] = lambda path: report.save_fit_figure(rec, path)
        return rows, fits, figures

    if command == "moments":
        powers = tuple(int(x) for x in args.power.split(",") if x.strip())
        rec = harness.xn_scaling_experiment(
            radii, samples, stream, powers=powers, workers=args.workers
        )
        rows += _record_rows(rec)
        for k, fit in rec.fits.items():
            fits[f"xn_k{k}"] = _fit_dict(fit)
        figures["figure.png"] = lambda path: report.save_fit_figure(rec, path)
        return rows, fits, figures

    if command == "tail":
        delta = args.delta if args.delta is not None else 0.1
        points = []
        for n in radii:
            est = harness.tail_experiment(n, 1.0, delta, samples, stream, args.workers)
            rows.append(("tail", n, est.probability, est.stderr, samples))
            points.append({"n": n, "estimate": est.probability, "stderr": est.stderr})
        figures["figure.png"] = lambda path: report.save_points_figure(
            "tail", points, path, logscale=False
        )
        return rows, fits, figures

    if command == "nonerasure":
        points = []
        for n in radii:
            n = int(n)
            est = harness.nonerasure_experiment(
                n, n * n, samples, stream, args.workers
            )
            rows.append(("nonerasure", n, est.probability, est.stderr, samples))
            points.append({"n": n, "estimate": est.probability, "stderr": est.stderr})
        if len(points) >= 2 and all(p["estimate"] > 0 for p in points):
            from .fit import loglog_fit

            fits["nonerasure"] = _fit_dict(
                loglog_fit([(p["n"], p["estimate"]) for p in points])
            )
        figures["figure.png"] = lambda path: report.save_points_figure(
            "nonerasure", points, path
        )
        return rows, fits, figures

    if command == "crookedness":
        delta = args.delta if args.delta is not None else 0.05
        sub = stream.substream(harness.EXPERIMENT_IDS["crookedness"])
        points = []
        for n in radii:
            est = crookedness.straightness_tail(
                int(n), delta, args.epsilon, samples, sub.substream(int(n))
            )
            rows.append(("crookedness", int(n), est.probability, est.stderr, samples))
            points.append({"n": n, "estimate": est.probability, "stderr": est.stderr})
        figures["figure.png"] = lambda path: report.save_points_figure(
            "crookedness", points, path, logscale=False
        )
        return rows, fits, figures

    if command == "extremal":
        mesh = args.mesh
        rect = extremal.extremal_length(
            extremal.build_domain("rectangle", mesh, a=2.0, b=1.0)
        )
        rows.append(("extremal_rectangle", 2.0, rect.extremal_length, 0.0, 1))
        ann = extremal.extremal_length(
            extremal.build_domain("split_annulus", min(mesh, 1.0 / 64.0), n=1)
        )
        rows.append(("extremal_annulus", 1.0, ann.extremal_length, 0.0, 1))
        serial = extremal.serial_rule_check(
            extremal.build_domain("slit_disk", min(mesh, 1.0 / 32.0), r=2), [0, 1, 2]
        )
        rows.append(("extremal_serial_slack", 2.0, serial.relative_slack, 0.0, 1))
        points = []
        for frac in (8, 4, 2, 1):
            rep = extremal.pfluger_check(math.pi / frac, 2, mesh)
            rows.append(("extremal_pfluger_window", math.pi / frac, rep.window, 0.0, 1))
            points.append({"n": math.pi / frac, "estimate": rep.window, "stderr": 0.0})
        figures["figure.png"] = lambda path: report.save_points_figure(
            "pfluger window", points, path, logscale=False
        )
        return rows, fits, figures

    if command == "coupling":
        sub = stream.substream(harness.EXPERIMENT_IDS["coupling"])
        stats = coupling.crossing_time_stats(samples, 1e-4, sub.substream(0))
        rows.append(("coupling_eta_mean", samples, stats.mean, stats.stderr, samples))
        horizons = [2**8, 2**9, 2**10, 2**11, 2**12]
        fit = coupling.deviation_scaling(horizons, 8, 1e-3, sub.substream(1))
        fits["deviation"] = _fit_dict(fit)
        points = [
            {"n": math.exp(lx), "estimate": math.exp(ly), "stderr": 0.0}
            for lx, ly in fit.points
        ]
        for p in points:
            rows.append(("coupling_deviation", p["n"], p["estimate"], 0.0, 8))
        figures["figure.png"] = lambda path: report.save_points_figure(
            "coupling deviation", points, path
        )
        return rows, fits, figures

    raise ValueError(f"unknown command {command!r}")


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    command = args.command
    start = datetime.now(timezone.utc).isoformat()
    outdir = Path(args.out) if args.out else Path("runs") / command

    commands = (
        ["growth", "beurling", "moments", "tail", "nonerasure",
         "crookedness", "extremal", "coupling"]
        if command == "all"
        else [command]
    )
    try:
        all_rows: list = []
        all_fits: dict = {}
        all_figures: dict = {}
        for name in commands:
            rows, fits, figures = _run_one(name, args)
            all_rows += rows
            all_fits.update({f"{name}:{k}" if command == "all" else k: v
                             for k, v in fits.items()})
            prefix = f"{name}_" if command == "all" else ""
            all_figures.update({f"{prefix}{k}": v for k, v in figures.items()})
        manifest = {
            "tool": "lerwlab",
            "version": __version__,
            "command_line": ["lerwlab"] + (argv if argv is not None else sys.argv[1:]),
            "config": {
                k: v for k, v in vars(args).items() if k != "command"
            },
            "seed": args.seed,
            "start_time": start,
        }
        _write_outputs(outdir, all_rows, all_fits, manifest, all_figures)
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (SolverError, FloatingPointError, np.linalg.LinAlgError, RuntimeError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 3
    return 0


def main() -> None:
    sys.exit(run())
