import csv
import json
from pathlib import Path

import pytest

from lerwlab.cli import build_parser, run

SCHEMA = ["experiment", "n", "estimate", "stderr", "samples"]


def _read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_growth_run_outputs(tmp_path):
    out = tmp_path / "g"
    code = run(
        [
            "growth",
            "--radii", "4,8,16",
            "--samples", "80",
            "--seed", "7",
            "--out", str(out),
        ]
    )
    assert code == 0
    rows = _read_csv(out / "data.csv")
    assert rows[0] == SCHEMA
    assert len(rows) == 4
    for row in rows[1:]:
        assert row[0] == "growth"
        float(row[1]), float(row[2]), float(row[3]), int(row[4])
    fit = json.loads((out / "fit.json").read_text())
    assert "growth" in fit and "slope" in fit["growth"]
    manifest = json.loads((out / "manifest.json").read_text())
    for key in ("tool", "version", "command_line", "config", "seed",
                "start_time", "end_time", "outputs"):
        assert key in manifest
    assert manifest["seed"] == 7
    assert (out / "figure.png").exists()


def test_byte_identical_across_worker_counts(tmp_path):
    args = ["moments", "--radii", "4,8,12", "--samples", "40", "--seed", "3"]
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(args + ["--workers", "1", "--out", str(a)]) == 0
    assert run(args + ["--workers", "3", "--out", str(b)]) == 0
    assert (a / "data.csv").read_bytes() == (b / "data.csv").read_bytes()
    assert (a / "fit.json").read_bytes() == (b / "fit.json").read_bytes()


def test_rerun_reproduces_csv(tmp_path):
    args = ["crookedness", "--radii", "3,4", "--samples", "50", "--seed", "1"]
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(args + ["--out", str(a)]) == 0
    assert run(args + ["--out", str(b)]) == 0
    assert (a / "data.csv").read_bytes() == (b / "data.csv").read_bytes()


def test_lerw_sample_paths_jsonl(tmp_path):
    out = tmp_path / "s"
    assert run(["lerw-sample", "--radii", "6", "--samples", "5",
                "--seed", "2", "--out", str(out)]) == 0
    lines = (out / "paths.jsonl").read_text().splitlines()
    assert len(lines) == 5
    for line in lines:
        path = json.loads(line)
        assert path[0] == [0, 0]
        for p, q in zip(path, path[1:]):
            assert abs(p[0] - q[0]) + abs(p[1] - q[1]) == 1
    rows = _read_csv(out / "data.csv")
    assert len(rows) == 6


def test_exit_code_on_bad_arguments(tmp_path, capsys):
    # too few radii for a fit -> argument error, exit 2
    code = run(["growth", "--radii", "4,8", "--samples", "20",
                "--out", str(tmp_path / "x")])
    assert code == 2
    assert "error" in capsys.readouterr().err


def test_unknown_subcommand_exits_2():
    with pytest.raises(SystemExit) as exc:
        build_parser().parse_args(["frobnicate"])
    assert exc.value.code == 2


def test_parser_defaults():
    args = build_parser().parse_args(["growth"])
    assert args.seed == 0
    assert args.epsilon == 0.5
    assert args.mesh == pytest.approx(1 / 64)
    assert args.radii is None
