from __future__ import annotations

import csv
import json
import math
import subprocess
import sys

import pytest

from permshape import cli
from permshape.sampler import read_dump


def write_cfg(tmp_path, body: str):
    p = tmp_path / "exp.ini"
    p.write_text(body)
    return p


def run(tmp_path, cmd, body, *extra):
    out = tmp_path / "out"
    code = cli.main([cmd, "--config", str(write_cfg(tmp_path, body)), "--out", str(out), *extra])
    return code, out


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_moments_example(tmp_path):
    code, out = run(tmp_path, "moments", "[ensemble]\nn = 2\n[grid]\ncuts = 2\n")
    assert code == 0
    r = rows(out / "moments.csv")
    assert float(r[0]["mean"]) == pytest.approx(2 / 3, rel=1e-14)
    assert r[0]["schema_version"] == "1"
    blob = json.loads((out / "moments.json").read_text())
    assert blob["provenance"]["module"] == "series"
    assert blob["provenance"]["inputs"]["cuts"] == [2]


def test_moments_from_grid(tmp_path):
    code, out = run(tmp_path, "moments", "[ensemble]\nn = 400\n[grid]\nx = 0.5, 1.0\n")
    assert code == 0
    assert len(rows(out / "moments.csv")) == 2


def test_shape_theory_column(tmp_path):
    code, out = run(tmp_path, "shape", "[ensemble]\nn = 10000\n[run]\nsamples = 200\n")
    assert code == 0
    for r in rows(out / "shape.csv"):
        assert float(r["theory"]) == pytest.approx(math.exp(-float(r["x"])), rel=1e-13)
    blob = json.loads((out / "shape.json").read_text())
    assert blob["schema_version"] == 1 and blob["provenance"]["operation"] == "shape_distance"


def test_saddle_json(tmp_path):
    code, out = run(tmp_path, "saddle", "[ensemble]\nn = 1000\n")
    assert code == 0
    rep = json.loads((out / "saddle.json").read_text())["report"]
    assert rep["admissible"] is True and rep["within_budget"] is True


def test_sample_dump(tmp_path):
    code, out = run(tmp_path, "sample", "[ensemble]\nn = 30\n[run]\nsamples = 40\nseed = 3\n")
    assert code == 0
    header, draws = read_dump(out / "samples.txt")
    assert len(draws) == 40 and all(d.total_size == 30 for d in draws)
    assert header["seed"] == 3


def test_sample_grand_canonical(tmp_path):
    code, out = run(tmp_path, "sample", "[ensemble]\nkind = grand_canonical\nt = 0.9\n[run]\nsamples = 10\n")
    assert code == 0
    header, draws = read_dump(out / "samples.txt")
    assert header["param"] == 0.9 and len(draws) == 10


def test_specfun_table(tmp_path):
    code, out = run(tmp_path, "specfun-table", "")
    assert code == 0
    r = rows(out / "specfun.csv")
    zeta0 = [x for x in r if x["function"] == "zeta" and float(x["arg1"]) == 0.0]
    assert float(zeta0[0]["value"]) == pytest.approx(-0.5, abs=1e-12)


def test_verify_selected(tmp_path, capsys):
    code, out = run(tmp_path, "verify", "", "--suite", "1,2")
    assert code == 0
    blob = json.loads((out / "verdict.json").read_text())
    assert [c["name"] for c in blob["criteria"]] == ["1_enumeration", "2_closed_form_h"]
    assert blob["summary"]["fail"] == 0
    assert "1_enumeration: pass" in capsys.readouterr().out


@pytest.mark.parametrize("cmd,body", [
    ("sample", "[ensemble]\nn = 50\n[run]\nsamples = 2100\nseed = 17\n"),
    ("shape", "[ensemble]\nn = 500\n[run]\nsamples = 1500\nseed = 5\n"),
    ("shape", "[ensemble]\nkind = grand_canonical\nn = 500\n[run]\nsamples = 2500\n"),
])
def test_byte_identical_across_runs_and_workers(tmp_path, cmd, body):
    blobs = []
    for i, workers in enumerate((1, 1, 3)):
        d = tmp_path / f"r{i}"
        d.mkdir()
        cfg = write_cfg(d, body)
        assert cli.main([cmd, "--config", str(cfg), "--out", str(d / "o"), "--workers", str(workers)]) == 0
        blobs.append({p.name: p.read_bytes() for p in sorted((d / "o").iterdir())})
    assert blobs[0] == blobs[1] == blobs[2]


def test_config_error_exit(tmp_path, capsys):
    code, _ = run(tmp_path, "moments", "[model]\nalpha = 1\n[ensemble]\nwidth = 3\n")
    assert code == 2
    assert "line 4, column 1" in capsys.readouterr().err
    assert cli.main(["moments", "--config", str(tmp_path / "missing.ini")]) == 2
    code, _ = run(tmp_path, "moments", "[ensemble]\nn = 5\n")
    assert code == 2
    code, _ = run(tmp_path, "verify", "", "--suite", "nope")
    assert code == 2


def test_numeric_error_exit(tmp_path, capsys):
    code, _ = run(tmp_path, "moments", "[model]\nj = 1\n[ensemble]\nn = 1\n[grid]\ncuts = 1\n")
    assert code == 3
    assert capsys.readouterr().err.startswith("series: UndefinedMeasureError")
    code, _ = run(tmp_path, "sample", "[ensemble]\nkind = grand_canonical\nt = 1.5\n[run]\nsamples = 1\n")
    assert code == 3


def test_bad_seed_override(tmp_path):
    code, _ = run(tmp_path, "moments", "[ensemble]\nn = 5\n[grid]\ncuts = 1\n", "--seed", "-3")
    assert code == 2


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "permshape", "specfun-table", "--out", str(tmp_path)],
                         capture_output=True, text=True)
    assert res.returncode == 0
    assert (tmp_path / "specfun.csv").exists()
