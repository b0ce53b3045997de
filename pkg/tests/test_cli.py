import csv
import json
import shutil
import subprocess

import pytest

from pwbands.cli import TIMESTAMP_FIELD, main


def run(*args):
    return main([str(a) for a in args])


def strip_stamp(path):
    doc = json.loads(path.read_text())
    doc.pop(TIMESTAMP_FIELD, None)
    doc.get("meta", {}).pop(TIMESTAMP_FIELD, None)
    return doc


@pytest.fixture
def demo(tmp_path):
    def make(n=10, noise="none", seed=1, name="data.csv"):
        out = tmp_path / name
        assert run("demo", "--n", n, "--noise", noise, "--seed", seed, "--out", out) == 0
        return out
    return make


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_demo_is_deterministic(demo, tmp_path):
    a = demo(name="a.csv")
    b = demo(name="b.csv")
    assert a.read_bytes() == b.read_bytes()
    assert list(rows(a)[0]) == ["x", "y"] and len(rows(a)) == 10
    truth = tmp_path / "truth.csv"
    assert run("demo", "--n", 5, "--out", tmp_path / "c.csv", "--truth", truth, "--grid", 64) == 0
    assert len(rows(truth)) == 64


def test_band_free_outputs(demo, tmp_path):
    data = demo()
    out = tmp_path / "band.csv"
    assert run("band-free", "--in", data, "--out", out, "--alpha", 0.1) == 0
    table = rows(out)
    assert len(table) == 512 and list(table[0]) == ["x", "lower", "upper", "empty"]
    assert {r["empty"] for r in table} <= {"0", "1"}
    meta = json.loads(out.with_suffix(".json").read_text())["meta"]
    assert meta["config"]["alpha"] == 0.1 and meta["config"]["eta"] == 30.0
    assert TIMESTAMP_FIELD in meta


def test_band_free_deterministic(demo, tmp_path):
    data = demo()
    out = tmp_path / "band.csv"
    run("band-free", "--in", data, "--out", out)
    first_csv, first_json = out.read_bytes(), strip_stamp(out.with_suffix(".json"))
    run("band-free", "--in", data, "--out", out)
    assert out.read_bytes() == first_csv
    assert strip_stamp(out.with_suffix(".json")) == first_json


def test_duplicate_inputs_exit_2(tmp_path, capsys):
    data = tmp_path / "dup.csv"
    data.write_text("x,y\n0.1,0.2\n0.1,0.3\n0.5,0.0\n")
    assert run("band-free", "--in", data, "--out", tmp_path / "b.csv") == 2
    assert "DuplicateInputs" in capsys.readouterr().err


def test_invalid_risk_exit_2(demo, tmp_path, capsys):
    assert run("band-free", "--in", demo(), "--out", tmp_path / "b.csv", "--alpha", 1.5) == 2
    assert "InvalidRisk" in capsys.readouterr().err


def test_malformed_inputs_exit_2(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n")
    assert run("band-free", "--in", bad, "--out", tmp_path / "o.csv") == 2
    bad.write_text("x,y\n1.5,2\n")
    assert run("band-free", "--in", bad, "--out", tmp_path / "o.csv") == 2
    bad.write_text("x,y\nfoo,2\n")
    assert run("band-free", "--in", bad, "--out", tmp_path / "o.csv") == 2


def test_missing_input_exit_3(tmp_path):
    assert run("band-free", "--in", tmp_path / "nope.csv", "--out", tmp_path / "o.csv") == 3


def test_band_noisy_rows_and_meta(demo, tmp_path):
    data = demo(n=100, noise="laplace")
    out = tmp_path / "noisy.csv"
    assert run("band-noisy", "--in", data, "--out", out, "--d", 20, "--risk", 0.1) == 0
    assert len(rows(out)) == 512
    meta = json.loads(out.with_suffix(".json").read_text())["meta"]
    assert meta["alpha"] == meta["beta"] == 0.05
    assert meta["beta_achieved"] == meta["q"] / meta["m"] <= 0.05
    assert meta["d"] == 20


def test_band_noisy_d_too_large(demo, tmp_path):
    assert run("band-noisy", "--in", demo(n=10), "--out", tmp_path / "o.csv", "--d", 11) == 2


def test_band_noisy_byte_identical(demo, tmp_path):
    data = demo(n=60, noise="laplace")
    out = tmp_path / "n.csv"
    args = ("band-noisy", "--in", data, "--out", out, "--d", 4, "--seed", 9, "--perturb", "all", "--grid", 64)
    run(*args)
    first_csv, first_json = out.read_bytes(), strip_stamp(out.with_suffix(".json"))
    run(*args)
    assert out.read_bytes() == first_csv
    assert strip_stamp(out.with_suffix(".json")) == first_json


def test_config_file_precedence(demo, tmp_path):
    data = demo()
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"alpha": 0.5, "grid": 32}))
    out = tmp_path / "b.csv"
    assert run("band-free", "--config", cfg, "--in", data, "--out", out, "--alpha", 0.2) == 0
    meta = json.loads(out.with_suffix(".json").read_text())["meta"]
    assert meta["alpha"] == 0.2 and len(rows(out)) == 32
    cfg.write_text("{not json")
    assert run("band-free", "--config", cfg, "--in", data, "--out", out) == 2


def test_coverage_command(tmp_path, capsys):
    out = tmp_path / "rep.json"
    args = ("coverage", "--trials", 4, "--grid", 64, "--threads", 1, "--out", out)
    assert run(*args) == 0
    line = capsys.readouterr().out.strip()
    assert line.startswith("noise-free: trials=4") and "guarantee>=0.9000" in line
    first = strip_stamp(out)
    assert run(*args) == 0
    assert strip_stamp(out) == first
    assert first["config"]["alpha"] == 0.1 and first["trials"] == 4


def test_coverage_errors(tmp_path):
    assert run("coverage", "--trials", 0, "--out", tmp_path / "r.json") == 2
    assert run("coverage", "--trials", 2, "--out", tmp_path / "missing" / "r.json") == 3


def test_console_script(tmp_path):
    exe = shutil.which("pwbands")
    if exe is None:
        pytest.skip("console script not installed")
    res = subprocess.run([exe, "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    for sub in ("band-free", "band-noisy", "coverage", "demo"):
        assert sub in res.stdout
    res = subprocess.run([exe, "band-free", "--alpha", "0.1"], capture_output=True, text=True)
    assert res.returncode == 2 and "--in" in res.stderr
