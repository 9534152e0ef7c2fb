import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from htype import cli
from htype.constants import sharp_sobolev
from htype.functionals import QuotientReport


def run(argv, capsys):
    code = cli.run(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_constants_csv(capsys):
    code, out, _ = run(["constants", "--n", "1", "--m", "1", "--s", "0.5", "--csv"], capsys)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    names = [r["name"] for r in rows]
    for k in ("S", "N", "c", "a", "V"):
        assert k in names
    S = next(r for r in rows if r["name"] == "S")
    assert float(S["value"]) == sharp_sobolev(1, 1, 0.5)
    assert float(S["error"]) == 0.0
    # 17 significant digits round-trip exactly
    assert len(S["value"].replace(".", "").lstrip("0")) >= 16


def test_constants_json_and_table(capsys):
    code, out, _ = run(["constants", "--json"], capsys)
    assert code == 0
    data = json.loads(out)
    assert {d["name"] for d in data} >= {"S", "N", "c", "a", "V"}
    code, out, _ = run(["constants"], capsys)
    assert code == 0 and out.splitlines()[0].split()[0] == "name"


def test_inadmissible_group(capsys):
    code, _, err = run(["constants", "--n", "1", "--m", "2", "--s", "0.5"], capsys)
    assert code == 2
    assert "Radon-Hurwitz" in err


def test_usage_errors(capsys):
    assert run(["constants", "--bogus"], capsys)[0] == 64
    assert run(["frobnicate"], capsys)[0] == 64
    assert run([], capsys)[0] == 64
    assert run(["constants", "--s", "half"], capsys)[0] == 64


def test_precondition_errors(capsys):
    assert run(["constants", "--s", "1.5"], capsys)[0] == 2
    assert run(["verify", "--samples", "10"], capsys)[0] == 2
    assert run(["verify", "--suite", "nope", "--samples", "2000"], capsys)[0] == 2
    assert run(["field", "--name", "omega:x"], capsys)[0] == 2
    assert run(["field", "--at", "1,2"], capsys)[0] == 2
    assert run(["constants", "--threads", "0"], capsys)[0] == 2


def test_verify_sobolev(capsys):
    code, out, _ = run(["verify", "--suite", "sobolev", "--n", "1", "--m", "1", "--s", "0.5",
                        "--samples", "200000", "--seed", "7", "--csv"], capsys)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [r["label"] for r in rows] == ["U", "U(mu=2,eta)"]
    for r in rows:
        assert abs(float(r["deficit"])) <= 3 * float(r["error"])
        assert r["violated"] == "0"


def test_violation_exit_code(capsys, monkeypatch):
    def fake(G, f, s, spec):
        return QuotientReport(1.0, 0.01, 2.0, "fake")
    monkeypatch.setattr(cli, "sobolev_quotient", fake)
    code, _, err = run(["verify", "--suite", "sobolev", "--samples", "2000"], capsys)
    assert code == 3
    assert "inequality violated" in err


def test_field_eval(capsys):
    code, out, _ = run(["field", "eval", "--name", "U", "--at", "2,0,0", "--s", "0.5", "--json"], capsys)
    assert code == 0
    row = json.loads(out)[0]
    assert row["value"] == pytest.approx(2 ** -1.5, rel=1e-14)
    assert row["error"] == 0.0
    code, out, _ = run(["field", "--name", "omega:4", "--json"], capsys)
    assert json.loads(out)[0]["value"] == pytest.approx(1.0)


def test_group_dump(capsys):
    code, out, _ = run(["group", "--n", "1", "--m", "1", "--csv"], capsys)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    M = np.zeros((2, 2))
    for r in rows:
        M[int(r["i"]) - 1, int(r["j"]) - 1] = float(r["value"])
    assert np.array_equal(M, [[0, 1], [-1, 0]])
    code, out, _ = run(["group", "dump", "--n", "2", "--m", "3", "--json"], capsys)
    d = json.loads(out)
    assert max(d["residuals"].values()) <= 1e-13


def test_integrate_command(capsys):
    code, out, _ = run(["integrate", "--field", "J", "--method", "polar-grid", "--nodes", "200", "--json"],
                       capsys)
    assert code == 0
    row = json.loads(out)[0]
    assert row["value"] == pytest.approx(np.pi ** 2, rel=5e-3)
    assert "error" in row


def test_sharpness_command(capsys):
    code, out, _ = run(["sharpness", "--family", "scale", "--budget", "50", "--method", "monte-carlo",
                        "--samples", "5000", "--csv"], capsys)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert list(rows[0]) == ["iteration", "theta0", "value", "error"]
    code, _, _ = run(["sharpness", "--family", "zz", "--budget", "50"], capsys)
    assert code == 2
    code, _, _ = run(["sharpness", "--family", "a", "--budget", "10"], capsys)
    assert code == 2


def test_output_file_and_io_error(tmp_path, capsys):
    target = tmp_path / "c.csv"
    assert run(["constants", "--csv", "--output", str(target)], capsys)[0] == 0
    assert target.read_text().startswith("name,value,error,context_range")
    code, _, err = run(["constants", "--output", str(tmp_path / "missing" / "x.csv")], capsys)
    assert code == 74 and "missing" in err


def test_config_precedence(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\ns = 0.25\nformat = json\n")
    code, out, _ = run(["constants", "--config", str(cfg)], capsys)
    S = next(d for d in json.loads(out) if d["name"] == "S")
    assert S["value"] == sharp_sobolev(1, 1, 0.25)
    code, out, _ = run(["constants", "--config", str(cfg), "--s", "0.75"], capsys)
    S = next(d for d in json.loads(out) if d["name"] == "S")
    assert S["value"] == sharp_sobolev(1, 1, 0.75)
    bad = tmp_path / "bad.cfg"
    bad.write_text("colour = blue\n")
    assert run(["constants", "--config", str(bad)], capsys)[0] == 2
    assert run(["constants", "--config", str(tmp_path / "none.cfg")], capsys)[0] == 74


def test_seed_environment_override(monkeypatch, capsys):
    args = ["integrate", "--field", "bump", "--samples", "5000", "--json"]
    monkeypatch.setenv("HTYPE_SEED", "3")
    a = json.loads(run(args + ["--seed", "1"], capsys)[1])[0]["value"]
    monkeypatch.delenv("HTYPE_SEED")
    b = json.loads(run(args + ["--seed", "3"], capsys)[1])[0]["value"]
    c = json.loads(run(args + ["--seed", "1"], capsys)[1])[0]["value"]
    assert a == b != c
    monkeypatch.setenv("HTYPE_SEED", "x")
    assert run(args, capsys)[0] == 2


def test_report_deterministic(tmp_path, capsys):
    base = ["report", "--suites", "hardy,sobolev", "--samples", "20000", "--seed", "0"]
    assert run(base + ["--outdir", str(tmp_path / "a")], capsys)[0] == 0
    assert run(base + ["--outdir", str(tmp_path / "b"), "--threads", "3"], capsys)[0] == 0
    for name in ("hardy.dat", "sobolev.dat", "report.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    dat = (tmp_path / "a" / "sobolev.dat").read_text().splitlines()
    assert dat[1] == "# columns: index value error sharp_constant deficit"
    data = [l for l in dat if not l.startswith("#")]
    assert len(data) == 2 and all(len(l.split()) == 5 for l in data)
    rep = json.loads((tmp_path / "a" / "report.json").read_text())
    assert set(rep["suites"]) == {"hardy", "sobolev"}


def test_report_empty(tmp_path, capsys):
    assert run(["report", "--suites", "", "--outdir", str(tmp_path)], capsys)[0] == 0
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep["suites"] == {}


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "htype", "constants", "--csv"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("name,")
    res = subprocess.run([sys.executable, "-m", "htype", "--nope"], capture_output=True, text=True)
    assert res.returncode == 64
