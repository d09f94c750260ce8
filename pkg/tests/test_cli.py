import json
import subprocess
import sys

import jsonschema
import numpy as np
import pytest

from belltwist.catalog import gisin_matrix, rotated_matrix
from belltwist.cli import main
from belltwist.core import svd, write_matrix_csv
from belltwist.modify import ShiftSpec, TwistSpec
from belltwist.report import SCHEMAS, schema, validate


@pytest.fixture
def files(tmp_path):
    def put(name, g):
        p = tmp_path / name
        p.write_text(write_matrix_csv(g))
        return str(p)

    return {
        "chsh": put("chsh.csv", [[1, 1], [1, -1]]),
        "gisin3": put("gisin3.csv", gisin_matrix(3)),
        "rotated": put("rotated.csv", rotated_matrix(0.2, 0.4, 0.6)),
        "dir": tmp_path,
    }


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_schemas_are_valid():
    for kind in SCHEMAS:
        jsonschema.Draft202012Validator.check_schema(schema(kind))


def test_bounds_chsh(files, capsys):
    code, out, _ = run(["bounds", files["chsh"]], capsys)
    assert code == 0
    doc = json.loads(out)
    validate(doc, "bounds")
    assert doc["B"] == 2.0
    assert doc["T"] == pytest.approx(2.8284271247, abs=1e-9)
    assert doc["tightness"]["tight"] and doc["manifest"]["timestamp"] is None
    assert doc["manifest"]["matrix_sha256"] == doc["matrix_sha256"]


def test_seesaw_dprime_one_equals_B(files, capsys):
    _, out, _ = run(["bounds", files["gisin3"]], capsys)
    B = json.loads(out)["B"]
    code, out, _ = run(["seesaw", files["gisin3"], "--dprime", "1", "--restarts", "20", "--seed", "0"], capsys)
    assert code == 0
    doc = json.loads(out)
    validate(doc, "seesaw")
    assert doc["value"] == pytest.approx(B, abs=1e-10)


def test_bounds_with_seesaw_needs_seed(files, capsys):
    code, _, err = run(["bounds", files["chsh"], "--dprime", "2"], capsys)
    assert code == 1 and "--seed" in err
    code, out, _ = run(["bounds", files["chsh"], "--dprime", "2", "--dprime", "1", "--seed", "1"], capsys)
    doc = json.loads(out)
    validate(doc, "bounds")
    assert [s["dprime"] for s in doc["seesaw"]] == [2, 1]


def test_twist_and_shift(files, capsys):
    d = files["dir"]
    spec = d / "twist.json"
    spec.write_text(json.dumps(TwistSpec((0.3,), (), ()).to_dict()))
    code, out, _ = run(["twist", files["gisin3"], "--spec", str(spec)], capsys)
    assert code == 0
    doc = json.loads(out)
    validate(doc, "modified")
    assert doc["T"] == pytest.approx(doc["T_input"], abs=1e-9)

    dec = svd(gisin_matrix(3))
    bad = d / "shift.json"
    bad.write_text(json.dumps(ShiftSpec((1, 1), 0.0, (dec.top_value,)).to_dict()))
    code, _, err = run(["shift", files["gisin3"], "--spec", str(bad)], capsys)
    assert code == 1 and "rejected" in err
    # all three singular values equal: still certifiable, so --force accepts it
    code, out, _ = run(["shift", files["gisin3"], "--spec", str(bad), "--force"], capsys)
    assert code == 0
    validate(json.loads(out), "modified")


def test_optimize_outputs(files, capsys):
    out_path = files["dir"] / "opt.json"
    argv = ["optimize", files["gisin3"], "--objective", "violation", "--samples", "20", "--seed", "1", "-o", str(out_path)]
    code, stdout, _ = run(argv, capsys)
    assert code == 0 and stdout == ""
    doc = json.loads(out_path.read_text())
    validate(doc, "optimize")
    assert doc["objective_value"] >= 1.2 - 1e-12
    assert doc["manifest"]["arguments"]["objective"] == "violation"
    code, out, _ = run(["optimize", files["gisin3"], "--objective", "dim:2", "--samples", "5", "--seed", "1", "--no-refine"], capsys)
    doc = json.loads(out)
    validate(doc, "optimize")
    assert doc["upper_estimate"] and doc["dprime"] == 2


def test_scan_and_histogram(files, capsys):
    code, out, _ = run(["scan", "0.1", "0.2", "0.3", "--axis", "yaw", "--steps", "12"], capsys)
    rows = np.array([[float(x) for x in line.split(",")] for line in out.splitlines()])
    assert code == 0 and rows.shape == (12, 2)
    code, out, _ = run(["scan", "0", "0", "0.3", "--steps", "4", "--surface"], capsys)
    assert len(out.splitlines()) == 16
    csv_path = files["dir"] / "h.csv"
    code, out, _ = run(["histogram", "--mode", "twisted", "--n", "25", "--seed", "2", "--csv", str(csv_path)], capsys)
    assert code == 0
    doc = json.loads(out)
    validate(doc, "histogram")
    assert doc["n"] == 25 and len(csv_path.read_text().splitlines()) == 25


@pytest.mark.parametrize(
    "argv",
    [
        ["nope"],
        ["seesaw", "x.csv", "--dprime", "2"],
        ["histogram", "--mode", "random", "--n", "3"],
        ["optimize", "x.csv", "--objective", "dim:0", "--seed", "1"],
        ["bounds"],
    ],
)
def test_usage_errors_exit_1(argv, capsys):
    code, _, err = run(argv, capsys)
    assert code == 1 and "usage" in err


def test_validation_errors_exit_1(files, capsys):
    bad = files["dir"] / "bad.csv"
    bad.write_text("1,2\n3,oops\n")
    code, _, err = run(["bounds", str(bad)], capsys)
    assert code == 1 and "line 2, column 2" in err
    code, _, err = run(["bounds", str(files["dir"] / "missing.csv")], capsys)
    assert code == 1
    spec = files["dir"] / "broken.json"
    spec.write_text("{")
    code, _, err = run(["twist", files["gisin3"], "--spec", str(spec)], capsys)
    assert code == 1 and "invalid JSON" in err


def test_budget_exit_2(files, capsys, monkeypatch):
    monkeypatch.setenv("BELL_MAX_ENUM", "2")
    code, _, err = run(["bounds", files["gisin3"]], capsys)
    assert code == 2 and "BELL_MAX_ENUM" in err


def test_repro_prints_lines(capsys):
    code, out, _ = run(["repro", "gisin3"], capsys)
    assert code == 0
    assert out.splitlines() == ["PASS gisin3 B: B = 5.0", "PASS gisin3 nu: nu = 1.200000000000"]
    code, _, err = run(["repro", "nothing"], capsys)
    assert code == 1 and "unknown repro target" in err


def test_module_entry_point(files):
    proc = subprocess.run([sys.executable, "-m", "belltwist", "bounds", files["chsh"]], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["B"] == 2.0


@pytest.mark.parametrize(
    "argv",
    [
        ["seesaw", "{gisin3}", "--dprime", "2", "--restarts", "5", "--seed", "7"],
        ["optimize", "{gisin3}", "--samples", "15", "--seed", "7"],
        ["histogram", "--mode", "twisted", "--n", "10", "--seed", "7"],
        ["bounds", "{rotated}", "--dprime", "2", "--seed", "7"],
    ],
)
def test_same_seed_same_bytes(argv, files, capsys):
    argv = [a.format(**files) for a in argv]
    outs = [run(argv, capsys)[1] for _ in range(2)]
    assert outs[0] == outs[1] and outs[0]
