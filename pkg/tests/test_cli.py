import csv
import io
import json
import subprocess
import sys

import pytest

from keller_lab.cli import (EXIT_ASSERTION, EXIT_DEGENERATE, EXIT_OK, EXIT_PARSE, EXIT_PRECONDITION,
                            ExperimentConfig, ParseFailure, main)
from keller_lab.poly import load_map, parse_map, save_map


@pytest.fixture
def files(tmp_path):
    def put(name, p, q):
        path = tmp_path / f"{name}.json"
        save_map(parse_map(p, q), path)
        return str(path)
    out = {
        "id": put("id", "X", "Y"),
        "shear": put("shear", "Y", "-X + Y^2"),
        "tri": put("tri", "X + Y^2", "Y"),
        "pow": put("pow", "X^2", "Y^3"),
        "sq": put("sq", "X^2", "Y"),
        "line1": put("line1", "X + Y", "(X + Y)^2"),
        "line2": put("line2", "X + 2*Y", "(X + 2*Y)^2"),
    }
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    out["bad"] = str(bad)
    out["dir"] = tmp_path
    return out


def _rows(capsys):
    return list(csv.DictReader(io.StringIO(capsys.readouterr().out)))


def test_fiber(files, capsys):
    assert main(["fiber", "--map", files["shear"], "--target", "2,0,0,1"]) == EXIT_OK
    row = _rows(capsys)[0]
    # (Y, -X + Y^2) = (2, i)  =>  Y = 2, X = 4 - i
    assert row["count"] == "1" and row["status"] == "finite"
    x, y = (complex(t.replace("j", "j")) for t in row["points"].split())
    assert abs(x - (4 - 1j)) < 1e-9 and abs(y - 2) < 1e-9


def test_parse_errors(files):
    assert main(["fiber", "--map", files["bad"], "--target", "0,0,0,0"]) == EXIT_PARSE
    assert main(["degree", "--map", str(files["dir"] / "missing.json")]) == EXIT_PARSE
    assert main(["fiber", "--map", files["id"], "--target", "zero"]) == EXIT_PARSE
    assert main(["no-such-command"]) == EXIT_PARSE


def test_check_exit_codes(files):
    assert main(["check", "--map", files["shear"]]) == EXIT_OK
    assert main(["check", "--map", files["id"]]) == EXIT_ASSERTION
    assert main(["check", "--map", files["id"], "--relaxed"]) == EXIT_OK


def test_precondition_exit_codes(files):
    assert main(["iterate", "--map", files["pow"], "-n", "9"]) == EXIT_PRECONDITION
    assert main(["experiment", "bounds", "--map", files["sq"], "--samples", "10000"]) == EXIT_PRECONDITION
    assert main(["metric", "--g1", files["id"], "--g2", files["tri"], "--samples", "10"]) == EXIT_PRECONDITION


def test_degenerate_exit_code(files):
    args = ["metric", "--g1", files["line1"], "--g2", files["line2"], "--samples", "10000"]
    assert main(args) == EXIT_DEGENERATE


def test_compose_and_iterate_write_maps(files, capsys):
    out = files["dir"] / "ff.json"
    assert main(["iterate", "--map", files["pow"], "-n", "2", "--out", str(out)]) == EXIT_OK
    f = load_map(out)
    assert f == parse_map("X^4", "Y^9")
    out2 = files["dir"] / "c.json"
    assert main(["compose", "--f", files["pow"], "--g", files["pow"], "--out", str(out2)]) == EXIT_OK
    assert out.read_text() == out2.read_text()


def test_metric_csv_reproducible(files):
    base = ["metric", "--g1", files["id"], "--g2", files["tri"], "--samples", "10000", "--seed", "4"]
    a, b = files["dir"] / "a.csv", files["dir"] / "b.csv"
    assert main(base + ["--out", str(a), "--threads", "1"]) == EXIT_OK
    assert main(base + ["--out", str(b), "--threads", "3"]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()
    row = next(csv.DictReader(io.StringIO(a.read_text())))
    assert float(row["value"]) > 0 and row["seed"] == "4"


def test_seed_from_environment(files, monkeypatch, capsys):
    monkeypatch.setenv("KELLER_LAB_SEED", "17")
    assert main(["metric", "--g1", files["id"], "--g2", files["tri"], "--samples", "10000"]) == EXIT_OK
    env_row = _rows(capsys)[0]
    monkeypatch.delenv("KELLER_LAB_SEED")
    assert main(["metric", "--g1", files["id"], "--g2", files["tri"], "--samples", "10000", "--seed", "17"]) == 0
    assert _rows(capsys)[0] == env_row


def test_domain_round_trip(files, capsys):
    path = files["dir"] / "d.json"
    assert main(["domain", "--radius", "2", "--slices", "3", "--out", str(path)]) == EXIT_OK
    data = json.loads(path.read_text())
    assert data["radius"] == 2.0 and len(data["slices"]) == 3
    broken = files["dir"] / "broken.json"
    data["slices"][0]["stars"][0]["valence"] = 99
    broken.write_text(json.dumps(data))
    assert main(["metric", "--g1", files["id"], "--g2", files["tri"], "--domain", str(broken)]) == EXIT_PARSE


def test_degree_and_classify(files, capsys):
    assert main(["degree", "--map", files["pow"]]) == EXIT_OK
    assert _rows(capsys)[0]["d"] == "6"
    assert main(["classify", "--map", files["sq"]]) == EXIT_OK
    assert _rows(capsys)[0]["classification"] == "prime-degree"


def test_asym(files, capsys):
    assert main(["asym", "--map", files["tri"], "--alpha", "1", "--beta", "1"]) == EXIT_OK
    assert main(["asym", "--map", files["tri"], "--alpha", "0", "--beta", "1"]) == EXIT_PRECONDITION
    assert main(["asym", "--map", files["tri"], "--alpha", "1", "--beta", "1", "--phi", "X^"]) == EXIT_PARSE


def test_probe(files, capsys):
    assert main(["probe", "right", "--map", files["shear"], "--trials", "10"]) == EXIT_OK
    row = _rows(capsys)[0]
    assert (row["trials"], row["collisions"]) == ("10", "0")


def test_bn(files, capsys):
    assert main(["bn", "--map", files["pow"], "-n", "6", "--grid", "6"]) == EXIT_OK
    row = _rows(capsys)[0]
    assert (row["d_f"], row["nested"], row["n"]) == ("6", "true", "36")


def test_experiment_degree_mult(files, capsys):
    assert main(["experiment", "degree-mult", "--f", files["pow"]]) == EXIT_OK
    row = _rows(capsys)[0]
    assert (row["d_f"], row["d_ff"]) == ("6", "36")


def test_experiment_isometry(files, capsys):
    args = ["experiment", "isometry", "--f", files["shear"], "--g1", files["id"], "--g2", files["tri"],
            "--samples", "10000"]
    assert main(args) == EXIT_OK
    row = _rows(capsys)[0]
    assert abs(float(row["ratio"]) - 1) < 0.1


def test_experiment_config_validation():
    cfg = ExperimentConfig(name="isometry", maps={"f": "/nonexistent/f.json"}, samples=10_000)
    with pytest.raises(ParseFailure):
        cfg.validate()


def test_module_entry_point(files):
    proc = subprocess.run([sys.executable, "-m", "keller_lab", "check", "--map", files["shear"]],
                          capture_output=True, text=True)
    assert proc.returncode == EXIT_OK
