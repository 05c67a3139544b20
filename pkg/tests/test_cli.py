import csv
import json
import math

import jsonschema
import pytest

from hardylab import cli


def run_json(capsys, argv):
    code = cli.run(argv)
    out = capsys.readouterr().out
    doc = json.loads(out) if out.strip() else None
    return code, doc


def get(doc, name):
    for row in doc["results"]:
        if row["name"] == name:
            return row
    raise KeyError(name)


def test_measure_info(capsys):
    code, doc = run_json(capsys, ["measure", "info", "--potential", "exp", "--tail-at", "1.0"])
    assert code == 0
    jsonschema.validate(doc, cli.JSON_SCHEMA)
    assert get(doc, "Z")["value"] == pytest.approx(2.0, rel=1e-8)
    assert get(doc, "median")["value"] == 0.0
    assert get(doc, "tail(1)")["value"] == pytest.approx(math.exp(-1) / 2, rel=1e-8)
    assert doc["config"]["potential"] == "exp"  # reproducible header


def test_legendre_subcommand(capsys):
    code, doc = run_json(capsys, ["legendre", "--rprime", "3", "--t", "2"])
    assert code == 0
    assert get(doc, "h_star")["value"] == pytest.approx(1.0, abs=1e-14)


def test_criteria_bp_json_and_csv(capsys, tmp_path):
    path = str(tmp_path / "bp.csv")
    code, doc = run_json(
        capsys,
        ["criteria", "--potential", "exp", "--kind", "bp", "--horizons", "25,50,100", "--csv", path],
    )
    assert code == 0
    jsonschema.validate(doc, cli.JSON_SCHEMA)
    row = get(doc, "bp partial sups")
    assert row["verdict"] == "bounded"
    assert row["bracket"][0] == pytest.approx(1.0, abs=1e-8)
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["horizon", "partial_sup"]
    assert len(rows) == 4
    float(rows[1][0]), float(rows[1][1])


def test_criteria_blo_threshold(capsys):
    code, doc = run_json(
        capsys,
        ["criteria", "--potential", "sinpower:2,1", "--kind", "blo", "--r", "1.15",
         "--horizons", "25,50,100,200"],
    )
    assert code == 0
    assert get(doc, "blo partial sups")["verdict"] == "bounded"


def test_spectral_subcommand(capsys):
    code, doc = run_json(capsys, ["spectral", "--potential", "gaussian", "--N", "2000"])
    assert code == 0
    assert get(doc, "gap")["value"] == pytest.approx(1.0, abs=0.01)


def test_evaluate_subcommand(capsys):
    code, doc = run_json(
        capsys, ["evaluate", "--potential", "gaussian", "--f", "x", "--kind", "poincare"]
    )
    assert code == 0
    assert get(doc, "ratio")["value"] == pytest.approx(1.0, rel=1e-6)


def test_concentration_gradcheck(capsys):
    code, doc = run_json(
        capsys,
        ["concentration", "--mode", "gradcheck", "--r", "1.5", "--t", "2.0",
         "--count", "20000", "--seed", "1", "--box", "1.5", "--n", "4"],
    )
    assert code == 0
    assert get(doc, "max quadratic budget ratio")["value"] <= 1.0 + 1e-9


def test_threshold_scan_small(capsys, tmp_path):
    path = str(tmp_path / "scan.csv")
    code, doc = run_json(
        capsys,
        ["threshold-scan", "--alphas", "2", "--rs", "1.15,1.3",
         "--horizons", "25,50,100,200,400,800", "--csv", path],
    )
    assert code == 0
    assert get(doc, "r0(alpha=2)")["value"] == pytest.approx(1.2)
    assert get(doc, "blo(alpha=2, r=1.15)")["verdict"] == "bounded"
    assert get(doc, "blo(alpha=2, r=1.3)")["verdict"] == "divergent"
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["alpha", "r", "verdict", "growth_exponent"]


def test_validation_error_exit_code_2():
    assert cli.run(["criteria", "--potential", "exp"]) == 2  # missing --kind
    assert cli.run(["nonsense"]) == 2


def test_numerical_failure_exit_code_3(capsys):
    # flat potential is not integrable: diagnosed during normalization
    code = cli.run(["measure", "info", "--potential", "expr:0*x"])
    assert code == 3
    err = capsys.readouterr().err
    assert "error" in err


def test_missing_r_is_numerical_validation(capsys):
    code = cli.run(["criteria", "--potential", "exp", "--kind", "blo"])
    assert code == 3


def test_repro_scenario_smoke(capsys):
    code = cli.run(["repro", "--name", "legendre-lower-bound"])
    captured = capsys.readouterr()
    assert code == 0
    doc = json.loads(captured.out)
    jsonschema.validate(doc, cli.JSON_SCHEMA)
    assert "[PASS]" in captured.err


def test_output_file_roundtrip(tmp_path, capsys):
    path = str(tmp_path / "report.json")
    code = cli.run(["legendre", "--rprime", "3", "--t", "6", "--output", path])
    assert code == 0
    with open(path) as fh:
        doc = json.load(fh)
    jsonschema.validate(doc, cli.JSON_SCHEMA)
    assert get(doc, "h_star")["value"] == pytest.approx(4.0 * math.sqrt(2.0), rel=1e-12)
