import json
import math
import os

import numpy as np
import pytest

from prepllab.cli import cli_main
from prepllab.gridio import read_csv

ROOT = os.path.dirname(os.path.dirname(__file__))
QUAD_JSON = os.path.join(ROOT, "families", "quad.json")


def test_green_eval_ln2(capsys):
    assert cli_main(["green-eval", "--map", "builtin:z2", "--z", "2", "--tol", "1e-9"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert abs(float(lines[0]) - math.log(2)) <= 1e-9
    assert float(lines[1].split()[1]) <= 1e-9


def test_green_eval_json_and_negative_values(capsys):
    assert cli_main(["green-eval", "--map", "builtin:quad", "--param", "-1/2",
                     "--z", "-3+i", "--format", "json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["value"] > 0 and doc["tol"] == 1e-9


def test_potential_csv_and_pgm(tmp_path):
    out = tmp_path / "pot.csv"
    code = cli_main(["potential", "--family", QUAD_JSON, "--rect", "-2.5,1.5,-2,2",
                     "--res", "32,24", "--out", str(out)])
    assert code == 0
    rect, nx, ny, values, tol = read_csv(str(out))
    assert (rect, nx, ny, tol) == ((-2.5, 1.5, -2.0, 2.0), 32, 24, 1e-8)
    pgm = (tmp_path / "pot.pgm").read_bytes()
    assert pgm.startswith(b"P5\n32 24\n65535\n")
    assert len(pgm) == len(b"P5\n32 24\n65535\n") + 2 * 32 * 24
    meta = json.loads((tmp_path / "pot.pgm.json").read_text())
    assert meta["max"] == pytest.approx(np.nanmax(values))


def test_csv_header_and_precision(tmp_path):
    out = tmp_path / "p.csv"
    assert cli_main(["potential", "--res", "8", "--out", str(out), "--format", "csv"]) == 0
    text = out.read_text().splitlines()
    assert text[0] == "# rect -2.5 1.5 -2 2 8 8 1e-08"
    assert len(text) == 9
    assert not (tmp_path / "p.pgm").exists()


def test_ddc_reports_mass(tmp_path, capsys):
    out = tmp_path / "m.csv"
    assert cli_main(["ddc", "--res", "128", "--out", str(out)]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["total_mass"] == pytest.approx(0.5, abs=0.01)


def test_prep_params(capsys):
    assert cli_main(["prep-params", "--family", "builtin:quad", "--m", "0", "--n", "3"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["degree"] == 4 and doc["count_with_multiplicity"] == 4
    assert all(r["orbit_distance"] < 1e-6 for r in doc["roots"])


def test_prep_params_persistent_is_computation_failure(capsys):
    assert cli_main(["prep-params", "--family", "builtin:z2", "--point", "0"]) == 2


def test_common_prep(capsys):
    assert cli_main(["common-prep", "--pair", "builtin:z2", "builtin:cheb2", "--depth", "4"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["rows"][0]["count"] == 3


def test_rank(capsys):
    assert cli_main(["rank", "--family", "builtin:z2", "--point", "0"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["rank"] == 0 and doc["certified"]


def test_experiment_exit_codes(tmp_path):
    ok = cli_main(["experiment", "simultaneous-prep", "--point2", "0", "--depth", "3",
                   "--out", str(tmp_path / "r.json")])
    assert ok == 0
    doc = json.loads((tmp_path / "r.json").read_text())
    assert doc["scenario"] == "simultaneous-prep"
    # shift 0: min potential is not positive, so a verdict fails
    bad = cli_main(["experiment", "double-mandelbrot", "--shift", "0", "--rect", "-2.5,1.5,-2,2",
                    "--res", "32", "--depth", "2", "--out", str(tmp_path / "d.json")])
    assert bad == 3


@pytest.mark.parametrize("argv", [
    ["nope"],
    ["green-eval", "--z", "2", "--tol", "-1"],
    ["potential", "--rect", "1,0,0,1"],
    ["potential", "--res", "2"],
    ["potential", "--family", "/no/such/file.json"],
    ["green-eval", "--map", "builtin:what", "--z", "1"],
    ["experiment", "double-mandelbrot", "--shift", "x"],
    ["potential", "--threads", "0"],
])
def test_parse_errors_exit_1(argv, capsys):
    assert cli_main(argv) == 1
    assert capsys.readouterr().err


def test_bad_descriptor_position(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text('{"degree": 2, "numerator": [["1"], [], ["q"]], "denominator": [["1"], [], []]}')
    assert cli_main(["potential", "--family", str(path)]) == 1
    assert "numerator[2][0]" in capsys.readouterr().err


def test_nonconvergence_exit_2(capsys):
    assert cli_main(["green-eval", "--map", "builtin:z2", "--z", "2", "--tol", "1e-320"]) == 2


def test_threads_do_not_change_bytes(tmp_path):
    for t in ("1", "4"):
        assert cli_main(["potential", "--res", "48,40", "--threads", t,
                         "--out", str(tmp_path / f"p{t}.csv")]) == 0
    assert (tmp_path / "p1.csv").read_bytes() == (tmp_path / "p4.csv").read_bytes()
    assert (tmp_path / "p1.pgm").read_bytes() == (tmp_path / "p4.pgm").read_bytes()
