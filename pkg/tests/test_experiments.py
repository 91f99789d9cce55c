import json

import pytest

from prepllab.descriptor import builtin_family
from prepllab.family import MapFamily, MarkedPoint
from prepllab.experiments import (
    run_common_prep_table,
    run_double_mandelbrot,
    run_simultaneous_prep,
    run_stability_dichotomy,
    run_unicritical_pcf_density,
)
from prepllab.gridio import dumps_json
from prepllab.preperiodic import ORBIT_TOL, orbit_return_distance

QUAD = MapFamily.polynomial([[0, 1], 0, 1])
Z2 = MapFamily.polynomial([0, 0, 1])


def test_report_schema_and_determinism():
    a = run_double_mandelbrot(10, res=64, depth=3)
    b = run_double_mandelbrot(10, res=64, depth=3, threads=3)
    doc = json.loads(dumps_json(a.to_dict()))
    assert set(doc) == {"scenario", "inputs", "outputs", "verdicts", "provenance", "warnings"}
    assert "wall_time" not in doc["provenance"]
    assert dumps_json(a.to_dict()) == dumps_json(b.to_dict())
    assert "wall_time" in a.to_dict(timing=True)["provenance"]


def test_dichotomy_quadratic_unstable():
    r = run_stability_dichotomy(QUAD, MarkedPoint(0), res=128, depth=5)
    assert r.outputs["classification"] == "unstable"
    assert r.outputs["prep_parameters_near_support"] >= 10
    assert r.passed


def test_dichotomy_persistent():
    r = run_stability_dichotomy(Z2, MarkedPoint(0))
    assert r.outputs["classification"] == "persistent"
    assert r.outputs["certificate"] == [0, 1]


def test_dichotomy_isotrivial_point():
    r = run_stability_dichotomy(Z2, MarkedPoint([0, 1]), rect=(-2, 2, -2, 2), res=128, depth=4)
    assert r.outputs["classification"] == "unstable"
    assert r.outputs["total_mass"]["value"] == pytest.approx(1.0, abs=0.01)


def test_dichotomy_stable_within_resolution():
    # a point that is not preperiodic and whose potential is harmonic: the
    # constant point 2 for z^2 has g = log 2 everywhere
    r = run_stability_dichotomy(Z2, MarkedPoint(2), res=64, depth=3)
    assert r.outputs["classification"].startswith("stable within resolution")


def test_pcf_density_small():
    r = run_unicritical_pcf_density(2, 4, res=128)
    assert r.outputs["center_counts"] == [1, 2, 4, 8]
    assert r.verdicts["center_counts"] and r.verdicts["roots_simple"]


def test_pcf_density_single_center():
    r = run_unicritical_pcf_density(2, 1, res=64)
    assert r.outputs["distinct_centers"] == 1
    assert r.outputs["discrepancy_by_level"]["3"] > 0.5


def test_pcf_density_cubic():
    r = run_unicritical_pcf_density(3, 6, res=64)
    assert r.outputs["center_counts"] == [1, 3, 9, 27, 81, 243]
    assert r.verdicts["roots_in_escape_disk"]


def test_double_mandelbrot_shift_zero():
    r = run_double_mandelbrot(0, rect=(-2.5, 1.5, -2, 2), res=64, depth=3)
    m = r.outputs["min_potential"]
    assert abs(m["value"]) <= m["tol"]
    assert not r.verdicts["simultaneous_empty"]
    assert r.outputs["simultaneous_prep_counts"][-1] > 0
    assert r.warnings


def test_double_mandelbrot_overlap_warns():
    r = run_double_mandelbrot(1, rect=(-3.5, 1.5, -2, 2), res=32, depth=2)
    assert any("overlap" in w for w in r.warnings)


def test_simultaneous_prep_identical_points():
    r = run_simultaneous_prep(QUAD, MarkedPoint(0), MarkedPoint(0), 4)
    assert r.outputs["counts_by_depth"] == [1, 2, 6, 17]
    assert r.verdicts["orbit_test"]


def test_simultaneous_prep_distinct_points():
    r = run_simultaneous_prep(QUAD, MarkedPoint(0), MarkedPoint(1), 4)
    for s in r.outputs["points"]:
        assert min(orbit_return_distance(QUAD, MarkedPoint(0), s, m, n)
                   for m in range(4) for n in range(1, 5 - m)) < ORBIT_TOL


def test_simultaneous_prep_dynamically_related():
    r = run_simultaneous_prep(Z2, MarkedPoint([0, 1]), MarkedPoint([0, 0, 1]), 3)
    pts = r.outputs["points"]
    assert any(abs(p) < 1e-12 for p in pts)
    assert all(abs(p) < 1e-12 or abs(abs(p) - 1) < 1e-12 for p in pts)
    assert len(pts) >= 10


def test_common_prep_table():
    z2, cheb = builtin_family("z2")[0], builtin_family("cheb2")[0]
    r = run_common_prep_table([(z2, cheb, "a"), (z2, z2, "b")], depth=4)
    rows = r.outputs["rows"]
    assert rows[0]["count"] >= 3 and rows[0]["stabilized"]
    assert rows[1]["flag"] == "identical prep sets"
