"""Packaged, reproducible scenarios.

Each ``run_*`` function returns an :class:`ExperimentReport` whose
``verdicts`` map clause names to booleans.  Reports are deterministic:
wall time is kept out of the serialized form unless asked for.
"""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .descriptor import builtin_family
from .exact import GaussianRational, poly_gcd
from .family import MapFamily, MarkedPoint
from .green import marked_potential_grid, product_potential_grid
from .measures import (
    SUPPORT_FACTOR,
    box_discrepancy,
    ddc,
    empirical_measure,
    support_mask,
)
from .preperiodic import (
    ORBIT_TOL,
    PersistentlyPreperiodic,
    _dedup,
    common_preperiodic,
    is_persistently_preperiodic,
    orbit_return_distance,
    prep_equation,
    prep_pairs,
    solve_parameters,
)
from .roots import solve_polynomial

log = logging.getLogger(__name__)

__all__ = [
    "ExperimentReport",
    "run_stability_dichotomy",
    "run_unicritical_pcf_density",
    "run_double_mandelbrot",
    "run_simultaneous_prep",
    "run_common_prep_table",
    "MANDELBROT_RECT",
    "DOUBLE_RECT",
]

MANDELBROT_RECT = (-2.5, 1.5, -2.0, 2.0)
DOUBLE_RECT = (-13.0, 3.0, -3.0, 3.0)
CENTER_DEDUP = 1e-10
DENSE_WITNESSES = 10


@dataclass
class ExperimentReport:
    scenario: str
    inputs: dict
    outputs: dict
    verdicts: Dict[str, bool]
    provenance: dict
    warnings: List[str] = field(default_factory=list)
    wall_time: float = 0.0

    @property
    def passed(self) -> bool:
        return all(self.verdicts.values())

    def to_dict(self, timing: bool = False) -> dict:
        out = {
            "scenario": self.scenario,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "verdicts": self.verdicts,
            "provenance": dict(self.provenance),
            "warnings": self.warnings,
        }
        if timing:
            out["provenance"]["wall_time"] = self.wall_time
        return out


def _quad():
    return builtin_family("quad")[0]


def _measured(value, tol):
    return {"value": value, "tol": tol}


def _dilate(mask: np.ndarray, r: int) -> np.ndarray:
    out = mask.copy()
    for _ in range(r):
        grown = out.copy()
        grown[1:, :] |= out[:-1, :]
        grown[:-1, :] |= out[1:, :]
        grown[:, 1:] |= out[:, :-1]
        grown[:, :-1] |= out[:, 1:]
        out = grown
    return out


def _cell_index(points, rect, nx, ny):
    x0, x1, y0, y1 = rect
    pts = np.asarray(points, dtype=complex)
    inside = (pts.real >= x0) & (pts.real <= x1) & (pts.imag >= y0) & (pts.imag <= y1)
    i = np.clip(np.floor((pts.real - x0) / (x1 - x0) * nx).astype(int), 0, nx - 1)
    j = np.clip(np.floor((pts.imag - y0) / (y1 - y0) * ny).astype(int), 0, ny - 1)
    return inside, i, j


def _prep_parameters(fam, a, depth):
    """Distinct preperiodic parameters with their first witness and orbit distance."""
    items = []
    for m, n in prep_pairs(depth):
        try:
            eq = prep_equation(fam, a, m, n)
        except PersistentlyPreperiodic:
            continue
        for r in solve_parameters(eq):
            items.append((r.value, m + n, (m, n)))
    merged = _dedup(items)
    out = []
    for value, label, (m, n) in merged:
        out.append((value, label, (m, n), orbit_return_distance(fam, a, value, m, n)))
    return out


def _res(res) -> Tuple[int, int]:
    return (res, res) if isinstance(res, int) else tuple(res)


# ---------------------------------------------------------------------------


def run_stability_dichotomy(fam: MapFamily, a: MarkedPoint, rect=MANDELBROT_RECT, res=256,
                            depth: int = 5, tol: float = 1e-8, threads: int = 1,
                            label: str = "") -> ExperimentReport:
    """Classify a marked point as persistent, unstable, or stable within resolution."""
    t0 = time.perf_counter()
    nx, ny = _res(res)
    inputs = {"family": str(fam), "label": label, "marked_point": str(a), "rect": list(rect),
              "res": [nx, ny], "depth": depth, "tol": tol}
    status = is_persistently_preperiodic(fam, a, depth)
    if status.persistent:
        report = ExperimentReport(
            "stability-dichotomy", inputs,
            {"classification": "persistent", "certificate": [status.m, status.n]},
            {"persistent_certified": True}, {"method": "exact zero cross product"})
        report.wall_time = time.perf_counter() - t0
        return report
    pot = marked_potential_grid(fam, a, rect, nx, ny, tol, threads)
    mu = ddc(pot)
    threshold = SUPPORT_FACTOR * mu.slack
    near = _dilate(support_mask(mu), 2)
    params = _prep_parameters(fam, a, depth)
    inside, i, j = _cell_index([p[0] for p in params], pot.rect, nx, ny)
    in_support = inside & near[j, i]
    counts = [sum(1 for p in params if p[1] <= k) for k in range(1, depth + 1)]
    n_support = int(in_support.sum())
    orbit_ok = all(p[3] <= ORBIT_TOL for p in params)
    unstable = mu.total > threshold
    if unstable:
        classification = "unstable"
    else:
        classification = ("stable within resolution; the dichotomy predicts isotriviality "
                          "or persistence (not certified)")
    outputs = {
        "classification": classification,
        "total_mass": _measured(mu.total, mu.slack * mu.nx * mu.ny),
        "support_threshold": threshold,
        "prep_parameters_by_depth": counts,
        "prep_parameters_near_support": n_support,
        "prep_parameters_in_rect": int(inside.sum()),
        "max_orbit_distance": max((p[3] for p in params), default=0.0),
    }
    verdicts = {"orbit_test": orbit_ok}
    if unstable:
        verdicts["dense_witnesses"] = n_support >= DENSE_WITNESSES
        verdicts["counts_growing"] = depth < 2 or counts[-1] > counts[-2]
    report = ExperimentReport("stability-dichotomy", inputs, outputs, verdicts,
                              {"grid_error": pot.error, "max_iterations": pot.iterations,
                               "masked_cells": int(pot.mask.sum())})
    report.wall_time = time.perf_counter() - t0
    return report


def run_unicritical_pcf_density(d: int = 2, n_max: int = 10, rect=MANDELBROT_RECT, res=512,
                                tol: float = 1e-8, threads: int = 1) -> ExperimentReport:
    """Centers of ``z^d + s`` against the bifurcation measure."""
    t0 = time.perf_counter()
    nx, ny = _res(res)
    fam, marked, label = builtin_family(f"unicritical:{d}")
    a = marked["crit"]
    counts, max_modulus, max_residual, all_simple = [], 0.0, 0.0, True
    centers: List[Tuple[complex, int]] = []
    unconverged = 0
    for n in range(1, n_max + 1):
        roots = solve_parameters(prep_equation(fam, a, 0, n))
        counts.append(roots.count_with_multiplicity())
        unconverged += len(roots.unconverged)
        for r in roots:
            centers.append((r.value, n, None))
            max_modulus = max(max_modulus, abs(r.value))
            max_residual = max(max_residual, r.residual)
            all_simple &= r.simple
    distinct = _dedup(centers, CENTER_DEDUP)
    pot = marked_potential_grid(fam, a, rect, nx, ny, tol, threads)
    mu = ddc(pot)
    emp = empirical_measure([c[0] for c in distinct], pot.rect, nx, ny)
    levels = [L for L in range(1, 6) if nx % (1 << L) == 0 and ny % (1 << L) == 0]
    discrepancy = {str(L): box_discrepancy(mu, emp, L) for L in levels}
    low = ~support_mask(mu)
    inside, i, j = _cell_index([c[0] for c in distinct], pot.rect, nx, ny)
    outside_support = []
    for cut in (4, 6, 8, 10):
        if cut > n_max:
            continue
        sel = np.array([c[1] <= cut for c in distinct]) & inside
        frac = float((low[j[sel], i[sel]]).mean()) if sel.any() else math.nan
        outside_support.append([cut, frac])
    fracs = [f for _, f in outside_support]
    expected = [d ** (n - 1) for n in range(1, n_max + 1)]
    radius = 2 ** (1 / (d - 1)) + 1
    outputs = {
        "center_counts": counts,
        "distinct_centers": len(distinct),
        "max_center_modulus": max_modulus,
        "max_residual": max_residual,
        "bifurcation_mass": _measured(mu.total, mu.slack * nx * ny),
        "discrepancy_by_level": discrepancy,
        "fraction_outside_support": outside_support,
    }
    verdicts = {
        "center_counts": counts == expected and unconverged == 0,
        "roots_in_escape_disk": max_modulus <= radius,
        "roots_simple": all_simple,
    }
    if n_max >= 10 and "3" in discrepancy:
        verdicts["equidistribution_level3"] = discrepancy["3"] <= 0.10
    if len(fracs) >= 2:
        verdicts["support_fraction_decreasing"] = all(
            b <= a for a, b in zip(fracs, fracs[1:]))
    inputs = {"d": d, "n_max": n_max, "rect": list(rect), "res": [nx, ny], "tol": tol,
              "dedup_tol": CENTER_DEDUP}
    report = ExperimentReport("pcf-density", inputs, outputs, verdicts,
                              {"grid_error": pot.error, "max_iterations": pot.iterations,
                               "support_threshold": SUPPORT_FACTOR * mu.slack})
    report.wall_time = time.perf_counter() - t0
    return report


def _equation_family(fam, a, depth):
    eqs = {}
    for m, n in prep_pairs(depth):
        try:
            eqs[(m, n)] = prep_equation(fam, a, m, n)
        except PersistentlyPreperiodic:
            continue
    return eqs


def _exact_intersection(fam, a, fam_b, b, depth):
    """Common roots of the two equation families via exact gcds.

    Returns ``(points, counts, nontrivial_gcds)`` with points given as
    ``(value, label, ((m, n), (m', n')))``.
    """
    eqs_a = _equation_family(fam, a, depth)
    eqs_b = _equation_family(fam_b, b, depth)
    items, nontrivial = [], 0
    for ka, ea in eqs_a.items():
        for kb, eb in eqs_b.items():
            g = poly_gcd(ea.poly, eb.poly)
            if g.degree <= 0:
                continue
            nontrivial += 1
            for r in solve_polynomial(g):
                items.append((r.value, max(sum(ka), sum(kb)), (ka, kb)))
    merged = _dedup(items)
    counts = [sum(1 for e in merged if e[1] <= k) for k in range(1, depth + 1)]
    return merged, counts, nontrivial


def run_double_mandelbrot(shift=10, rect=DOUBLE_RECT, res=512, depth: int = 5,
                          tol: float = 1e-8, threads: int = 1) -> ExperimentReport:
    """``max(G_s(0), G_{s+shift}(0))``: instability without preperiodic points."""
    t0 = time.perf_counter()
    shift = GaussianRational.coerce(shift)
    nx, ny = _res(res)
    warnings = []
    if abs(complex(shift)) <= 4:
        warnings.append(f"|shift| = {abs(complex(shift)):g} <= 4: the two Mandelbrot copies "
                        "may overlap; results are report-only")
        log.warning(warnings[-1])
    quad = _quad()
    a = MarkedPoint(0)
    pot = product_potential_grid([(quad, a, 0), (quad, a, shift)], rect, nx, ny, tol, threads)
    mu = ddc(pot)
    finite = pot.values[~pot.mask]
    vmin = float(finite.min()) if finite.size else math.nan
    shifted = quad.shift(shift)
    merged, counts, nontrivial = _exact_intersection(quad, a, shifted, a, depth)
    outputs = {
        "min_potential": _measured(vmin, pot.error),
        "total_mass": _measured(mu.total, mu.slack * nx * ny),
        "simultaneous_prep_counts": counts,
        "simultaneous_prep_points": [e[0] for e in merged][:64],
        "nontrivial_gcds": nontrivial,
    }
    verdicts = {
        "min_potential_positive": vmin > 10 * pot.error,
        "mass_half": abs(mu.total - 0.5) <= 0.025,
        "simultaneous_empty": nontrivial == 0,
    }
    inputs = {"shift": str(shift), "rect": list(rect), "res": [nx, ny], "depth": depth,
              "tol": tol}
    report = ExperimentReport("double-mandelbrot", inputs, outputs, verdicts,
                              {"grid_error": pot.error, "max_iterations": pot.iterations,
                               "masked_cells": int(pot.mask.sum()),
                               "gcd_method": "exact over Q(i), modular coprimality screen"},
                              warnings)
    report.wall_time = time.perf_counter() - t0
    return report


def run_simultaneous_prep(fam: MapFamily, a: MarkedPoint, b: MarkedPoint, depth: int = 4,
                          label: str = "") -> ExperimentReport:
    """Parameters where two marked points are both preperiodic."""
    t0 = time.perf_counter()
    inputs = {"family": str(fam), "label": label, "a": str(a), "b": str(b), "depth": depth}
    pa = is_persistently_preperiodic(fam, a, depth)
    pb = is_persistently_preperiodic(fam, b, depth)
    warnings = []
    if pa.persistent or pb.persistent:
        # a persistent point imposes no condition: the set is the other point's
        other = b if pa.persistent else a
        warnings.append("one marked point is persistently preperiodic")
        params = _prep_parameters(fam, other, depth)
        merged = [(v, lab, (None, w)) for v, lab, w, _ in params]
        counts = [sum(1 for p in params if p[1] <= k) for k in range(1, depth + 1)]
    else:
        merged, counts, _ = _exact_intersection(fam, a, fam, b, depth)
    ok = []
    for value, _, (wa, wb) in merged:
        da = orbit_return_distance(fam, a, value, *wa) if wa else 0.0
        db = orbit_return_distance(fam, b, value, *wb) if wb else 0.0
        ok.append(da <= ORBIT_TOL and db <= ORBIT_TOL)
    outputs = {
        "counts_by_depth": counts,
        "points": [e[0] for e in merged],
        "stabilized": len(counts) >= 2 and counts[-1] == counts[-2],
    }
    report = ExperimentReport("simultaneous-prep", inputs, outputs, {"orbit_test": all(ok)},
                              {"method": "exact gcd over Q(i)"}, warnings)
    report.wall_time = time.perf_counter() - t0
    return report


def run_common_prep_table(pairs: Sequence, depth: int = 5) -> ExperimentReport:
    """Stabilized common-preperiodic counts for a list of ``(f, g, label)`` pairs."""
    t0 = time.perf_counter()
    rows = []
    all_ok = True
    for f, g, label in pairs:
        res = common_preperiodic(f, g, depth)
        identical = f == g
        growing = not res.stabilized
        all_ok &= all(res.orbit_ok)
        rows.append({
            "label": label,
            "counts_by_depth": res.counts,
            "count": res.counts[-1],
            "points": res.points,
            "infinity_common": res.infinity,
            "stabilized": res.stabilized,
            "flag": "identical prep sets" if identical else ("still growing" if growing else ""),
        })
    bound = max((r["count"] for r in rows if not r["flag"]), default=0)
    outputs = {"rows": rows, "max_stabilized_count": bound}
    report = ExperimentReport("common-prep-table",
                              {"pairs": [p[2] for p in pairs], "depth": depth},
                              outputs, {"orbit_test": all_ok},
                              {"method": "exact gcd over Q(i)"})
    report.wall_time = time.perf_counter() - t0
    return report
