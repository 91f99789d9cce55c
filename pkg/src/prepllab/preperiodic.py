"""Preperiodicity equations, their certified roots, and common preperiodic points.

The equation for tail ``m`` and period ``n`` is the cross product
``A_{m+n} B_m - A_m B_{m+n}`` of the exact iterates of a marked point,
made monic.  Its roots are the parameters where ``f_s^{m+n}(a(s))`` and
``f_s^m(a(s))`` coincide on the projective line.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import mpmath
import numpy as np

from .exact import ParamPolynomial, poly_gcd, poly_lcm
from .family import (
    ITERATION_CAP,
    DegenerateFiber,
    FamilyError,
    FiberMap,
    MapFamily,
    MarkedPoint,
    orbit,
    specialize,
)
from .roots import Jet, RootSet, _mp_coeffs, solve_polynomial

__all__ = [
    "PersistentlyPreperiodic",
    "PrepEquation",
    "Persistence",
    "CommonPrep",
    "prep_equation",
    "is_persistently_preperiodic",
    "solve_parameters",
    "preperiodic_points_map",
    "common_preperiodic",
    "orbit_return_distance",
    "chordal_distance",
    "prep_pairs",
    "ORBIT_TOL",
    "MATCH_TOL",
]

ORBIT_TOL = 1e-6
MATCH_TOL = 1e-8
DEDUP_TOL = 1e-9


class PersistentlyPreperiodic(Exception):
    """The preperiodicity identity holds for every parameter."""

    def __init__(self, m: int, n: int):
        super().__init__(f"marked point is persistently preperiodic with (m, n) = ({m}, {n})")
        self.m = m
        self.n = n


@dataclass(frozen=True)
class PrepEquation:
    poly: ParamPolynomial
    m: int
    n: int
    deflated: bool = False
    evaluator: Optional[Callable] = field(default=None, repr=False, compare=False)

    @property
    def degree(self) -> int:
        return self.poly.degree


@dataclass(frozen=True)
class Persistence:
    persistent: bool
    m: Optional[int]
    n: Optional[int]
    bound: int


def prep_pairs(depth: int):
    """All ``(m, n)`` with ``n >= 1`` and ``m + n <= depth``, by total then tail."""
    return [(t - n, n) for t in range(1, depth + 1) for n in range(t, 0, -1)]


def _cross(fam: MapFamily, a: MarkedPoint, m: int, n: int, cap: int):
    orb = orbit(fam, a, m + n, cap)
    zm, zmn = orb.points[m], orb.points[m + n]
    return zmn.A * zm.B - zm.A * zmn.B, orb


def _jet_horner(coeffs, s: Jet):
    acc = Jet(coeffs[-1] + 0 * s.v, 0 * s.v, 0 * s.v) if coeffs else Jet(0 * s.v, 0 * s.v, 0 * s.v)
    for c in reversed(coeffs[:-1]):
        acc = acc * s + c
    return acc


def _apply_jets(pc, qc, d, A, B):
    apow = [None, A]
    bpow = [None, B]
    for _ in range(d - 1):
        apow.append(apow[-1] * A)
        bpow.append(bpow[-1] * B)
    outP = outQ = None
    for k in range(d + 1):
        if k == 0:
            mono = bpow[d]
        elif k == d:
            mono = apow[d]
        else:
            mono = apow[k] * bpow[d - k]
        tp, tq = pc[k] * mono, qc[k] * mono
        outP = tp if outP is None else outP + tp
        outQ = tq if outQ is None else outQ + tq
    return outP, outQ


def _orbit_evaluator(fam: MapFamily, a: MarkedPoint, m: int, n: int, orb, kappa):
    """Evaluate the prep polynomial by numerically iterating the orbit.

    Valid when every iterate was normalized by a scalar only; the
    numeric iterates then match the exact ones step by step.
    """
    scalars = orb.scalars[1:m + n + 1]
    polys = list(fam.P) + list(fam.Q) + [a.A, a.B]
    cplx = [p.complex_coeffs() for p in polys]
    mp_cache: Dict[int, tuple] = {}
    d = fam.d

    def evaluate(s: Jet, mode: str):
        if mode == "np":
            cs = cplx
        else:
            key = mpmath.mp.prec
            if key not in mp_cache:
                mp_cache[key] = ([_mp_coeffs(p.coeffs) for p in polys],
                                 [_mp_coeffs([c])[0] for c in scalars],
                                 _mp_coeffs([kappa])[0])
            cs = mp_cache[key][0]
        pc = [_jet_horner(c, s) for c in cs[:d + 1]]
        qc = [_jet_horner(c, s) for c in cs[d + 1:2 * d + 2]]
        A = _jet_horner(cs[-2], s)
        B = _jet_horner(cs[-1], s)
        Am, Bm = A, B
        for k in range(1, m + n + 1):
            A, B = _apply_jets(pc, qc, d, A, B)
            if mode == "np":
                mag = np.maximum.reduce([np.abs(x) for x in
                                         (A.v, A.d1, A.d2, B.v, B.d1, B.d2)])
                _, e = np.frexp(np.where(mag > 0, mag, 1.0))
                f = np.ldexp(1.0, -e)
                A, B = A * f, B * f
            else:
                c = mp_cache[mpmath.mp.prec][1][k - 1]
                A, B = A / c, B / c
            if k == m:
                Am, Bm = A, B
        cross = A * Bm - Am * B
        if mode != "np":
            cross = cross / mp_cache[mpmath.mp.prec][2]
        return cross

    evaluate.normalized = True
    return evaluate


def prep_equation(fam: MapFamily, a: MarkedPoint, m: int, n: int, deflate: bool = False,
                  cap: int = ITERATION_CAP) -> PrepEquation:
    """Exact equation for ``f_s^{m+n}(a(s)) = f_s^m(a(s))``.

    Raises :class:`PersistentlyPreperiodic` when the identity holds for all
    ``s``.  With ``deflate``, factors shared with the equations of every
    ``(m', n')`` with ``m' <= m``, ``n' | n`` are divided out once.
    """
    if m < 0 or n < 1:
        raise ValueError("need m >= 0 and n >= 1")
    cross, orb = _cross(fam, a, m, n, cap)
    if cross.is_zero():
        raise PersistentlyPreperiodic(m, n)
    poly = cross.monic()
    evaluator = None
    if orb.gcd_free:
        evaluator = _orbit_evaluator(fam, a, m, n, orb, cross.leading())
    if not deflate:
        return PrepEquation(poly, m, n, False, evaluator)
    lower = ParamPolynomial([1])
    for mm in range(m + 1):
        for nn in range(1, n + 1):
            if n % nn or (mm, nn) == (m, n):
                continue
            lower = poly_lcm(lower, prep_equation(fam, a, mm, nn, cap=cap).poly)
    g = poly_gcd(poly, lower)
    return PrepEquation(poly.exact_div(g).monic(), m, n, True, None)


def is_persistently_preperiodic(fam: MapFamily, a: MarkedPoint, bound: int = 6,
                                cap: int = ITERATION_CAP) -> Persistence:
    """Exact check of ``f_s^{m+n}(a) = f_s^m(a)`` identically, for ``m + n <= bound``."""
    if bound < 1:
        raise ValueError("bound must be >= 1")
    for m, n in prep_pairs(bound):
        cross, _ = _cross(fam, a, m, n, cap)
        if cross.is_zero():
            return Persistence(True, m, n, bound)
    return Persistence(False, None, None, bound)


def solve_parameters(eq: PrepEquation, precision: int = 30) -> RootSet:
    """All roots of a preperiodicity equation with residuals and certificates."""
    return solve_polynomial(eq.poly, eq.evaluator, precision)


def preperiodic_points_map(f: MapFamily, m: int, n: int, deflate: bool = False,
                           cap: int = ITERATION_CAP) -> PrepEquation:
    """Equation in the dynamical variable for ``f^{m+n}(z) = f^m(z)``.

    ``f`` must be constant in the parameter; the variable ``s`` of the
    returned polynomial plays the role of ``z``.
    """
    if not f.is_constant():
        raise FamilyError("preperiodic_points_map needs a map constant in s")
    return prep_equation(f, MarkedPoint([0, 1]), m, n, deflate, cap)


# ---------------------------------------------------------------------------
# numeric orbit test


def chordal_distance(Z1, Z2) -> float:
    X1, Y1 = Z1
    X2, Y2 = Z2
    n1 = math.hypot(abs(X1), abs(Y1))
    n2 = math.hypot(abs(X2), abs(Y2))
    return abs(X1 * Y2 - X2 * Y1) / (n1 * n2)


def _normalize(X, Y):
    r = max(abs(X), abs(Y))
    return X / r, Y / r


def orbit_return_distance(fam, a: MarkedPoint, s: complex, m: int, n: int) -> float:
    """Chordal distance between ``f_s^m(a(s))`` and ``f_s^{m+n}(a(s))``.

    ``fam`` may be a :class:`MapFamily` (specialized at ``s``) or a
    :class:`FiberMap`.
    """
    if isinstance(fam, FiberMap):
        f = fam
    else:
        try:
            f = specialize(fam, s)
        except DegenerateFiber:
            return math.inf
    X, Y = a.evaluate(complex(s))
    if X == 0 and Y == 0:
        return math.inf
    Z = _normalize(X, Y)
    Zm = Z
    for k in range(1, m + n + 1):
        Z = _normalize(*f(*Z))
        if k == m:
            Zm = Z
    return chordal_distance(Zm, Z)


# ---------------------------------------------------------------------------
# common preperiodic points


@dataclass
class CommonPrep:
    """Common preperiodic points found up to ``depth``.

    ``points`` are affine; ``infinity`` records whether the point at
    infinity is preperiodic for both maps.  ``counts[k - 1]`` is the number
    of points found using equations with ``m + n <= k``.
    """

    points: List[complex]
    counts: List[int]
    depth: int
    mode: str
    infinity: bool
    witnesses: List[Tuple[Tuple[int, int], Tuple[int, int]]]
    orbit_ok: List[bool]
    flags: List[str] = field(default_factory=list)

    @property
    def stabilized(self) -> bool:
        return len(self.counts) >= 2 and self.counts[-1] == self.counts[-2]


def _dedup(items, tol=DEDUP_TOL):
    """Merge ``(value, label, witness)`` items closer than ``tol`` (relative)."""
    out: list = []
    for value, label, witness in sorted(items, key=lambda t: (t[1], t[0].real, t[0].imag)):
        for entry in out:
            if abs(entry[0] - value) <= tol * max(1.0, abs(value)):
                break
        else:
            out.append([value, label, witness])
    out.sort(key=lambda e: (e[1], round(e[0].real, 12), round(e[0].imag, 12)))
    return out


def _equations(f: MapFamily, depth: int):
    z = MarkedPoint([0, 1])
    eqs = {}
    for m, n in prep_pairs(depth):
        try:
            eqs[(m, n)] = prep_equation(f, z, m, n)
        except PersistentlyPreperiodic:
            continue
    return eqs


def _prep_points(eqs, depth):
    items = []
    for (m, n), eq in eqs.items():
        for r in solve_parameters(eq):
            items.append((r.value, m + n, (m, n)))
    return _dedup(items)


def common_preperiodic(f: MapFamily, g: MapFamily, depth: int, mode: str = "exact") -> CommonPrep:
    """Common preperiodic points of two maps, found through ``m + n <= depth``.

    ``mode="exact"`` intersects the preperiodicity equations by exact gcds
    over Q(i) and solves the gcds numerically.  ``mode="numeric"`` solves
    each equation and pairs roots by mutual nearest neighbours within
    :data:`MATCH_TOL`; ambiguous pairings are flagged, not resolved.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    for h in (f, g):
        if not h.is_constant():
            raise FamilyError("common_preperiodic needs maps constant in s")
    eqs_f = _equations(f, depth)
    eqs_g = _equations(g, depth)
    flags: List[str] = []
    if mode == "exact":
        items = []
        for (m, n), ef in eqs_f.items():
            for (mm, nn), eg in eqs_g.items():
                gcd = poly_gcd(ef.poly, eg.poly)
                if gcd.degree <= 0:
                    continue
                label = max(m + n, mm + nn)
                for r in solve_polynomial(gcd):
                    items.append((r.value, label, ((m, n), (mm, nn))))
        merged = _dedup(items)
    elif mode == "numeric":
        pf = _prep_points(eqs_f, depth)
        pg = _prep_points(eqs_g, depth)
        merged = []
        if pf and pg:
            vf = np.array([p[0] for p in pf])
            vg = np.array([p[0] for p in pg])
            dist = np.abs(vf[:, None] - vg[None, :])
            for i in range(len(pf)):
                j = int(np.argmin(dist[i]))
                if dist[i, j] > MATCH_TOL or int(np.argmin(dist[:, j])) != i:
                    continue
                if (dist[i] <= MATCH_TOL).sum() > 1 or (dist[:, j] <= MATCH_TOL).sum() > 1:
                    flags.append(f"ambiguous match near {complex(vf[i])!r}")
                    continue
                merged.append([complex(vf[i]), max(pf[i][1], pg[j][1]), (pf[i][2], pg[j][2])])
        merged.sort(key=lambda e: (e[1], round(e[0].real, 12), round(e[0].imag, 12)))
        flags.append("numeric matching")
    else:
        raise ValueError(f"unknown mode {mode!r}")

    z = MarkedPoint([0, 1])
    orbit_ok = []
    for value, _, ((m, n), (mm, nn)) in merged:
        df = orbit_return_distance(f, z, value, m, n)
        dg = orbit_return_distance(g, z, value, mm, nn)
        orbit_ok.append(df <= ORBIT_TOL and dg <= ORBIT_TOL)
    counts = [sum(1 for e in merged if e[1] <= k) for k in range(1, depth + 1)]
    inf = MarkedPoint.infinity()
    infinity = (is_persistently_preperiodic(f, inf, depth).persistent
                and is_persistently_preperiodic(g, inf, depth).persistent)
    return CommonPrep(
        points=[e[0] for e in merged],
        counts=counts,
        depth=depth,
        mode=mode,
        infinity=infinity,
        witnesses=[e[2] for e in merged],
        orbit_ok=orbit_ok,
        flags=flags,
    )
