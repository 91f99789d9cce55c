"""Simultaneous polynomial root finding with a posteriori certificates.

Roots are located by Aberth-Ehrlich iteration in double precision, polished
by Newton steps in mpmath, and certified with the alpha-test
``|p| |p''| / |p'|**2 < 1/4`` at the returned value.  Multiplicities come
from an exact squarefree decomposition, so every reported root belongs to
one squarefree factor and the count with multiplicity equals the degree.

Polynomials may carry their own *evaluator*: a callable mapping a
:class:`Jet` in ``s`` to the jet of ``p(s)``, up to a nonzero constant
factor.  Iterated-orbit polynomials use this to avoid coefficient
evaluation, which is hopelessly ill-conditioned beyond degree ~50.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import mpmath
import numpy as np

from .exact import ParamPolynomial, squarefree_decomposition

__all__ = [
    "CertifiedRoot",
    "RootSet",
    "Jet",
    "solve_polynomial",
    "coefficient_evaluator",
]

ABERTH_MAX_ITER = 2000
NEWTON_POLISH_STEPS = 8


class Jet:
    """Second-order Taylor jet ``(f, f', f'')`` in one variable.

    Components may be numpy arrays or mpmath numbers.
    """

    __slots__ = ("v", "d1", "d2")

    def __init__(self, v, d1=0, d2=0):
        self.v, self.d1, self.d2 = v, d1, d2

    @classmethod
    def variable(cls, s):
        return cls(s, 1 + 0 * s, 0 * s)

    def __add__(self, o):
        if isinstance(o, Jet):
            return Jet(self.v + o.v, self.d1 + o.d1, self.d2 + o.d2)
        return Jet(self.v + o, self.d1, self.d2)

    __radd__ = __add__

    def __sub__(self, o):
        if isinstance(o, Jet):
            return Jet(self.v - o.v, self.d1 - o.d1, self.d2 - o.d2)
        return Jet(self.v - o, self.d1, self.d2)

    def __rsub__(self, o):
        return Jet(o - self.v, -self.d1, -self.d2)

    def __neg__(self):
        return Jet(-self.v, -self.d1, -self.d2)

    def __mul__(self, o):
        if isinstance(o, Jet):
            return Jet(self.v * o.v,
                       self.d1 * o.v + self.v * o.d1,
                       self.d2 * o.v + 2 * self.d1 * o.d1 + self.v * o.d2)
        return Jet(self.v * o, self.d1 * o, self.d2 * o)

    __rmul__ = __mul__

    def __truediv__(self, c):
        return Jet(self.v / c, self.d1 / c, self.d2 / c)


def _mp_coeffs(coeffs):
    return [mpmath.mpc(mpmath.mpf(c.re.numerator) / c.re.denominator,
                       mpmath.mpf(c.im.numerator) / c.im.denominator) for c in coeffs]


def coefficient_evaluator(poly: ParamPolynomial) -> Callable:
    """Evaluator by Horner's rule on the exact coefficients."""
    cplx = poly.complex_coeffs()
    cache = {}

    def evaluate(s: Jet, mode: str):
        if mode == "np":
            cs = cplx
        else:
            cs = cache.get(mpmath.mp.prec)
            if cs is None:
                cs = cache[mpmath.mp.prec] = _mp_coeffs(poly.coeffs)
        acc = Jet(cs[-1] + 0 * s.v, 0 * s.v, 0 * s.v)
        for c in reversed(cs[:-1]):
            acc = acc * s + c
        return acc

    evaluate.normalized = True
    evaluate.coefficients = True
    return evaluate


@dataclass(frozen=True)
class CertifiedRoot:
    value: complex
    residual: float
    separation: float
    multiplicity_flag: str  # "simple" or "cluster"
    multiplicity: int = 1
    alpha: float = 0.0

    @property
    def simple(self) -> bool:
        return self.multiplicity_flag == "simple"


@dataclass
class RootSet:
    """Result of a solve: certified roots plus any that failed to converge."""

    roots: List[CertifiedRoot]
    degree: int
    unconverged: List[complex] = field(default_factory=list)

    @property
    def complete(self) -> bool:
        return not self.unconverged and self.count_with_multiplicity() == self.degree

    def count_with_multiplicity(self) -> int:
        return sum(r.multiplicity for r in self.roots)

    def values(self) -> np.ndarray:
        return np.array([r.value for r in self.roots], dtype=complex)

    def __iter__(self):
        return iter(self.roots)

    def __len__(self):
        return len(self.roots)


# ---------------------------------------------------------------------------


def _root_radius(poly: ParamPolynomial) -> float:
    """Fujiwara bound on the root moduli."""
    c = poly.complex_coeffs()
    n = len(c) - 1
    lead = abs(c[-1])
    best = 0.0
    for k in range(n):
        if c[k] != 0:
            r = (abs(c[k]) / lead) ** (1.0 / (n - k))
            if k == 0:
                r *= 0.5 ** (1.0 / n)
            best = max(best, r)
    return 2.0 * best if best > 0 else 1.0


def _aberth(evaluate, degree: int, radius: float):
    n = degree
    k = np.arange(n)
    z = radius * np.exp(1j * (2 * np.pi * k / n + 0.4))
    done = np.zeros(n, dtype=bool)
    for _ in range(ABERTH_MAX_ITER):
        j = evaluate(Jet.variable(z), "np")
        with np.errstate(all="ignore"):
            ratio = j.v / j.d1
            diff = z[:, None] - z[None, :]
            np.fill_diagonal(diff, 1.0)
            inv = 1.0 / diff
            np.fill_diagonal(inv, 0.0)
            corr = ratio / (1.0 - ratio * inv.sum(axis=1))
        corr = np.where(np.isfinite(corr), corr, 0.0)
        exact_zero = j.v == 0
        corr = np.where(exact_zero | done, 0.0, corr)
        z = z - corr
        done |= np.abs(corr) <= 4e-16 * np.maximum(np.abs(z), 1e-300)
        if done.all():
            break
    return z, done


def _mp_jet(evaluate, s):
    return evaluate(Jet(mpmath.mpc(s), mpmath.mpc(1), mpmath.mpc(0)), "mp")


def _polish(evaluate, z0: complex, steps: int):
    s = mpmath.mpc(z0)
    for _ in range(steps):
        j = _mp_jet(evaluate, s)
        if j.d1 == 0:
            break
        step = j.v / j.d1
        s = s - step
        if abs(step) <= abs(s) * mpmath.mpf(2) ** (-mpmath.mp.prec + 8):
            break
    return s


def _solve_squarefree(factor: ParamPolynomial, evaluate, digits: int):
    deg = factor.degree
    if deg == 1:
        c0, c1 = factor.coeffs
        return [complex(-c0 / c1)], []
    radius = _root_radius(factor)
    z, done = _aberth(evaluate, deg, radius)
    out, failed = [], []
    guard = _guard_digits(factor, radius) if getattr(evaluate, "coefficients", False) else 10
    with mpmath.workdps(digits + guard):
        for zi, ok in zip(z, done):
            if not np.isfinite(zi):
                failed.append(complex(zi))
                continue
            polished = _polish(evaluate, complex(zi), NEWTON_POLISH_STEPS)
            val = complex(polished)
            if not ok and abs(val - zi) > 1e-6 * max(1.0, abs(zi)):
                failed.append(complex(zi))
                continue
            out.append(val)
    return out, failed


def _guard_digits(poly: ParamPolynomial, r: float) -> int:
    """Decimal digits lost to cancellation in Horner's rule for ``|s| <= r``."""
    mags = [abs(complex(c)) for c in poly.coeffs]
    r = max(r, 1.0)
    bulk = max((math.log10(m) + k * math.log10(r) for k, m in enumerate(mags) if m > 0),
               default=0.0) + math.log10(len(mags) + 1)
    return max(0, int(math.ceil(bulk))) + 10


def _mp_abs_jet(poly_exact: ParamPolynomial, s: complex, digits: int):
    """``(|p|, |p'|, |p''|)`` at ``s`` computed in mpmath with enough guard digits
    to absorb the cancellation in Horner's rule."""
    with mpmath.workdps(digits + _guard_digits(poly_exact, abs(s))):
        j = coefficient_evaluator(poly_exact)(
            Jet(mpmath.mpc(s), mpmath.mpc(1), mpmath.mpc(0)), "mp")
        return float(abs(j.v)), float(abs(j.d1)), float(abs(j.d2))


def solve_polynomial(poly: ParamPolynomial, evaluator: Optional[Callable] = None,
                     precision: int = 30) -> RootSet:
    """All complex roots of an exact nonzero polynomial, with certificates.

    ``evaluator`` (optional) evaluates ``poly`` up to a nonzero constant; it
    is used only when ``poly`` is squarefree.  ``precision`` is the number
    of decimal digits used for polishing and residual evaluation.
    """
    if poly.is_zero():
        raise ValueError("cannot solve the zero polynomial")
    degree = poly.degree
    if degree == 0:
        return RootSet([], 0)
    factors = squarefree_decomposition(poly)
    values, mults, failed = [], [], []
    for factor, mult in factors:
        if factor.degree == poly.degree and evaluator is not None:
            ev = evaluator
        else:
            ev = coefficient_evaluator(factor)
        found, bad = _solve_squarefree(factor, ev, precision)
        values.extend(found)
        mults.extend([mult] * len(found))
        failed.extend(bad)
    roots = []
    arr = np.array(values, dtype=complex)
    direct = evaluator is not None and getattr(evaluator, "normalized", False)
    for idx, (val, mult) in enumerate(zip(values, mults)):
        if len(arr) > 1:
            sep = float(np.min(np.abs(np.delete(arr, idx) - val)))
        else:
            sep = math.inf
        if direct:
            with mpmath.workdps(precision):
                j = _mp_jet(evaluator, val)
                pv, p1, p2 = float(abs(j.v)), float(abs(j.d1)), float(abs(j.d2))
        else:
            pv, p1, p2 = _mp_abs_jet(poly, val, precision)
        if mult == 1:
            # the jet stores f'' itself; the alpha test uses |p''|
            alpha = pv * p2 / (p1 * p1) if p1 > 0 else math.inf
            alpha *= 1 + 1e-12
            flag = "simple" if alpha < 0.25 else "cluster"
        else:
            alpha = math.inf
            flag = "cluster"
        residual = pv * (1 + 1e-12)
        roots.append(CertifiedRoot(val, residual, sep, flag, mult, alpha))
    roots.sort(key=lambda r: (r.value.real, r.value.imag))
    return RootSet(roots, degree, failed)

