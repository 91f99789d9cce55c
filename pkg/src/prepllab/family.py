"""Algebraic families of self-maps of the projective line over the s-line.

A family is a pair of homogeneous forms ``P(X, Y)``, ``Q(X, Y)`` of degree
``d`` whose coefficients are :class:`~prepllab.exact.ParamPolynomial`.
Forms are stored as tuples indexed by the power of ``X``, i.e.
``P = sum(P[k] * X**k * Y**(d - k))``.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from .exact import (
    GaussianRational,
    ParamPolynomial,
    exact_determinant,
    horner,
    poly_gcd,
)

__all__ = [
    "DegenerateFiber",
    "FamilyError",
    "IterationCapExceeded",
    "MapFamily",
    "MarkedPoint",
    "FiberMap",
    "resultant_locus",
    "specialize",
    "iterate_marked",
    "orbit",
    "critical_polynomial",
    "DEGENERACY_TOL",
    "ITERATION_CAP",
]

#: Relative resultant threshold below which a fiber counts as degenerate.
DEGENERACY_TOL = 1e-12
#: Maximum number of stored coefficients in a symbolic iterate.
ITERATION_CAP = 10 ** 7


class FamilyError(ValueError):
    """Invalid family or marked point."""


class DegenerateFiber(ArithmeticError):
    """The fiber map at this parameter has (numerically) vanishing resultant."""

    def __init__(self, s, resultant):
        super().__init__(f"degenerate fiber at s={s}: |Res|={abs(resultant):.3g}")
        self.s = s
        self.resultant = resultant


class IterationCapExceeded(MemoryError):
    """A symbolic iterate would exceed :data:`ITERATION_CAP` coefficients."""


Form = Tuple[ParamPolynomial, ...]


def _to_poly(c) -> ParamPolynomial:
    if isinstance(c, ParamPolynomial):
        return c
    if isinstance(c, (list, tuple)):
        return ParamPolynomial(c)
    return ParamPolynomial([c])


def _as_form(coeffs, d: int) -> Form:
    cs = [_to_poly(c) for c in coeffs]
    if len(cs) > d + 1:
        if any(not c.is_zero() for c in cs[d + 1:]):
            raise FamilyError(f"form has {len(cs)} coefficients, degree is {d}")
        cs = cs[:d + 1]
    cs += [ParamPolynomial()] * (d + 1 - len(cs))
    return tuple(cs)


def sylvester(p: Sequence, q: Sequence, d: int):
    """Sylvester matrix of two binary forms of degree ``d``.

    Rows are the coefficient vectors (descending powers of ``X``) of
    ``X**(d-1-j) * Y**j * P`` followed by the same shifts of ``Q``.
    Entries are taken from ``p`` and ``q`` as given, so this works for
    exact polynomials and for numbers.
    """
    zero = p[0] * 0
    pd = list(reversed(p))
    qd = list(reversed(q))
    rows = []
    for form in (pd, qd):
        for j in range(d):
            rows.append([zero] * j + form + [zero] * (d - 1 - j))
    return rows


@dataclass(frozen=True)
class MapFamily:
    """Degree-``d`` family ``f_s = (P_s : Q_s)`` of endomorphisms of P^1."""

    P: Form
    Q: Form
    d: int

    def __init__(self, P, Q, d: int, *, check: bool = True):
        if d < 2:
            raise FamilyError(f"degree must be >= 2, got {d}")
        object.__setattr__(self, "d", int(d))
        object.__setattr__(self, "P", _as_form(P, d))
        object.__setattr__(self, "Q", _as_form(Q, d))
        if check and resultant_locus(self).is_zero():
            raise FamilyError("identically vanishing resultant")

    @classmethod
    def polynomial(cls, coeffs: Sequence, *, check: bool = True) -> "MapFamily":
        """Polynomial family ``z -> sum(coeffs[k] z**k)``; ``coeffs[k]`` is a
        ParamPolynomial or anything it accepts."""
        P = [_to_poly(c) for c in coeffs]
        while P and P[-1].is_zero():
            P.pop()
        d = len(P) - 1
        Q = [ParamPolynomial()] * d + [ParamPolynomial([1])]
        Q = list(reversed(Q))  # Y**d is the X**0 coefficient
        return cls(P, Q, d, check=check)

    def is_polynomial(self) -> bool:
        """True when Q = c * Y**d with a nonzero constant c."""
        return (all(c.is_zero() for c in self.Q[1:])
                and self.Q[0].degree == 0
                and not self.P[self.d].is_zero())

    def is_constant(self) -> bool:
        return all(c.is_constant() for c in self.P + self.Q)

    def param_degree(self) -> int:
        return max(c.degree for c in self.P + self.Q)

    def shift(self, c) -> "MapFamily":
        """The family ``s -> f_{s+c}``."""
        return MapFamily(tuple(x.shift(c) for x in self.P),
                         tuple(x.shift(c) for x in self.Q), self.d, check=False)

    def apply(self, A: ParamPolynomial, B: ParamPolynomial):
        """Exact ``(P(A, B), Q(A, B))`` for polynomial coordinates."""
        d = self.d
        apow = [ParamPolynomial([1])]
        bpow = [ParamPolynomial([1])]
        for _ in range(d):
            apow.append(apow[-1] * A)
            bpow.append(bpow[-1] * B)
        outP = ParamPolynomial()
        outQ = ParamPolynomial()
        for k in range(d + 1):
            if self.P[k].is_zero() and self.Q[k].is_zero():
                continue
            mono = apow[k] * bpow[d - k]
            if not self.P[k].is_zero():
                outP = outP + self.P[k] * mono
            if not self.Q[k].is_zero():
                outQ = outQ + self.Q[k] * mono
        return outP, outQ

    def __hash__(self):
        return hash((self.P, self.Q, self.d))

    def __str__(self):
        def fmt(form):
            terms = []
            for k in range(self.d, -1, -1):
                c = form[k]
                if c.is_zero():
                    continue
                mono = "*".join(x for x in (
                    "" if k == 0 else ("X" if k == 1 else f"X^{k}"),
                    "" if self.d - k == 0 else ("Y" if self.d - k == 1 else f"Y^{self.d - k}"),
                ) if x)
                terms.append(f"({c})*{mono}")
            return " + ".join(terms) or "0"

        return f"[{fmt(self.P)} : {fmt(self.Q)}]"


@dataclass(frozen=True)
class MarkedPoint:
    """Section ``s -> (A(s) : B(s))`` of the projective line, normalized so
    that ``gcd(A, B) = 1`` and ``B`` (or ``A`` when ``B = 0``) is monic."""

    A: ParamPolynomial
    B: ParamPolynomial

    def __init__(self, A, B=None):
        A = A if isinstance(A, ParamPolynomial) else ParamPolynomial(_listify(A))
        B = ParamPolynomial([1]) if B is None else (
            B if isinstance(B, ParamPolynomial) else ParamPolynomial(_listify(B)))
        if A.is_zero() and B.is_zero():
            raise FamilyError("marked point (0 : 0) is not a point of P^1")
        A, B, _, _ = _normalize_pair(A, B)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @classmethod
    def infinity(cls) -> "MarkedPoint":
        return cls(ParamPolynomial([1]), ParamPolynomial())

    def shift(self, c) -> "MarkedPoint":
        return MarkedPoint(self.A.shift(c), self.B.shift(c))

    def evaluate(self, s: complex) -> Tuple[complex, complex]:
        return self.A(s), self.B(s)

    def is_infinity(self) -> bool:
        return self.B.is_zero()

    def __str__(self):
        return f"({self.A} : {self.B})"


def _listify(x):
    if isinstance(x, (list, tuple)):
        return x
    return [x]


def _normalize_pair(A: ParamPolynomial, B: ParamPolynomial):
    """Divide out the polynomial gcd and make the pair monic.

    Returns ``(A, B, g, c)`` where the input equals ``g * c * (A, B)`` with
    ``g`` a monic polynomial and ``c`` a nonzero scalar.
    """
    g = poly_gcd(A, B)
    if g.degree > 0:
        A = A.exact_div(g)
        B = B.exact_div(g)
    lead = B.leading() if not B.is_zero() else A.leading()
    if lead != 1:
        inv = lead.inverse()
        A = A.scale(inv)
        B = B.scale(inv)
    return A, B, g, lead


@dataclass(frozen=True)
class FiberMap:
    """Numeric degree-``d`` map ``(p(X, Y) : q(X, Y))`` with complex coefficients,
    indexed by the power of ``X`` like :class:`MapFamily` forms."""

    p: Tuple[complex, ...]
    q: Tuple[complex, ...]
    d: int

    def __init__(self, p, q, d: Optional[int] = None):
        p = tuple(complex(x) for x in p)
        q = tuple(complex(x) for x in q)
        if d is None:
            d = max(len(p), len(q)) - 1
        if d < 2:
            raise FamilyError(f"degree must be >= 2, got {d}")
        p = p + (0j,) * (d + 1 - len(p))
        q = q + (0j,) * (d + 1 - len(q))
        object.__setattr__(self, "p", p[:d + 1])
        object.__setattr__(self, "q", q[:d + 1])
        object.__setattr__(self, "d", d)

    @classmethod
    def polynomial(cls, coeffs) -> "FiberMap":
        coeffs = [complex(c) for c in coeffs]
        d = len(coeffs) - 1
        q = [0j] * (d + 1)
        q[0] = 1
        return cls(coeffs, q, d)

    def resultant(self) -> complex:
        return complex(np.linalg.det(np.array(sylvester(self.p, self.q, self.d))))

    def scale(self) -> float:
        return max(abs(c) for c in self.p + self.q)

    def __call__(self, X, Y):
        """Apply the homogeneous map to ``(X, Y)``."""
        return _apply_numeric(self.p, self.q, self.d, X, Y)

    def affine(self, z: complex) -> complex:
        X, Y = self(z, 1.0)
        return X / Y if Y != 0 else complex("inf")


def _apply_numeric(p, q, d, X, Y):
    xp = [1.0 + 0 * X]
    yp = [1.0 + 0 * Y]
    for _ in range(d):
        xp.append(xp[-1] * X)
        yp.append(yp[-1] * Y)
    outp = 0 * X
    outq = 0 * X
    for k in range(d + 1):
        mono = xp[k] * yp[d - k]
        outp = outp + p[k] * mono
        outq = outq + q[k] * mono
    return outp, outq


# ---------------------------------------------------------------------------


_RESULTANT_CACHE: dict = {}
_CACHE_LOCK = threading.Lock()


def resultant_locus(fam: MapFamily) -> ParamPolynomial:
    """``Res(P_s, Q_s)`` as an exact polynomial in ``s``; its roots are the
    parameters where the fiber map drops degree."""
    key = (fam.P, fam.Q, fam.d)
    with _CACHE_LOCK:
        hit = _RESULTANT_CACHE.get(key)
    if hit is not None:
        return hit
    res = exact_determinant(sylvester(list(fam.P), list(fam.Q), fam.d))
    with _CACHE_LOCK:
        _RESULTANT_CACHE[key] = res
    return res


def specialize(fam: MapFamily, s: complex, tol: float = DEGENERACY_TOL) -> FiberMap:
    """Numeric fiber map ``f_s``.

    Raises :class:`DegenerateFiber` when ``|Res(s)| <= tol * scale**(2d)``
    with ``scale`` the largest coefficient modulus of the fiber.
    """
    s = complex(s)
    p = tuple(horner(c.complex_coeffs(), s) for c in fam.P)
    q = tuple(horner(c.complex_coeffs(), s) for c in fam.Q)
    res = horner(resultant_locus(fam).complex_coeffs(), s)
    scale = max(abs(c) for c in p + q)
    if not abs(res) > tol * scale ** (2 * fam.d):
        raise DegenerateFiber(s, res)
    return FiberMap(p, q, fam.d)


# ---------------------------------------------------------------------------
# symbolic iteration


@dataclass
class _Orbit:
    points: list = field(default_factory=list)
    # scalar divided out at each step; None once a polynomial gcd was removed
    scalars: list = field(default_factory=list)
    gcd_free: bool = True


_ORBITS: dict = {}


def _predicted_size(fam: MapFamily, A: ParamPolynomial, B: ParamPolynomial) -> int:
    deg = fam.d * max(A.degree, B.degree, 0) + fam.param_degree()
    return 2 * (deg + 1)


def orbit(fam: MapFamily, a: MarkedPoint, n: int, cap: int = ITERATION_CAP) -> _Orbit:
    """Cached exact orbit ``a, f(a), ..., f^n(a)`` (normalized iterates)."""
    key = (fam, a)
    with _CACHE_LOCK:
        orb = _ORBITS.get(key)
        if orb is None:
            orb = _Orbit(points=[a], scalars=[GaussianRational(1)])
            _ORBITS[key] = orb
        have = len(orb.points) - 1
        last = orb.points[-1]
    while have < n:
        if _predicted_size(fam, last.A, last.B) > cap:
            raise IterationCapExceeded(
                f"iterate {have + 1} would need more than {cap} coefficients")
        A, B = fam.apply(last.A, last.B)
        if A.is_zero() and B.is_zero():
            raise FamilyError("iterate collapsed to (0 : 0); degenerate family")
        A, B, g, c = _normalize_pair(A, B)
        nxt = MarkedPoint.__new__(MarkedPoint)
        object.__setattr__(nxt, "A", A)
        object.__setattr__(nxt, "B", B)
        with _CACHE_LOCK:
            if len(orb.points) - 1 == have:
                orb.points.append(nxt)
                orb.scalars.append(c)
                if g.degree > 0:
                    orb.gcd_free = False
            have = len(orb.points) - 1
            last = orb.points[-1]
    return orb


def iterate_marked(fam: MapFamily, a: MarkedPoint, n: int,
                   cap: int = ITERATION_CAP) -> MarkedPoint:
    """Exact projective coordinates of ``f_s^n(a(s))``, gcd and scalar removed."""
    if n < 0:
        raise ValueError("n must be >= 0")
    return orbit(fam, a, n, cap).points[n]


def critical_polynomial(fam: MapFamily) -> Form:
    """Wronskian ``P_X Q_Y - P_Y Q_X`` as a binary form of degree ``2d - 2``."""
    d = fam.d

    def dX(form):
        return [form[k].scale(k) if k else None for k in range(d + 1)]

    def dY(form):
        return [form[k].scale(d - k) if d - k else None for k in range(d + 1)]

    # exponents after differentiation: dX lowers the X power, dY the Y power
    PX, PY, QX, QY = dX(fam.P), dY(fam.P), dX(fam.Q), dY(fam.Q)
    W = [ParamPolynomial() for _ in range(2 * d - 1)]
    for i in range(d + 1):
        for j in range(d + 1):
            # PX[i] * X^(i-1) Y^(d-i)  times  QY[j] * X^j Y^(d-j-1)
            if PX[i] is not None and QY[j] is not None:
                W[i - 1 + j] = W[i - 1 + j] + PX[i] * QY[j]
            if PY[i] is not None and QX[j] is not None:
                W[i + j - 1] = W[i + j - 1] - PY[i] * QX[j]
    return tuple(W)
