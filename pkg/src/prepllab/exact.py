"""Exact arithmetic over the Gaussian rationals Q(i).

Two types live here: :class:`GaussianRational`, a complex number with
rational real and imaginary parts, and :class:`ParamPolynomial`, a dense
univariate polynomial in the parameter ``s`` with Gaussian-rational
coefficients.  Integers are Python ints, so nothing ever overflows.

Multiplication converts to integer pairs over a common denominator and
convolves those; everything else works directly on fractions.
"""
from __future__ import annotations

import math
import re
from fractions import Fraction
from functools import reduce
from typing import Iterable, Sequence, Union

import numpy as np

__all__ = [
    "GaussianRational",
    "ParamPolynomial",
    "poly_gcd",
    "poly_lcm",
    "squarefree_decomposition",
    "modular_gcd_degree",
    "exact_determinant",
]

Number = Union[int, Fraction, "GaussianRational"]


class GaussianRational:
    """Immutable element ``re + im*i`` of Q(i)."""

    __slots__ = ("re", "im")

    def __init__(self, re: Union[int, Fraction, str] = 0, im: Union[int, Fraction] = 0):
        if isinstance(re, str):
            parsed = GaussianRational.parse(re)
            re, im = parsed.re, parsed.im
        object.__setattr__(self, "re", Fraction(re))
        object.__setattr__(self, "im", Fraction(im))

    def __setattr__(self, name, value):
        raise AttributeError("GaussianRational is immutable")

    # -- construction -------------------------------------------------
    _TERM = re.compile(r"([+-]?)([0-9]*(?:/[0-9]+)?)(i?)")

    @classmethod
    def parse(cls, text: str) -> "GaussianRational":
        """Parse strings such as ``"3/2"``, ``"-i"``, ``"1/2+1/3i"``, ``"2-3i"``."""
        src = text.replace(" ", "")
        if not src:
            raise ValueError("empty coefficient")
        re_part = Fraction(0)
        im_part = Fraction(0)
        pos = 0
        while pos < len(src):
            m = cls._TERM.match(src, pos)
            if m is None or m.end() == pos:
                raise ValueError(f"cannot parse {text!r} at offset {pos}")
            sign, mag, unit = m.groups()
            if not mag and not unit:
                raise ValueError(f"cannot parse {text!r} at offset {pos}")
            if mag.startswith("/") or mag.endswith("/"):
                raise ValueError(f"malformed fraction in {text!r}")
            if not mag:
                value = Fraction(1)
            else:
                num, _, den = mag.partition("/")
                if den and int(den) == 0:
                    raise ValueError(f"zero denominator in {text!r}")
                value = Fraction(int(num), int(den) if den else 1)
            if sign == "-":
                value = -value
            if unit:
                im_part += value
            else:
                re_part += value
            pos = m.end()
            if pos < len(src) and src[pos] not in "+-":
                raise ValueError(f"cannot parse {text!r} at offset {pos}")
        return cls(re_part, im_part)

    @classmethod
    def coerce(cls, value) -> "GaussianRational":
        if isinstance(value, GaussianRational):
            return value
        if isinstance(value, (int, Fraction)):
            return cls(value)
        if isinstance(value, str):
            return cls.parse(value)
        if isinstance(value, complex):
            return cls(Fraction(value.real), Fraction(value.imag))
        if isinstance(value, float):
            return cls(Fraction(value))
        raise TypeError(f"cannot convert {type(value).__name__} to GaussianRational")

    # -- arithmetic ---------------------------------------------------
    def __add__(self, other):
        o = _coerce_or_none(other)
        if o is None:
            return NotImplemented
        return GaussianRational(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other):
        o = _coerce_or_none(other)
        if o is None:
            return NotImplemented
        return GaussianRational(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        o = _coerce_or_none(other)
        if o is None:
            return NotImplemented
        return o - self

    def __mul__(self, other):
        o = _coerce_or_none(other)
        if o is None:
            return NotImplemented
        if not self.im and not o.im:
            return GaussianRational(self.re * o.re)
        return GaussianRational(self.re * o.re - self.im * o.im,
                                self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = _coerce_or_none(other)
        if o is None:
            return NotImplemented
        return self * o.inverse()

    def __rtruediv__(self, other):
        o = _coerce_or_none(other)
        if o is None:
            return NotImplemented
        return o * self.inverse()

    def __neg__(self):
        return GaussianRational(-self.re, -self.im)

    def __pow__(self, k: int):
        if not isinstance(k, int):
            return NotImplemented
        if k < 0:
            return self.inverse() ** (-k)
        result = GaussianRational(1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def inverse(self) -> "GaussianRational":
        n = self.norm()
        if n == 0:
            raise ZeroDivisionError("inverse of zero")
        return GaussianRational(self.re / n, -self.im / n)

    def conjugate(self) -> "GaussianRational":
        return GaussianRational(self.re, -self.im)

    def norm(self) -> Fraction:
        return self.re * self.re + self.im * self.im

    # -- comparison / conversion -------------------------------------
    def __eq__(self, other):
        o = _coerce_or_none(other)
        if o is None:
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        if not self.im:
            return hash(self.re)
        return hash((self.re, self.im))

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    @property
    def denominator(self) -> int:
        return math.lcm(self.re.denominator, self.im.denominator)

    def __repr__(self):
        return f"GaussianRational({str(self)!r})"

    def __str__(self):
        if not self.im:
            return _frac_str(self.re)
        im = "i" if abs(self.im) == 1 else _frac_str(abs(self.im)) + "i"
        if not self.re:
            return ("-" if self.im < 0 else "") + im
        return _frac_str(self.re) + ("-" if self.im < 0 else "+") + im


def _frac_str(f: Fraction) -> str:
    return str(f.numerator) if f.denominator == 1 else f"{f.numerator}/{f.denominator}"


def _coerce_or_none(value):
    if isinstance(value, GaussianRational):
        return value
    if isinstance(value, (int, Fraction)):
        return GaussianRational(value)
    return None


ZERO = GaussianRational(0)
ONE = GaussianRational(1)


def _to_int_pairs(coeffs: Sequence[GaussianRational]):
    """Scale to a common denominator; return (re ints, im ints, denominator)."""
    den = reduce(math.lcm, (c.denominator for c in coeffs), 1)
    re_ = [c.re.numerator * (den // c.re.denominator) for c in coeffs]
    im_ = [c.im.numerator * (den // c.im.denominator) for c in coeffs]
    return re_, im_, den


def _conv(a, b):
    return np.convolve(np.array(a, dtype=object), np.array(b, dtype=object)).tolist()


class ParamPolynomial:
    """Dense polynomial in ``s`` with :class:`GaussianRational` coefficients.

    ``coeffs[k]`` is the coefficient of ``s**k``.  Trailing zeros are
    stripped so the zero polynomial has an empty coefficient tuple and
    degree ``-1``.
    """

    __slots__ = ("coeffs", "_hash")

    def __init__(self, coeffs: Iterable = ()):
        cs = [GaussianRational.coerce(c) for c in coeffs]
        while cs and not cs[-1]:
            cs.pop()
        object.__setattr__(self, "coeffs", tuple(cs))
        object.__setattr__(self, "_hash", None)

    def __setattr__(self, name, value):
        raise AttributeError("ParamPolynomial is immutable")

    @classmethod
    def constant(cls, c) -> "ParamPolynomial":
        return cls([c])

    @classmethod
    def s(cls) -> "ParamPolynomial":
        return cls([0, 1])

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def is_constant(self) -> bool:
        return len(self.coeffs) <= 1

    def leading(self) -> GaussianRational:
        return self.coeffs[-1] if self.coeffs else ZERO

    def __getitem__(self, k: int) -> GaussianRational:
        return self.coeffs[k] if 0 <= k < len(self.coeffs) else ZERO

    # -- ring operations ----------------------------------------------
    def __add__(self, other):
        o = _poly_or_none(other)
        if o is None:
            return NotImplemented
        n = max(len(self.coeffs), len(o.coeffs))
        return ParamPolynomial(self[k] + o[k] for k in range(n))

    __radd__ = __add__

    def __neg__(self):
        return ParamPolynomial(-c for c in self.coeffs)

    def __sub__(self, other):
        o = _poly_or_none(other)
        if o is None:
            return NotImplemented
        n = max(len(self.coeffs), len(o.coeffs))
        return ParamPolynomial(self[k] - o[k] for k in range(n))

    def __rsub__(self, other):
        o = _poly_or_none(other)
        if o is None:
            return NotImplemented
        return o - self

    def __mul__(self, other):
        o = _poly_or_none(other)
        if o is None:
            return NotImplemented
        if self.is_zero() or o.is_zero():
            return ParamPolynomial()
        if len(o.coeffs) == 1:
            c = o.coeffs[0]
            return ParamPolynomial(a * c for a in self.coeffs)
        if len(self.coeffs) == 1:
            c = self.coeffs[0]
            return ParamPolynomial(c * b for b in o.coeffs)
        ar, ai, ad = _to_int_pairs(self.coeffs)
        br, bi, bd = _to_int_pairs(o.coeffs)
        a_real = not any(ai)
        b_real = not any(bi)
        rr = _conv(ar, br)
        if a_real and b_real:
            ii = [0] * len(rr)
        elif a_real:
            ii = _conv(ar, bi)
        elif b_real:
            ii = _conv(ai, br)
        else:
            rr = [x - y for x, y in zip(rr, _conv(ai, bi))]
            ii = [x + y for x, y in zip(_conv(ar, bi), _conv(ai, br))]
        den = ad * bd
        return ParamPolynomial(GaussianRational(Fraction(x, den), Fraction(y, den))
                               for x, y in zip(rr, ii))

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            return NotImplemented
        result = ParamPolynomial([1])
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def scale(self, c) -> "ParamPolynomial":
        c = GaussianRational.coerce(c)
        return ParamPolynomial(a * c for a in self.coeffs)

    def __divmod__(self, other):
        o = _poly_or_none(other)
        if o is None:
            return NotImplemented
        if o.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        rem = list(self.coeffs)
        dq = o.degree
        inv = o.leading().inverse()
        if len(rem) - 1 < dq:
            return ParamPolynomial(), self
        quot = [ZERO] * (len(rem) - dq)
        for k in range(len(rem) - 1 - dq, -1, -1):
            c = rem[k + dq] * inv
            quot[k] = c
            if c:
                for j, b in enumerate(o.coeffs):
                    if b:
                        rem[k + j] = rem[k + j] - c * b
        return ParamPolynomial(quot), ParamPolynomial(rem[:dq])

    def __floordiv__(self, other):
        return divmod(self, other)[0]

    def __mod__(self, other):
        return divmod(self, other)[1]

    def exact_div(self, other) -> "ParamPolynomial":
        q, r = divmod(self, other)
        if not r.is_zero():
            raise ArithmeticError("polynomial division is not exact")
        return q

    # -- calculus / substitution --------------------------------------
    def derivative(self) -> "ParamPolynomial":
        return ParamPolynomial(c * k for k, c in enumerate(self.coeffs) if k)

    def shift(self, c) -> "ParamPolynomial":
        """Return ``p(s + c)`` (exact Taylor shift)."""
        c = GaussianRational.coerce(c)
        if not c or self.is_constant():
            return self
        cs = list(self.coeffs)
        n = len(cs)
        for i in range(n - 1):
            for k in range(n - 2, i - 1, -1):
                cs[k] = cs[k] + c * cs[k + 1]
        return ParamPolynomial(cs)

    def compose(self, other: "ParamPolynomial") -> "ParamPolynomial":
        result = ParamPolynomial()
        for c in reversed(self.coeffs):
            result = result * other + ParamPolynomial([c])
        return result

    def __call__(self, x):
        """Evaluate exactly at a Gaussian rational, or numerically otherwise."""
        if isinstance(x, (GaussianRational, int, Fraction)):
            acc = ZERO
            for c in reversed(self.coeffs):
                acc = acc * x + c
            return acc
        return horner(self.complex_coeffs(), x)

    def complex_coeffs(self) -> tuple:
        return tuple(complex(c) for c in self.coeffs)

    # -- normalization ------------------------------------------------
    def monic(self) -> "ParamPolynomial":
        if self.is_zero():
            return self
        lc = self.leading()
        if lc == ONE:
            return self
        return self.scale(lc.inverse())

    def denominator(self) -> int:
        return reduce(math.lcm, (c.denominator for c in self.coeffs), 1)

    # -- comparison / display ----------------------------------------
    def __eq__(self, other):
        o = _poly_or_none(other)
        if o is None:
            return NotImplemented
        return self.coeffs == o.coeffs

    def __hash__(self):
        h = object.__getattribute__(self, "_hash")
        if h is None:
            h = hash(self.coeffs)
            object.__setattr__(self, "_hash", h)
        return h

    def __bool__(self):
        return bool(self.coeffs)

    def __repr__(self):
        return f"ParamPolynomial({self})"

    def __str__(self):
        if not self.coeffs:
            return "0"
        terms = []
        for k in range(len(self.coeffs) - 1, -1, -1):
            c = self.coeffs[k]
            if not c:
                continue
            mono = "" if k == 0 else ("s" if k == 1 else f"s^{k}")
            cs = str(c)
            if c.im and c.re:
                cs = f"({cs})"
            if mono and cs == "1":
                cs = ""
            elif mono and cs == "-1":
                cs = "-"
            terms.append(cs + ("*" if cs and cs != "-" and mono else "") + mono)
        out = " + ".join(terms)
        return out.replace("+ -", "- ")

    def to_strings(self) -> list:
        return [str(c) for c in self.coeffs]


def _poly_or_none(value):
    if isinstance(value, ParamPolynomial):
        return value
    if isinstance(value, (int, Fraction, GaussianRational)):
        return ParamPolynomial([value])
    return None


def horner(coeffs: Sequence, x):
    """Horner evaluation; ``coeffs[k]`` multiplies ``x**k``.

    Works for scalars, numpy arrays, mpmath numbers and jets alike.
    """
    if not coeffs:
        return 0 * x
    acc = coeffs[-1] + 0 * x
    for c in reversed(coeffs[:-1]):
        acc = acc * x + c
    return acc


# ---------------------------------------------------------------------------
# gcd machinery


def poly_gcd(a: ParamPolynomial, b: ParamPolynomial) -> ParamPolynomial:
    """Monic gcd over Q(i).  ``gcd(0, 0)`` is the zero polynomial."""
    if a.is_zero():
        return b.monic()
    if b.is_zero():
        return a.monic()
    if a.degree < b.degree:
        a, b = b, a
    if modular_gcd_degree(a, b) == 0:
        return ParamPolynomial([1])
    a, b = a.monic(), b.monic()
    while not b.is_zero():
        a, b = b, (a % b).monic()
    return a


def poly_lcm(a: ParamPolynomial, b: ParamPolynomial) -> ParamPolynomial:
    if a.is_zero() or b.is_zero():
        return ParamPolynomial()
    return (a * b).exact_div(poly_gcd(a, b)).monic()


def squarefree_decomposition(p: ParamPolynomial) -> list:
    """Yun's algorithm: return ``[(factor, multiplicity), ...]`` with monic,
    pairwise coprime, squarefree factors whose product is ``p.monic()``."""
    if p.degree <= 0:
        return []
    dp = p.derivative()
    if modular_gcd_degree(p, dp) == 0:
        return [(p.monic(), 1)]
    out = []
    a = poly_gcd(p, dp)
    b = p.exact_div(a)
    c = dp.exact_div(a)
    d = c - b.derivative()
    k = 1
    while b.degree > 0:
        a = poly_gcd(b, d)
        b = b.exact_div(a)
        c = d.exact_div(a)
        d = c - b.derivative()
        if a.degree > 0:
            out.append((a.monic(), k))
        k += 1
    return out


# Primes p = 1 (mod 4), so that -1 has a square root and Z[i] maps onto F_p.
_PRIMES = (2305843009213693973, 2305843009213694009)
_SQRT_M1 = {}


def _sqrt_minus_one(p: int) -> int:
    r = _SQRT_M1.get(p)
    if r is None:
        for g in range(2, 200):
            r = pow(g, (p - 1) // 4, p)
            if r * r % p == p - 1:
                break
        _SQRT_M1[p] = r
    return r


def _reduce_mod(poly: ParamPolynomial, p: int):
    r = _sqrt_minus_one(p)
    out = []
    for c in poly.coeffs:
        dens = c.re.denominator * c.im.denominator
        if dens % p == 0:
            return None
        re_ = c.re.numerator * pow(c.re.denominator, -1, p)
        im_ = c.im.numerator * pow(c.im.denominator, -1, p)
        out.append((re_ + r * im_) % p)
    return out


def _gcd_mod(a: list, b: list, p: int) -> list:
    def strip(x):
        while x and x[-1] == 0:
            x.pop()
        return x

    a, b = strip(list(a)), strip(list(b))
    while b:
        inv = pow(b[-1], -1, p)
        db = len(b) - 1
        while len(a) - 1 >= db and a:
            c = a[-1] * inv % p
            shift = len(a) - 1 - db
            for j in range(db + 1):
                a[shift + j] = (a[shift + j] - c * b[j]) % p
            strip(a)
        a, b = b, a
    return a


def modular_gcd_degree(a: ParamPolynomial, b: ParamPolynomial):
    """Upper bound for ``deg gcd(a, b)`` over Q(i) from reduction modulo a prime.

    The reduction is a ring map Z[i] -> F_p; whenever both leading
    coefficients survive it, the gcd degree can only go up.  So a result
    of 0 certifies coprimality.  Returns ``None`` if no prime was usable.
    """
    if a.is_zero() or b.is_zero():
        return None
    for p in _PRIMES:
        ra, rb = _reduce_mod(a, p), _reduce_mod(b, p)
        if ra is None or rb is None or ra[-1] == 0 or rb[-1] == 0:
            continue
        g = _gcd_mod(ra, rb, p)
        return len(g) - 1
    return None


# ---------------------------------------------------------------------------
# determinants over Q(i)[s]


def exact_determinant(matrix: Sequence[Sequence[ParamPolynomial]]) -> ParamPolynomial:
    """Fraction-free (Bareiss) determinant of a square matrix of polynomials."""
    m = [[_poly_or_none(x) if not isinstance(x, ParamPolynomial) else x for x in row]
         for row in matrix]
    n = len(m)
    if n == 0:
        return ParamPolynomial([1])
    sign = 1
    prev = ParamPolynomial([1])
    for k in range(n - 1):
        if m[k][k].is_zero():
            for r in range(k + 1, n):
                if not m[r][k].is_zero():
                    m[k], m[r] = m[r], m[k]
                    sign = -sign
                    break
            else:
                return ParamPolynomial()
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                num = m[i][j] * m[k][k] - m[i][k] * m[k][j]
                m[i][j] = num.exact_div(prev)
        prev = m[k][k]
    det = m[n - 1][n - 1]
    return det if sign > 0 else -det
