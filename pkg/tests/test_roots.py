import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from prepllab.exact import GaussianRational as GR, ParamPolynomial as PP
from prepllab.roots import solve_polynomial

small = st.integers(-4, 4)


@settings(deadline=None, max_examples=40)
@given(st.lists(st.tuples(small, small), min_size=1, max_size=7, unique=True))
def test_recovers_distinct_gaussian_integer_roots(roots):
    s = PP.s()
    p = PP([1])
    for a, b in roots:
        p = p * (s - GR(a, b))
    rs = solve_polynomial(p)
    assert rs.complete
    got = sorted((round(v.real, 9), round(v.imag, 9)) for v in rs.values())
    assert got == sorted((float(a), float(b)) for a, b in roots)
    assert all(r.simple for r in rs)


def test_multiplicity_flagged():
    s = PP.s()
    p = (s - 1) ** 3 * (s + 2)
    rs = solve_polynomial(p)
    assert rs.count_with_multiplicity() == 4
    triple = [r for r in rs if abs(r.value - 1) < 1e-9]
    assert triple[0].multiplicity == 3 and triple[0].multiplicity_flag == "cluster"
    assert not triple[0].simple


def test_matches_numpy_on_random_polynomial():
    rng = np.random.default_rng(7)
    coeffs = [GR(int(a), int(b)) for a, b in rng.integers(-9, 10, size=(12, 2))]
    coeffs[-1] = GR(1)
    p = PP(coeffs)
    ref = np.roots([complex(c) for c in reversed(coeffs)])
    rs = solve_polynomial(p)
    for r in ref:
        assert min(abs(r - v) for v in rs.values()) < 1e-8


def test_constant_and_linear():
    assert len(solve_polynomial(PP([3]))) == 0
    rs = solve_polynomial(PP([GR(-1), GR(2)]))
    assert rs.values()[0] == pytest.approx(0.5)
