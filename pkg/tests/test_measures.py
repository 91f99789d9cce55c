import math

import numpy as np
import pytest

from prepllab.family import MapFamily, MarkedPoint
from prepllab.green import GridPotential, cell_centers, marked_potential_grid
from prepllab.measures import (
    box_discrepancy,
    ddc,
    empirical_measure,
    phi_rank_marked,
    support_mask,
    uniform_circle_measure,
)

from oracles import circle_arc_fraction

QUAD = MapFamily.polynomial([[0, 1], 0, 1])
Z2 = MapFamily.polynomial([0, 0, 1])


def sampled(fn, rect, nx, ny, error=0.0):
    c = cell_centers(rect, nx, ny)
    return GridPotential(rect, nx, ny, fn(c), error, np.zeros((ny, nx), bool), 1e-8)


def test_log_modulus_has_unit_mass():
    # off-center pole so that no cell center hits the singularity
    pot = sampled(lambda s: np.log(np.abs(s - (0.013 + 0.007j))), (-1, 1, -1, 1), 200, 200)
    mu = ddc(pot)
    assert mu.total == pytest.approx(1.0, abs=1e-4)


def test_harmonic_has_no_mass():
    pot = sampled(lambda s: s.real ** 2 - s.imag ** 2 + 3 * s.real, (-1, 2, -1, 1), 60, 40)
    mu = ddc(pot)
    assert abs(mu.total) < 1e-10
    assert mu.masses.max() < 1e-10


def test_anisotropic_quadratic_mass():
    # |s|^2 has Laplacian 4, i.e. dd^c density 2/pi
    rect = (-1, 1, -0.5, 0.5)
    pot = sampled(lambda s: np.abs(s) ** 2, rect, 40, 10)
    mu = ddc(pot)
    inner_area = (2 - 2 * 2 / 40) * (1 - 2 * 1 / 10)
    assert mu.total == pytest.approx(2 / math.pi * inner_area, rel=1e-12)


def test_masses_nonnegative_and_ring_excluded():
    pot = marked_potential_grid(QUAD, MarkedPoint(0), (-2.5, 1.5, -2, 2), 64, 64)
    mu = ddc(pot)
    assert (mu.masses >= 0).all()
    assert mu.masses[0].sum() == 0 and mu.masses[:, -1].sum() == 0
    assert mu.clamped_total >= mu.total - 1e-12


def test_box_masses_partition():
    pot = marked_potential_grid(QUAD, MarkedPoint(0), (-2.5, 1.5, -2, 2), 64, 64)
    mu = ddc(pot)
    for level in range(4):
        assert mu.box_masses(level).sum() == pytest.approx(mu.masses.sum())
    with pytest.raises(ValueError):
        mu.box_masses(7)


def test_support_of_quadratic_measure_near_boundary():
    pot = marked_potential_grid(QUAD, MarkedPoint(0), (-2.5, 1.5, -2, 2), 128, 128)
    mu = ddc(pot)
    sup = support_mask(mu)
    c = pot.centers()
    # the main cardioid interior (around s = -0.1) and far exterior carry no mass
    assert not sup[np.unravel_index(np.argmin(np.abs(c + 0.1)), c.shape)]
    assert not sup[np.unravel_index(np.argmin(np.abs(c - (1.4 + 1.9j))), c.shape)]
    assert sup.sum() > 50


def test_uniform_circle_measure_against_sampling():
    rect = (-2, 2, -2, 2)
    nu = uniform_circle_measure(rect, 8, 8)
    assert nu.total == pytest.approx(1.0)
    boxes = nu.box_masses(1)
    for j in range(2):
        for i in range(2):
            ref = circle_arc_fraction(-2 + 2 * i, 2 * i, -2 + 2 * j, 2 * j, samples=400_000)
            assert boxes[j, i] == pytest.approx(ref, abs=1e-5)
    cell = nu.masses[4, 5]  # cell [0.5, 1] x [0, 0.5]
    assert cell == pytest.approx(circle_arc_fraction(0.5, 1, 0, 0.5), abs=1e-5)


def test_empirical_measure_and_discrepancy():
    rect = (0, 1, 0, 1)
    mu = empirical_measure([0.1 + 0.1j, 0.9 + 0.9j], rect, 4, 4)
    nu = empirical_measure([0.1 + 0.1j, 0.6 + 0.9j], rect, 4, 4)
    assert box_discrepancy(mu, mu, 2) == 0
    assert box_discrepancy(mu, nu, 1) == 0
    assert box_discrepancy(mu, nu, 2) == pytest.approx(0.5)
    # points outside the rectangle are dropped
    assert empirical_measure([5 + 5j, 0.5 + 0.5j], rect, 4, 4).masses.sum() == pytest.approx(1)


def test_rank_verdicts():
    v0 = phi_rank_marked(Z2, MarkedPoint(0), (-2, 2, -2, 2), 32)
    assert v0.rank == 0 and v0.certified and v0.certificate == (0, 1)
    v1 = phi_rank_marked(QUAD, MarkedPoint(0), (-2.5, 1.5, -2, 2), 64)
    assert v1.rank == 1 and v1.mass > v1.threshold
    with pytest.raises(ValueError):
        phi_rank_marked(QUAD, MarkedPoint(0), (-2.5, 1.5, -2, 2), 16, threshold=1e-30)


def test_log_plus_gives_unit_circle_measure():
    rect = (-2, 2, -2, 2)
    pot = sampled(lambda s: np.maximum(0, np.log(np.abs(s))), rect, 512, 512)
    mu = ddc(pot)
    assert mu.total == pytest.approx(1.0, abs=0.02)
    c = pot.centers()
    h = 4 / 512
    # a genuine circle cell carries ~h / 2pi; away from the circle only the
    # O(h^4 / r^4) stencil truncation of log|s| remains
    on = mu.masses > 1e-6
    assert np.all(np.abs(np.abs(c[on]) - 1) <= h * math.sqrt(2))


def test_smooth_density_against_integral():
    from scipy import integrate

    rect = (-4, 4, -4, 4)
    n = 256
    pot = sampled(lambda s: 0.5 * np.log1p(np.abs(s) ** 2), rect, n, n)
    mu = ddc(pot)
    h = 8 / n
    lo, hi = -4 + h, 4 - h  # outer ring excluded
    ref, _ = integrate.dblquad(lambda y, x: 1 / (math.pi * (1 + x * x + y * y) ** 2),
                               lo, hi, lo, hi)
    assert mu.total == pytest.approx(ref, rel=1e-3)
    assert mu.raw_min >= 0


def test_linearity():
    rect = (-2.5, 1.5, -2, 2)
    p1 = marked_potential_grid(QUAD, MarkedPoint(0), rect, 48, 48)
    p2 = sampled(lambda s: np.abs(s) ** 2, rect, 48, 48)
    combo = sampled(lambda s: 2.5 * p1.values + p2.values, rect, 48, 48)
    mc, m1, m2 = ddc(combo), ddc(p1), ddc(p2)
    assert mc.total == pytest.approx(2.5 * m1.total + m2.total, rel=1e-12)
    # cellwise wherever no clamping happened in the summands
    ok = m1.masses > 0
    scale = np.abs(combo.values).max()
    assert np.allclose(mc.masses[ok], 2.5 * m1.masses[ok] + m2.masses[ok], rtol=0, atol=1e-12 * scale)


def test_empirical_examples():
    rect = (-1, 1, -1, 1)
    roots4 = [1j ** k * 0.5 for k in range(4)]
    mu = empirical_measure(roots4, rect, 4, 4)
    assert sorted(mu.masses[mu.masses > 0].tolist()) == [0.25] * 4
    assert empirical_measure([3 + 3j], rect, 4, 4).total == 0


def test_discrepancy_examples():
    rect = (-1, 1, -1, 1)
    a = empirical_measure([0.1 + 0.1j], rect, 8, 8)
    b = empirical_measure([-0.1 + 0.1j], rect, 8, 8)
    assert box_discrepancy(a, b, 1) == pytest.approx(1.0)
    circle = uniform_circle_measure((-2, 2, -2, 2), 64, 64)
    roots = empirical_measure(np.exp(2j * np.pi * (np.arange(64) + 0.5) / 64), (-2, 2, -2, 2), 64, 64)
    assert box_discrepancy(circle, roots, 2) <= 0.05
    with pytest.raises(ValueError):
        box_discrepancy(a, empirical_measure([], rect, 8, 8), 1)


def test_resolution_consistency():
    rect = (-2.5, 1.5, -2, 2)
    m1 = ddc(marked_potential_grid(QUAD, MarkedPoint(0), rect, 128, 128)).total
    m2 = ddc(marked_potential_grid(QUAD, MarkedPoint(0), rect, 256, 256)).total
    assert m2 == pytest.approx(m1, rel=0.05)


def test_persistent_point_has_no_mass():
    mu = ddc(marked_potential_grid(Z2, MarkedPoint(0), (-2, 2, -2, 2), 32, 32))
    assert abs(mu.total) <= mu.slack


def test_product_potential_mass_lives_on_the_ridge():
    # For max(g(s), g(s + 10)) the dd^c mass sits where the two potentials
    # cross, not on either Mandelbrot boundary: near each copy the other
    # potential dominates and is harmonic.
    from prepllab.green import product_potential_grid

    rect = (-13.0, 3.0, -3.0, 3.0)
    n = 128
    g0 = marked_potential_grid(QUAD, MarkedPoint(0), rect, n, n)
    g10 = marked_potential_grid(QUAD.shift(10), MarkedPoint(0), rect, n, n)
    prod = product_potential_grid([(QUAD, MarkedPoint(0), 0), (QUAD, MarkedPoint(0), 10)],
                                  rect, n, n)
    mu = ddc(prod)
    sign = g0.values > g10.values
    ridge = np.zeros_like(sign)
    ridge[:, 1:] |= sign[:, 1:] != sign[:, :-1]
    ridge[:, :-1] |= sign[:, 1:] != sign[:, :-1]
    ridge[1:, :] |= sign[1:, :] != sign[:-1, :]
    ridge[:-1, :] |= sign[1:, :] != sign[:-1, :]
    near = ridge.copy()
    for _ in range(2):
        grown = near.copy()
        grown[1:, :] |= near[:-1, :]
        grown[:-1, :] |= near[1:, :]
        grown[:, 1:] |= near[:, :-1]
        grown[:, :-1] |= near[:, 1:]
        near = grown
    sup = support_mask(mu)
    assert sup.any()
    assert not (sup & ~near).any()
