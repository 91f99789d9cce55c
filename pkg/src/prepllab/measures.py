"""Discrete dd^c of grid potentials and comparison of cell measures.

Normalization: dd^c = (1/2pi) * Laplacian, so ``dd^c log|s - s0|`` is the
unit point mass at ``s0``.  The Laplacian uses the 5-point stencil; each
cell mass is the stencil value times the cell area, which for square cells
is ``(v_E + v_W + v_N + v_S - 4 v) / 2pi``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .green import GridPotential, Rect, _as_rect, marked_potential_grid
from .family import MapFamily, MarkedPoint
from .preperiodic import is_persistently_preperiodic

__all__ = [
    "DiscreteMeasure",
    "RankVerdict",
    "ddc",
    "total_mass",
    "phi_rank_marked",
    "empirical_measure",
    "box_discrepancy",
    "uniform_circle_measure",
    "support_mask",
]

SUPPORT_FACTOR = 10.0


@dataclass
class DiscreteMeasure:
    rect: Rect
    nx: int
    ny: int
    masses: np.ndarray
    total: float
    interior_margin: int = 0
    mask: Optional[np.ndarray] = None
    slack: float = 0.0
    raw_min: float = 0.0
    clamped_total: Optional[float] = None

    def box_masses(self, level: int) -> np.ndarray:
        k = 1 << level
        if self.nx % k or self.ny % k:
            raise ValueError(f"2**{level} must divide the grid resolution")
        return self.masses.reshape(k, self.ny // k, k, self.nx // k).sum(axis=(1, 3))


def ddc(pot: GridPotential) -> DiscreteMeasure:
    """Cell masses of the discrete dd^c of a sampled potential.

    The outer ring of cells and every cell touching a masked cell are
    excluded.  Negative stencil values are clamped to zero in ``masses``;
    the smallest pre-clamp value is kept in ``raw_min``.  ``total`` is the
    signed stencil sum, which telescopes to the boundary flux and so
    converges to the true mass; the clamped sum does not (it keeps a
    positive bias from cells near non-smooth points of the potential).
    """
    if pot.nx < 3 or pot.ny < 3:
        raise ValueError("ddc needs at least a 3x3 grid")
    v = pot.values
    hx, hy = pot.spacing
    wx, wy = hy / hx, hx / hy
    lap = np.zeros_like(v)
    c = v[1:-1, 1:-1]
    lap[1:-1, 1:-1] = (wx * (v[1:-1, 2:] + v[1:-1, :-2] - 2 * c)
                       + wy * (v[2:, 1:-1] + v[:-2, 1:-1] - 2 * c)) / (2 * math.pi)
    excluded = np.ones_like(pot.mask)
    excluded[1:-1, 1:-1] = False
    bad = pot.mask
    if bad.any():
        near = bad.copy()
        near[1:, :] |= bad[:-1, :]
        near[:-1, :] |= bad[1:, :]
        near[:, 1:] |= bad[:, :-1]
        near[:, :-1] |= bad[:, 1:]
        excluded |= near
    lap[excluded] = 0.0
    raw_min = float(lap.min())
    masses = np.maximum(lap, 0.0)
    finite = v[~pot.mask]
    vmax = float(np.abs(finite).max()) if finite.size else 0.0
    slack = (4 * pot.error * (wx + wy) + 1e-12 * vmax * (wx + wy) / 2) / (2 * math.pi)
    return DiscreteMeasure(pot.rect, pot.nx, pot.ny, masses, float(lap.sum()),
                           interior_margin=1, mask=excluded, slack=slack, raw_min=raw_min,
                           clamped_total=float(masses.sum()))


def total_mass(mu: DiscreteMeasure) -> float:
    return mu.total


def support_mask(mu: DiscreteMeasure, factor: float = SUPPORT_FACTOR) -> np.ndarray:
    """Cells carrying mass above ``factor`` times the discretization slack."""
    return mu.masses > factor * mu.slack


@dataclass(frozen=True)
class RankVerdict:
    rank: int
    certified: bool
    status: str
    mass: Optional[float] = None
    threshold: Optional[float] = None
    certificate: Optional[tuple] = None


def phi_rank_marked(fam: MapFamily, a: MarkedPoint, rect, res, threshold: Optional[float] = None,
                    tol: float = 1e-8, bound: int = 6, threads: int = 1) -> RankVerdict:
    """Rank of the graph of a marked point: 0 or 1.

    0 is certified exactly when the point is persistently preperiodic.
    Otherwise the rank is 1 when the total dd^c mass of the potential
    exceeds ``threshold`` (default: ten times the discretization slack);
    a smaller mass is reported as inconclusive, not as a certified 0.
    """
    status = is_persistently_preperiodic(fam, a, bound)
    if status.persistent:
        return RankVerdict(0, True, "persistent", certificate=(status.m, status.n))
    nx, ny = (res, res) if isinstance(res, int) else res
    mu = ddc(marked_potential_grid(fam, a, rect, nx, ny, tol, threads))
    if threshold is None:
        threshold = SUPPORT_FACTOR * mu.slack
    if threshold <= mu.slack:
        raise ValueError("threshold must exceed the discretization slack")
    if mu.total > threshold:
        return RankVerdict(1, False, "unstable", mu.total, threshold)
    return RankVerdict(0, False, "inconclusive: zero within resolution", mu.total, threshold)


def empirical_measure(points: Iterable[complex], rect, nx: int, ny: int) -> DiscreteMeasure:
    """Equal-weight cell measure of the points lying in the closed rectangle."""
    rect = _as_rect(rect)
    x0, x1, y0, y1 = rect
    pts = np.asarray(list(points), dtype=complex).ravel()
    inside = ((pts.real >= x0) & (pts.real <= x1) & (pts.imag >= y0) & (pts.imag <= y1))
    pts = pts[inside]
    masses = np.zeros((ny, nx))
    if pts.size:
        i = np.clip(np.floor((pts.real - x0) / (x1 - x0) * nx).astype(int), 0, nx - 1)
        j = np.clip(np.floor((pts.imag - y0) / (y1 - y0) * ny).astype(int), 0, ny - 1)
        np.add.at(masses, (j, i), 1.0 / pts.size)
    return DiscreteMeasure(rect, nx, ny, masses, float(masses.sum()))


def box_discrepancy(mu: DiscreteMeasure, nu: DiscreteMeasure, level: int) -> float:
    """Max over the ``4**level`` dyadic boxes of the normalized mass difference."""
    if (mu.rect, mu.nx, mu.ny) != (nu.rect, nu.nx, nu.ny):
        raise ValueError("measures live on different grids")
    if not (mu.total > 0 and nu.total > 0):
        raise ValueError("box discrepancy needs measures of positive total mass")
    a = mu.box_masses(level) / mu.masses.sum()
    b = nu.box_masses(level) / nu.masses.sum()
    return float(np.abs(a - b).max())


def uniform_circle_measure(rect, nx: int, ny: int, center: complex = 0j,
                           radius: float = 1.0) -> DiscreteMeasure:
    """Normalized arc-length measure of a circle, exactly split among cells."""
    rect = _as_rect(rect)
    x0, x1, y0, y1 = rect
    hx, hy = (x1 - x0) / nx, (y1 - y0) / ny
    cx, cy = center.real, center.imag
    angles = [0.0, 2 * math.pi]
    for k in range(nx + 1):
        t = (x0 + k * hx - cx) / radius
        if abs(t) <= 1:
            a = math.acos(t)
            angles += [a, 2 * math.pi - a]
    for k in range(ny + 1):
        t = (y0 + k * hy - cy) / radius
        if abs(t) <= 1:
            a = math.asin(t)
            angles += [a % (2 * math.pi), (math.pi - a) % (2 * math.pi)]
    angles = np.unique(np.array(angles))
    lo, hi = angles[:-1], angles[1:]
    mid = 0.5 * (lo + hi)
    px = cx + radius * np.cos(mid)
    py = cy + radius * np.sin(mid)
    keep = (hi > lo) & (px >= x0) & (px <= x1) & (py >= y0) & (py <= y1)
    i = np.clip(np.floor((px[keep] - x0) / hx).astype(int), 0, nx - 1)
    j = np.clip(np.floor((py[keep] - y0) / hy).astype(int), 0, ny - 1)
    masses = np.zeros((ny, nx))
    np.add.at(masses, (j, i), (hi - lo)[keep] / (2 * math.pi))
    return DiscreteMeasure(rect, nx, ny, masses, float(masses.sum()))
