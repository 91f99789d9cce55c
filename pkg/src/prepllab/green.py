"""Certified escape rates and parameter-space potentials.

For a lift ``F = (p, q)`` of a degree-``d`` map and a point ``Z`` of C^2,
the homogeneous escape rate is ``G(Z) = lim d**-n log ||F^n(Z)||`` with the
sup norm.  Writing ``h(W) = log ||F(W)|| - d log ||W||`` we have
``G(Z) = log ||Z|| + sum_k d**-k h(Z_k)`` over the normalized orbit, so a
bound ``|h| <= C`` on the unit sphere gives the truncation error
``C d**-n / (d - 1)`` after ``n`` steps.

``C`` comes from coefficient sums (upper side) and from the resultant
identity ``X**(2d-1) Res = g1 P + g2 Q`` (lower side): on the unit sphere
``||F(W)|| >= 1 / K`` where ``K`` is the l1 norm of the relevant columns
of the inverse transposed Sylvester matrix.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from .exact import GaussianRational, horner
from .family import (
    DEGENERACY_TOL,
    DegenerateFiber,
    FiberMap,
    MapFamily,
    MarkedPoint,
    resultant_locus,
    sylvester,
)

__all__ = [
    "GreenValue",
    "GridPotential",
    "NonConvergence",
    "Rect",
    "green_value",
    "marked_potential_grid",
    "product_potential_grid",
    "cell_centers",
    "MAX_ITERATIONS",
]

MAX_ITERATIONS = 10 ** 4
# per-operation rounding slack folded into every reported error
_ULP_SLACK = 1e-15
# relative safety margin on the float estimate of the lower bound constant
_LOWER_MARGIN = 1e-9
_ROWS_PER_CHUNK = 16

Rect = Tuple[float, float, float, float]


class NonConvergence(ArithmeticError):
    """The requested tolerance cannot be certified for this fiber."""


@dataclass(frozen=True)
class GreenValue:
    value: float
    error: float
    iterations: int


@dataclass
class GridPotential:
    """Potential sampled at cell centers of ``rect = (x0, x1, y0, y1)``.

    ``values[j, i]`` is the value at ``x0 + (i + 1/2) hx + i (y0 + (j + 1/2) hy)``,
    so rows run along the real axis and row 0 is the bottom of the rectangle.
    """

    rect: Rect
    nx: int
    ny: int
    values: np.ndarray
    error: float
    mask: np.ndarray
    tol: float
    iterations: int = 0
    persistent: Optional[Tuple[int, int]] = None
    label: str = ""

    def __post_init__(self):
        x0, x1, y0, y1 = self.rect
        if not (x1 > x0 and y1 > y0):
            raise ValueError(f"degenerate rectangle {self.rect}")
        if self.values.shape != (self.ny, self.nx):
            raise ValueError("values shape does not match (ny, nx)")

    @property
    def spacing(self) -> Tuple[float, float]:
        x0, x1, y0, y1 = self.rect
        return (x1 - x0) / self.nx, (y1 - y0) / self.ny

    def centers(self) -> np.ndarray:
        return cell_centers(self.rect, self.nx, self.ny)


def cell_centers(rect: Rect, nx: int, ny: int) -> np.ndarray:
    x0, x1, y0, y1 = rect
    hx = (x1 - x0) / nx
    hy = (y1 - y0) / ny
    xs = x0 + (np.arange(nx) + 0.5) * hx
    ys = y0 + (np.arange(ny) + 0.5) * hy
    return xs[None, :] + 1j * ys[:, None]


# ---------------------------------------------------------------------------
# vectorized core


def _forms_apply(pc, qc, d, X, Y):
    xp = [np.ones_like(X)]
    yp = [np.ones_like(Y)]
    for _ in range(d):
        xp.append(xp[-1] * X)
        yp.append(yp[-1] * Y)
    outp = pc[0] * yp[d]
    outq = qc[0] * yp[d]
    for k in range(1, d + 1):
        mono = xp[k] * yp[d - k]
        outp = outp + pc[k] * mono
        outq = outq + qc[k] * mono
    return outp, outq


def _supnorm(X, Y):
    return np.maximum(np.abs(X), np.abs(Y))


def _h_bound(pc, qc, d):
    """Per-cell bound ``C`` on ``|log ||F(W)|||`` over the unit sup-sphere.

    Returns ``inf`` where the Sylvester matrix is numerically singular.
    """
    upper = np.maximum(sum(np.abs(c) for c in pc), sum(np.abs(c) for c in qc))
    n = pc[0].shape[0]
    S = np.zeros((n, 2 * d, 2 * d), dtype=complex)
    pdesc = pc[::-1]
    qdesc = qc[::-1]
    for j in range(d):
        for k in range(d + 1):
            S[:, j, j + k] = pdesc[k]
            S[:, d + j, j + k] = qdesc[k]
    St = np.swapaxes(S, 1, 2)
    rhs = np.zeros((n, 2 * d, 2), dtype=complex)
    rhs[:, 0, 0] = 1.0
    rhs[:, 2 * d - 1, 1] = 1.0
    with np.errstate(all="ignore"):
        try:
            sol = np.linalg.solve(St, rhs)
        except np.linalg.LinAlgError:
            sol = np.stack([_solve_one(St[i], rhs[i]) for i in range(n)])
        K = np.abs(sol).sum(axis=1).max(axis=1)
        lower = (1.0 - _LOWER_MARGIN) / K
        C = np.maximum(np.abs(np.log(upper)), np.abs(np.log(lower)))
    C = np.where(np.isfinite(C) & (upper > 0), C, np.inf)
    return C


def _solve_one(A, b):
    try:
        return np.linalg.solve(A, b)
    except np.linalg.LinAlgError:
        return np.full(b.shape, np.inf + 0j)


def _required_iterations(C, d, tol):
    # smallest n with C d^-n / (d-1) <= tol / 2
    with np.errstate(all="ignore"):
        ratio = 2.0 * C / ((d - 1) * tol)
        n = np.ceil(np.log(np.maximum(ratio, 1.0)) / math.log(d))
    n = np.where(np.isfinite(n), n, MAX_ITERATIONS + 1)
    return n.astype(np.int64)


def _escape_core(pc, qc, d, X, Y, tol):
    """Vectorized certified escape rate.

    ``pc``/``qc`` are lists of ``d + 1`` complex arrays (one entry per cell),
    ``X``/``Y`` the lifted point per cell.  Returns
    ``(value, error, iterations, ok)``; every output element depends only
    on the inputs at the same index.
    """
    C = _h_bound(pc, qc, d)
    nreq = _required_iterations(C, d, tol)
    norm0 = _supnorm(X, Y)
    ok = (nreq <= MAX_ITERATIONS) & (norm0 > 0) & np.isfinite(norm0)
    nreq = np.where(ok, nreq, 0)
    with np.errstate(all="ignore"):
        L = np.log(np.where(ok, norm0, 1.0))
        X = np.where(ok, X / np.where(ok, norm0, 1.0), 0)
        Y = np.where(ok, Y / np.where(ok, norm0, 1.0), 1)
    nmax = int(nreq.max()) if nreq.size else 0
    weight = 1.0
    for k in range(1, nmax + 1):
        weight /= d
        active = nreq >= k
        Xn, Yn = _forms_apply(pc, qc, d, X, Y)
        r = _supnorm(Xn, Yn)
        good = active & (r > 0)
        rs = np.where(good, r, 1.0)
        L = L + np.where(good, np.log(rs) * weight, 0.0)
        X = np.where(good, Xn / rs, X)
        Y = np.where(good, Yn / rs, Y)
        ok &= ~(active & ~(r > 0))
    with np.errstate(all="ignore"):
        trunc = C * np.power(float(d), -nreq.astype(float)) / (d - 1)
        err = trunc + _ULP_SLACK * (nreq + 2) * (1.0 + np.abs(L))
    ok &= np.isfinite(L) & (err <= tol)
    return L, err, nreq, ok


# ---------------------------------------------------------------------------
# public scalar API


def _lift(z):
    """Homogeneous lift of ``z``: a complex number, ``inf``, or a pair ``(X, Y)``."""
    if isinstance(z, tuple):
        return complex(z[0]), complex(z[1])
    z = complex(z)
    if math.isinf(z.real) or math.isinf(z.imag):
        return 1.0 + 0j, 0j
    return z, 1.0 + 0j


def green_value(f: FiberMap, z, tol: float = 1e-9) -> GreenValue:
    """Certified homogeneous escape rate of ``f`` at ``z``.

    ``z`` is an affine point (``complex('inf')`` allowed) lifted as
    ``(z, 1)``, or an explicit pair ``(X, Y)``.  The true value lies within
    ``error`` of ``value``.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    res = f.resultant()
    if not abs(res) > DEGENERACY_TOL * f.scale() ** (2 * f.d):
        raise DegenerateFiber(None, res)
    X, Y = _lift(z)
    pc = [np.array([c]) for c in f.p]
    qc = [np.array([c]) for c in f.q]
    L, err, n, ok = _escape_core(pc, qc, f.d, np.array([X]), np.array([Y]), tol)
    if not ok[0]:
        raise NonConvergence(
            f"cannot certify escape rate to tol={tol:g} (iterations needed: {int(n[0])})")
    return GreenValue(float(L[0]), float(err[0]), int(n[0]))


# ---------------------------------------------------------------------------
# grids


def _grid_chunk(fam: MapFamily, a: MarkedPoint, s: np.ndarray, tol: float):
    pc = [horner(c.complex_coeffs(), s) for c in fam.P]
    qc = [horner(c.complex_coeffs(), s) for c in fam.Q]
    res = horner(resultant_locus(fam).complex_coeffs(), s)
    scale = np.maximum.reduce([np.abs(c) for c in pc + qc])
    nondeg = np.abs(res) > DEGENERACY_TOL * scale ** (2 * fam.d)
    # degenerate cells get a harmless stand-in map so the core stays finite
    stand_p = [np.where(nondeg, c, 1.0 if k == fam.d else 0.0) for k, c in enumerate(pc)]
    stand_q = [np.where(nondeg, c, 1.0 if k == 0 else 0.0) for k, c in enumerate(qc)]
    X = horner(a.A.complex_coeffs(), s)
    Y = horner(a.B.complex_coeffs(), s)
    L, err, n, ok = _escape_core(stand_p, stand_q, fam.d, X, Y, tol)
    ok &= nondeg
    return L, err, n, ok


def _fill(fam, a, rect, nx, ny, tol, threads):
    s = cell_centers(rect, nx, ny)
    values = np.zeros((ny, nx))
    errors = np.zeros((ny, nx))
    iters = np.zeros((ny, nx), dtype=np.int64)
    ok = np.zeros((ny, nx), dtype=bool)
    chunks = [(j, min(j + _ROWS_PER_CHUNK, ny)) for j in range(0, ny, _ROWS_PER_CHUNK)]

    def work(bounds):
        j0, j1 = bounds
        return bounds, _grid_chunk(fam, a, s[j0:j1].ravel(), tol)

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, chunks))
    else:
        results = [work(c) for c in chunks]
    for (j0, j1), (L, err, n, good) in results:
        shape = (j1 - j0, nx)
        values[j0:j1] = L.reshape(shape)
        errors[j0:j1] = err.reshape(shape)
        iters[j0:j1] = n.reshape(shape)
        ok[j0:j1] = good.reshape(shape)
    mask = ~ok
    values[mask] = np.nan
    error = float(errors[ok].max()) if ok.any() else 0.0
    return values, error, mask, int(iters.max()) if iters.size else 0


def _as_rect(rect) -> Rect:
    x0, x1, y0, y1 = (float(v) for v in rect)
    return x0, x1, y0, y1


def marked_potential_grid(fam: MapFamily, a: MarkedPoint, rect, nx: int, ny: int,
                          tol: float = 1e-8, threads: int = 1) -> GridPotential:
    """Sample ``g(s) = G_{f_s}(a(s))`` at the cell centers of ``rect``.

    Cells whose fiber is degenerate, or whose value cannot be certified,
    are masked.  A persistently preperiodic marked point is flagged in
    ``persistent`` (its potential is harmonic in ``s``).
    """
    from .preperiodic import is_persistently_preperiodic

    if not tol > 0:
        raise ValueError("tol must be positive")
    rect = _as_rect(rect)
    values, error, mask, iters = _fill(fam, a, rect, nx, ny, tol, threads)
    status = is_persistently_preperiodic(fam, a, bound=2)
    return GridPotential(rect, nx, ny, values, error, mask, tol, iters,
                         persistent=(status.m, status.n) if status.persistent else None)


def product_potential_grid(entries: Sequence, rect, nx: int, ny: int,
                           tol: float = 1e-8, threads: int = 1) -> GridPotential:
    """Pointwise maximum of shifted marked potentials.

    Each entry is ``(family, marked_point, shift)``; the entry contributes
    ``s -> G_{f_{s+shift}}(a(s + shift))`` with the shift applied exactly.
    """
    if not entries:
        raise ValueError("need at least one entry")
    rect = _as_rect(rect)
    out = None
    for fam, a, shift in entries:
        shift = GaussianRational.coerce(shift)
        pot = marked_potential_grid(fam.shift(shift), a.shift(shift), rect, nx, ny,
                                    tol, threads)
        if out is None:
            out = pot
            continue
        mask = out.mask | pot.mask
        values = np.fmax(out.values, pot.values)
        values[mask] = np.nan
        out = GridPotential(rect, nx, ny, values, max(out.error, pot.error), mask, tol,
                            max(out.iterations, pot.iterations))
    return out
