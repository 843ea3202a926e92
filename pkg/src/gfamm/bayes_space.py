"""Densities as functional compositions on a discretised grid.

A density is stored as its values at the points of a :class:`Grid`; integrals
use the grid's trapezoidal weights, so "integrates to one" and "integrates to
zero" hold exactly under those weights.  Like :mod:`gfamm.simplex`, all
functions act along the last axis and accept stacks of curves.
"""

from dataclasses import dataclass

import numpy as np

from .errors import GridMismatch, NonIncreasingGrid, NonPositiveDensity, NotCentred

#: tolerance on the unit integral of a density
DENSITY_ATOL = 1e-8
#: largest |integral| of a clr curve that :func:`clr_density_inv` re-centres
CLR_CURVE_TOL = 1e-6


def quadrature_weights(points):
    """Trapezoidal weights for a strictly increasing grid.

    >>> quadrature_weights([0, 1, 3])
    array([0.5, 1.5, 1. ])
    """
    t = np.asarray(points, dtype=float)
    if t.ndim != 1 or t.size < 3:
        raise NonIncreasingGrid(f"need at least 3 grid points, got {t.size}")
    h = np.diff(t)
    if np.any(~(h > 0)):
        k = int(np.argmax(~(h > 0)))
        raise NonIncreasingGrid(f"grid not strictly increasing at index {k + 1}")
    w = np.zeros_like(t)
    w[:-1] += h / 2
    w[1:] += h / 2
    return w


@dataclass(frozen=True, eq=False)
class Grid:
    """Grid points on a bounded interval together with quadrature weights."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if pts.shape != w.shape:
            raise GridMismatch("points and weights differ in length")
        if np.any(w <= 0):
            raise ValueError("quadrature weights must be positive")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_points(cls, points):
        return cls(np.asarray(points, dtype=float), quadrature_weights(points))

    @property
    def length(self):
        return float(self.points[-1] - self.points[0])

    def __len__(self):
        return self.points.size

    def integrate(self, values):
        """Quadrature integral along the last axis."""
        values = self._check(values)
        return values @ self.weights

    def same_as(self, other):
        return self is other or (
            len(self) == len(other)
            and np.array_equal(self.points, other.points)
            and np.array_equal(self.weights, other.weights)
        )

    def _check(self, values):
        values = np.asarray(values, dtype=float)
        if values.shape[-1] != self.points.size:
            raise GridMismatch(
                f"curve has {values.shape[-1]} values, grid has {self.points.size} points"
            )
        return values


def _positive(values, grid):
    values = grid._check(values)
    if np.any(~(values > 0)):
        idx = tuple(int(i) for i in np.argwhere(~(values > 0))[0])
        raise NonPositiveDensity(f"non-positive density value at index {idx}")
    return values


def normalize_density(raw, grid):
    """Divide positive values by their quadrature integral."""
    raw = _positive(raw, grid)
    return raw / grid.integrate(raw)[..., None]


def check_density(f, grid):
    f = _positive(f, grid)
    if np.any(np.abs(grid.integrate(f) - 1) > DENSITY_ATOL):
        raise NonPositiveDensity("density does not integrate to one")
    return f


def clr_density(f, grid):
    """Functional clr: ``log f`` minus its mean over the domain."""
    lf = np.log(_positive(f, grid))
    return lf - (grid.integrate(lf) / grid.length)[..., None]


def clr_density_inv(u, grid):
    """Density whose functional clr is ``u``.

    Curves integrating to at most ``CLR_CURVE_TOL`` in absolute value are
    re-centred; larger deviations raise :class:`NotCentred`.
    """
    u = grid._check(u)
    m = grid.integrate(u)
    if np.any(np.abs(m) > CLR_CURVE_TOL):
        raise NotCentred(f"clr curve integrates to {np.max(np.abs(m)):.3g}, not 0")
    u = u - (m / grid.length)[..., None]
    e = np.exp(u - u.max(axis=-1, keepdims=True))
    return normalize_density(e, grid)


def bayes_inner(f, h, grid):
    """Bayes-space inner product, computed as the L2 product of clr curves."""
    return grid.integrate(clr_density(f, grid) * clr_density(h, grid))


def bayes_norm(f, grid):
    return np.sqrt(bayes_inner(f, f, grid))


def perturb_density(f, h, grid):
    return normalize_density(_positive(f, grid) * _positive(h, grid), grid)


def power_density(alpha, f, grid):
    lf = alpha * np.log(_positive(f, grid))
    return normalize_density(np.exp(lf - lf.max(axis=-1, keepdims=True)), grid)


def uniform_density(grid):
    return np.full(len(grid), 1.0 / grid.length)
