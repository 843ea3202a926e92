"""Containers for the functional response and the covariates of one fit."""

from dataclasses import dataclass, field

import numpy as np

from .bayes_space import Grid


@dataclass(eq=False)
class CurveSet:
    """Count curves ``y[i, l] = y_i(t_l)`` of ``n`` regions on a shared grid.

    ``offsets`` (e.g. log population) enter the predictor with coefficient
    one; a per-region vector is broadcast over time.
    """

    y: np.ndarray
    grid_t: Grid
    offsets: np.ndarray = None
    labels: tuple = None

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        if y.ndim != 2:
            raise ValueError(f"y must be (n, T), got shape {y.shape}")
        if not isinstance(self.grid_t, Grid):
            self.grid_t = Grid.from_points(self.grid_t)
        if y.shape[1] != len(self.grid_t):
            raise ValueError(f"y has {y.shape[1]} columns but the grid has {len(self.grid_t)} points")
        if not np.all(np.isfinite(y)) or np.any(y < 0):
            raise ValueError("counts must be finite and non-negative")
        self.y = y
        off = np.zeros_like(y) if self.offsets is None else np.asarray(self.offsets, dtype=float)
        if off.ndim == 1:
            off = np.repeat(off[:, None], y.shape[1], axis=1)
        if off.shape != y.shape or not np.all(np.isfinite(off)):
            raise ValueError("offsets must be finite and broadcast to y's shape")
        self.offsets = off
        if self.labels is None:
            self.labels = tuple(str(i) for i in range(y.shape[0]))
        self.labels = tuple(str(s) for s in self.labels)
        if len(self.labels) != y.shape[0]:
            raise ValueError("one label per region required")

    @property
    def n(self):
        return self.y.shape[0]

    @property
    def T(self):
        return self.y.shape[1]


@dataclass(eq=False)
class ModelData:
    """Everything a model formula can refer to, keyed by covariate name.

    scalars
        ``(n,)`` per-region values or ``(n, T)`` series on the response grid.
    compositions
        ``(n, D)`` strictly positive parts.
    functional
        ``(Grid, (n, n_s))`` functional covariates on a shared grid.
    densities
        ``(Grid, (n, n_s))`` densities (functional compositions).
    graphs
        :class:`~gfamm.spatial.SpatialGraph` objects for MRF terms.
    groups
        ``(n,)`` level labels for random intercepts; regions themselves are
        always available under the name ``"region"``.
    """

    curves: CurveSet
    scalars: dict = field(default_factory=dict)
    compositions: dict = field(default_factory=dict)
    functional: dict = field(default_factory=dict)
    densities: dict = field(default_factory=dict)
    graphs: dict = field(default_factory=dict)
    groups: dict = field(default_factory=dict)

    def permuted(self, order):
        """Copy with regions reordered by ``order`` (graphs are left as is)."""
        order = np.asarray(order)
        c = self.curves
        curves = CurveSet(c.y[order], c.grid_t, c.offsets[order], tuple(np.asarray(c.labels)[order]))

        def take(d):
            return {k: np.asarray(v)[order] for k, v in d.items()}

        return ModelData(
            curves,
            scalars=take(self.scalars),
            compositions=take(self.compositions),
            functional={k: (g, np.asarray(v)[order]) for k, (g, v) in self.functional.items()},
            densities={k: (g, np.asarray(v)[order]) for k, (g, v) in self.densities.items()},
            graphs=dict(self.graphs),
            groups=take(self.groups),
        )
