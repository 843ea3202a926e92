"""Design matrices and penalties for each kind of additive term.

Every builder returns a :class:`TermDesign` whose ``Phi`` has one row per
observed response cell (regions slow, time fast) and whose penalties are
listed with the smoothing slot each one belongs to.  Terms whose span
contains the functional intercept are centred over the observed rows via
:func:`~gfamm.basis.constraint_nullspace`; ``Z`` records that map so effects
can be evaluated on the original basis.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import simplex
from .basis import (
    SplineBasis,
    constraint_nullspace,
    difference_penalty,
    row_tensor,
)
from .bayes_space import Grid, clr_density, normalize_density
from .errors import (
    ConfoundingWarning,
    DegenerateCovariate,
    DimensionMismatch,
    GridMismatch,
    InvalidPrecision,
    MissingCovariate,
    UnknownLevel,
)
from .spatial import mrf_precision

KINDS = (
    "intercept",
    "linear_scalar",
    "linear_scalar_tv",
    "smooth_scalar",
    "smooth_scalar_tv",
    "tensor_interaction",
    "fun_on_fun",
    "concurrent_smooth",
    "composition_linear",
    "composition_linear_tv",
    "fun_composition",
    "random_intercept",
)

_N_COVARIATES = {
    "intercept": 0,
    "linear_scalar": 1,
    "linear_scalar_tv": 1,
    "smooth_scalar": 1,
    "smooth_scalar_tv": 1,
    "tensor_interaction": 2,
    "fun_on_fun": 1,
    "concurrent_smooth": 1,
    "composition_linear": 1,
    "composition_linear_tv": 1,
    "fun_composition": 1,
    "random_intercept": 0,
}

DEFAULT_K_T = 10
DEFAULT_K_X = 8
DEFAULT_K_S = 6


@dataclass(frozen=True)
class TermSpec:
    """Declarative description of one additive term.

    ``k_x`` is the covariate-side basis dimension (a pair for
    ``tensor_interaction``, the s-basis for functional covariates) and ``k_t``
    the dimension of the basis over the response domain.  ``lag`` shifts
    time-varying covariates (and ``by``) by that many grid steps so the
    covariate at ``t - lag`` meets the response at ``t``.
    """

    kind: str
    covariates: tuple = ()
    name: str = None
    k_x: object = None
    k_t: int = None
    order_x: int = 2
    order_t: int = 2
    degree: int = 3
    by: str = None
    lag: int = 0
    graph: str = None
    group: str = "region"
    time_varying: bool = False
    center: bool = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown term kind {self.kind!r}; expected one of {', '.join(KINDS)}")
        covs = (self.covariates,) if isinstance(self.covariates, str) else tuple(self.covariates)
        object.__setattr__(self, "covariates", covs)
        want = _N_COVARIATES[self.kind]
        if len(covs) != want:
            raise ValueError(f"{self.kind} takes {want} covariate(s), got {len(covs)}")
        if self.name is None:
            label = self.kind if not covs else f"{self.kind}({','.join(covs)})"
            if self.kind == "random_intercept":
                label = f"random_intercept({self.group}{',' + self.graph if self.graph else ''})"
            object.__setattr__(self, "name", label)
        if self.k_t is None:
            object.__setattr__(self, "k_t", DEFAULT_K_T)
        if self.k_x is None:
            k = DEFAULT_K_S if self.kind in ("fun_on_fun", "fun_composition") else DEFAULT_K_X
            object.__setattr__(self, "k_x", (k, k) if self.kind == "tensor_interaction" else k)
        if self.lag < 0:
            raise ValueError("lag must be non-negative")
        if self.kind == "tensor_interaction" and self.time_varying:
            raise ValueError("time-varying tensor interactions are not supported")
        if self.uses_t_basis and self.k_t < max(self.order_t + 1, self.degree + 1):
            raise ValueError(f"k_t={self.k_t} too small for order {self.order_t}, degree {self.degree}")
        if self.kind == "intercept" and self.k_t < 4:
            raise ValueError("the functional intercept needs k_t >= 4")
        for k in np.atleast_1d(self.k_x):
            if self.kind in ("smooth_scalar", "smooth_scalar_tv", "tensor_interaction", "concurrent_smooth",
                             "fun_on_fun", "fun_composition") and k < max(self.order_x + 1, self.degree + 1):
                raise ValueError(f"k_x={k} too small for order {self.order_x}, degree {self.degree}")

    @property
    def uses_t_basis(self):
        return self.kind in (
            "intercept", "linear_scalar_tv", "smooth_scalar_tv", "fun_on_fun",
            "composition_linear_tv", "fun_composition", "random_intercept",
        ) or (self.kind == "concurrent_smooth" and self.time_varying)


@dataclass(eq=False)
class TermDesign:
    """Design block, penalties and extraction metadata of one term."""

    name: str
    kind: str
    Phi: np.ndarray
    penalties: list
    Z: np.ndarray = None
    meta: dict = field(default_factory=dict)

    @property
    def p(self):
        return self.Phi.shape[1]

    @property
    def slots(self):
        return [slot for _, slot in self.penalties]


# ---------------------------------------------------------------------------
# helpers


def _t_basis(spec, grid_t):
    return SplineBasis.uniform(grid_t.points[0], grid_t.points[-1], spec.k_t, spec.degree)


def _all_rows(n, T, rows):
    return np.ones(n * T, dtype=bool) if rows is None else np.asarray(rows, dtype=bool)


def _t_rows(basis_t, grid_t, n, rows):
    Bt = np.tile(basis_t(grid_t.points), (n, 1))
    return Bt[_all_rows(n, len(grid_t), rows)]


def lag_series(x, lag):
    """Shift a ``(n, T)`` series right by ``lag`` steps, padding with NaN."""
    x = np.asarray(x, dtype=float)
    if lag == 0:
        return x
    out = np.full_like(x, np.nan)
    out[:, lag:] = x[:, :-lag]
    return out


def expand(x, T, lag=0):
    """Stack a per-region vector or a ``(n, T)`` series into ``n*T`` rows."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        return np.repeat(x, T)
    if x.ndim == 2 and x.shape[1] == T:
        return lag_series(x, lag).ravel()
    raise DimensionMismatch(f"covariate of shape {x.shape} does not match T={T}")


def _observed(x, T, lag, rows, name):
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    v = expand(x, T, lag)[_all_rows(n, T, rows)]
    if not np.all(np.isfinite(v)):
        raise MissingCovariate(f"covariate {name!r} has missing values on observed rows")
    return v


def _centre(Phi, penalties, C):
    cmap = constraint_nullspace(C)
    Z = cmap.Z
    return Phi @ Z, [(Z.T @ S @ Z, slot) for S, slot in penalties], Z


def _make(spec, Phi, penalties, meta, centring=None, Cx=None, Kt=None):
    """Apply the term's centring rule and package the design.

    ``centring`` is ``"single"`` (one sum-to-zero constraint over all
    observed rows) or ``"per_t"`` (``sum_i f(x_i, t) = 0`` for each t, i.e.
    ``kron(mean(Phi_x), I_Kt)``).
    """
    center = spec.center if spec.center is not None else centring is not None
    Z = None
    if center and centring is not None:
        if centring == "single":
            C = Phi.mean(axis=0)[None, :]
        else:
            C = np.kron(np.asarray(Cx)[None, :], np.eye(Kt))
        Phi, penalties, Z = _centre(Phi, penalties, C)
    meta = dict(meta, spec=spec, centred=Z is not None)
    return TermDesign(spec.name, spec.kind, Phi, penalties, Z, meta)


def _slot(spec, which):
    return f"{spec.name}:{which}"


def _gate(Phi, by):
    return Phi if by is None else Phi * np.asarray(by, dtype=float)[:, None]


# ---------------------------------------------------------------------------
# builders


def design_intercept(spec, grid_t, n, rows=None):
    """Functional intercept ``beta_0(t)``: the t-spline rows for every region."""
    bt = _t_basis(spec, grid_t)
    Phi = _t_rows(bt, grid_t, n, rows)
    P = difference_penalty(spec.k_t, spec.order_t)
    return _make(spec, Phi, [(P, _slot(spec, "t"))], {"basis_t": bt})


def design_linear_scalar(spec, x, grid_t, rows=None, by=None):
    """``x * beta`` or, for ``linear_scalar_tv``, ``x * beta(t)``."""
    if x is None:
        raise MissingCovariate(f"covariate {spec.covariates[0]!r} not supplied")
    x = np.asarray(x, dtype=float)
    n, T = x.shape[0], len(grid_t)
    xe = _gate(_observed(x, T, spec.lag, rows, spec.covariates[0])[:, None], by)
    if spec.kind == "linear_scalar":
        return _make(spec, xe, [], {})
    bt = _t_basis(spec, grid_t)
    Phi = row_tensor(xe, _t_rows(bt, grid_t, n, rows))
    P = difference_penalty(spec.k_t, spec.order_t)
    return _make(spec, Phi, [(P, _slot(spec, "t"))], {"basis_t": bt})


def _x_basis(v, k, spec, name):
    if np.std(v) < 1e-12:
        raise DegenerateCovariate(f"covariate {name!r} is (nearly) constant")
    if np.unique(v).size <= spec.order_x:
        raise DegenerateCovariate(f"covariate {name!r} has too few distinct values")
    return SplineBasis.uniform(v.min(), v.max(), k, spec.degree)


def design_smooth_scalar(spec, x, grid_t, rows=None, by=None):
    """Smooth effect ``f(x)``, ``f(x, t)``, or a concurrent ``f(x(t))``.

    ``x`` is a per-region vector or an ``(n, T)`` series (concurrent case).
    Time-constant variants get one sum-to-zero constraint; time-varying ones
    are centred for each t.
    """
    if x is None:
        raise MissingCovariate(f"covariate {spec.covariates[0]!r} not supplied")
    x = np.asarray(x, dtype=float)
    n, T = x.shape[0], len(grid_t)
    name = spec.covariates[0]
    v = _observed(x, T, spec.lag, rows, name)
    bx = _x_basis(v, spec.k_x, spec, name)
    Bx = _gate(bx(v), by)
    Px = difference_penalty(spec.k_x, spec.order_x)
    tv = spec.kind == "smooth_scalar_tv" or (spec.kind == "concurrent_smooth" and spec.time_varying)
    meta = {"basis_x": bx, "time_varying": tv}
    if not tv:
        return _make(spec, Bx, [(Px, _slot(spec, "x"))], meta, centring="single")
    bt = _t_basis(spec, grid_t)
    Phi = row_tensor(Bx, _t_rows(bt, grid_t, n, rows))
    Pt = difference_penalty(spec.k_t, spec.order_t)
    pens = [
        (np.kron(Px, np.eye(spec.k_t)), _slot(spec, "x")),
        (np.kron(np.eye(spec.k_x), Pt), _slot(spec, "t")),
    ]
    meta["basis_t"] = bt
    return _make(spec, Phi, pens, meta, centring="per_t", Cx=Bx.mean(axis=0), Kt=spec.k_t)


def design_tensor_interaction(spec, x1, x2, grid_t, rows=None, by=None):
    """Time-constant tensor-product smooth ``f(x1, x2)`` of two covariates."""
    for arr, name in ((x1, spec.covariates[0]), (x2, spec.covariates[1])):
        if arr is None:
            raise MissingCovariate(f"covariate {name!r} not supplied")
    x1, x2 = np.asarray(x1, dtype=float), np.asarray(x2, dtype=float)
    T = len(grid_t)
    k1, k2 = spec.k_x
    v1 = _observed(x1, T, spec.lag, rows, spec.covariates[0])
    v2 = _observed(x2, T, spec.lag, rows, spec.covariates[1])
    b1 = _x_basis(v1, k1, spec, spec.covariates[0])
    b2 = _x_basis(v2, k2, spec, spec.covariates[1])
    Phi = _gate(row_tensor(b1(v1), b2(v2)), by)
    pens = [
        (np.kron(difference_penalty(k1, spec.order_x), np.eye(k2)), _slot(spec, "x1")),
        (np.kron(np.eye(k1), difference_penalty(k2, spec.order_x)), _slot(spec, "x2")),
    ]
    return _make(spec, Phi, pens, {"basis_x": (b1, b2)}, centring="single")


def _integral_design(curves, grid_s, Bs):
    """Row i holds the quadrature integrals of ``curves[i] * Bs[:, k]``."""
    return (curves * grid_s.weights) @ Bs


def _check_curves(grid_s, curves):
    if not isinstance(grid_s, Grid):
        grid_s = Grid.from_points(grid_s)
    curves = np.asarray(curves, dtype=float)
    if curves.ndim != 2 or curves.shape[1] != len(grid_s):
        raise GridMismatch(f"curves of shape {curves.shape} do not match a grid of {len(grid_s)} points")
    return grid_s, curves


def _fun_design(spec, grid_s, U, Bs_obs, grid_t, rows, penalty_s, meta):
    n, T = U.shape[0], len(grid_t)
    Phi_x = np.repeat(_integral_design(U, grid_s, Bs_obs), T, axis=0)[_all_rows(n, T, rows)]
    bt = _t_basis(spec, grid_t)
    Phi = row_tensor(Phi_x, _t_rows(bt, grid_t, n, rows))
    Ks = Bs_obs.shape[1]
    pens = [
        (np.kron(penalty_s, np.eye(spec.k_t)), _slot(spec, "s")),
        (np.kron(np.eye(Ks), difference_penalty(spec.k_t, spec.order_t)), _slot(spec, "t")),
    ]
    meta = dict(meta, basis_t=bt, grid_s=grid_s)
    return _make(spec, Phi, pens, meta)


def design_fun_on_fun(spec, grid_s, x_curves, grid_t, rows=None):
    """Linear functional effect ``int x_i(s) beta(s, t) ds``."""
    grid_s, X = _check_curves(grid_s, x_curves)
    if not np.all(np.isfinite(X)):
        raise MissingCovariate(f"functional covariate {spec.covariates[0]!r} has missing values")
    bs = SplineBasis.uniform(grid_s.points[0], grid_s.points[-1], spec.k_x, spec.degree)
    Ps = difference_penalty(spec.k_x, spec.order_x)
    return _fun_design(spec, grid_s, X, bs(grid_s.points), grid_t, rows, Ps, {"basis_s": bs, "Zs": None})


def design_fun_composition(spec, grid_s, densities, grid_t, rows=None):
    """Linear effect of a density covariate through its functional clr.

    The s-marginal basis is restricted to functions integrating to zero
    under the grid weights, so every fitted ``beta(., t)`` integrates to
    zero for each t.
    """
    grid_s, F = _check_curves(grid_s, densities)
    U = clr_density(normalize_density(F, grid_s), grid_s)
    if np.max(np.abs(U - U[0])) < 1e-10:
        warnings.warn(
            f"term {spec.name!r}: all regions share one density; the effect is confounded "
            "with the functional intercept",
            ConfoundingWarning,
            stacklevel=2,
        )
    bs = SplineBasis.uniform(grid_s.points[0], grid_s.points[-1], spec.k_x, spec.degree)
    Bs = bs(grid_s.points)
    Zs = constraint_nullspace(grid_s.weights @ Bs).Z
    Ps = Zs.T @ difference_penalty(spec.k_x, spec.order_x) @ Zs
    return _fun_design(spec, grid_s, U, Bs @ Zs, grid_t, rows, Ps, {"basis_s": bs, "Zs": Zs})


def design_composition(spec, X, grid_t, rows=None, by=None):
    """Linear effect of a finite composition through its pivot coordinates.

    Time-constant: ``D-1`` unpenalised coefficients.  Time-varying: each
    coordinate gets a t-spline and all share one smoothing parameter.
    """
    if X is None:
        raise MissingCovariate(f"composition {spec.covariates[0]!r} not supplied")
    X = simplex.check_composition(X)
    if X.ndim != 2:
        raise DimensionMismatch("compositions must be an (n, D) table")
    n, D = X.shape
    T = len(grid_t)
    Phi_x = _gate(np.repeat(simplex.ilr_pivot(X), T, axis=0)[_all_rows(n, T, rows)], by)
    meta = {"D": D}
    if spec.kind == "composition_linear":
        return _make(spec, Phi_x, [], meta)
    bt = _t_basis(spec, grid_t)
    Phi = row_tensor(Phi_x, _t_rows(bt, grid_t, n, rows))
    P = np.kron(np.eye(D - 1), difference_penalty(spec.k_t, spec.order_t))
    meta["basis_t"] = bt
    return _make(spec, Phi, [(P, _slot(spec, "t"))], meta)


def _check_precision(Q, M):
    Q = np.asarray(Q, dtype=float)
    if Q.shape != (M, M):
        raise InvalidPrecision(f"precision is {Q.shape}, expected ({M}, {M})")
    if not np.allclose(Q, Q.T, atol=1e-12, rtol=0):
        raise InvalidPrecision("precision matrix is not symmetric")
    scale = max(1.0, np.abs(Q).max())
    if np.linalg.eigvalsh(Q).min() < -1e-10 * scale:
        raise InvalidPrecision("precision matrix is not positive semidefinite")
    if np.abs(Q.sum(axis=1)).max() > 1e-10 * scale:
        raise InvalidPrecision("precision matrix rows must sum to zero")
    return Q


def design_random_intercept(spec, groups, grid_t, rows=None, precision=None, levels=None):
    """Functional random intercept ``gamma_c(t)`` for a grouping variable.

    ``levels`` fixes the coefficient order (defaults to the sorted distinct
    group labels); ``precision`` couples levels, e.g. an MRF; without it the
    levels are independent.
    """
    groups = np.asarray(groups).astype(str)
    if levels is None:
        levels = sorted(set(groups.tolist()))
    levels = tuple(str(s) for s in levels)
    where = {s: k for k, s in enumerate(levels)}
    missing = [g for g in groups if g not in where]
    if missing:
        raise UnknownLevel(f"group label {missing[0]!r} is not a level of {spec.name!r}")
    M = len(levels)
    n, T = groups.size, len(grid_t)
    ind = np.zeros((n, M))
    ind[np.arange(n), [where[g] for g in groups]] = 1.0
    ind = np.repeat(ind, T, axis=0)[_all_rows(n, T, rows)]
    Px = np.eye(M) if precision is None else _check_precision(precision, M)
    bt = _t_basis(spec, grid_t)
    Phi = row_tensor(ind, _t_rows(bt, grid_t, n, rows))
    pens = [
        (np.kron(Px, np.eye(spec.k_t)), _slot(spec, "x")),
        (np.kron(np.eye(M), difference_penalty(spec.k_t, spec.order_t)), _slot(spec, "t")),
    ]
    meta = {"basis_t": bt, "levels": levels, "mrf": precision is not None}
    centring = "per_t" if M > 1 else None
    return _make(spec, Phi, pens, meta, centring=centring, Cx=ind.mean(axis=0), Kt=spec.k_t)


# ---------------------------------------------------------------------------
# dispatch


def _series_names(spec):
    return list(spec.covariates) + ([spec.by] if spec.by else [])


def required_lag(spec, data):
    """Number of leading time points this term cannot use."""
    if spec.lag == 0 or spec.kind in ("fun_on_fun", "fun_composition", "composition_linear",
                                      "composition_linear_tv", "random_intercept", "intercept"):
        return 0
    for name in _series_names(spec):
        v = data.scalars.get(name)
        if v is not None and np.ndim(v) == 2:
            return spec.lag
    return 0


def _scalar(data, name):
    if name not in data.scalars:
        raise MissingCovariate(f"scalar covariate {name!r} not found")
    return data.scalars[name]


def build_term(spec, data, rows=None):
    """Build the design of ``spec`` from a :class:`~gfamm.data.ModelData`."""
    curves = data.curves
    grid_t = curves.grid_t
    T = curves.T
    by = None
    if spec.by is not None:
        by = _observed(_scalar(data, spec.by), T, spec.lag, rows, spec.by)
    kind = spec.kind
    if kind == "intercept":
        return design_intercept(spec, grid_t, curves.n, rows)
    if kind in ("linear_scalar", "linear_scalar_tv"):
        return design_linear_scalar(spec, _scalar(data, spec.covariates[0]), grid_t, rows, by)
    if kind in ("smooth_scalar", "smooth_scalar_tv", "concurrent_smooth"):
        x = _scalar(data, spec.covariates[0])
        if kind == "concurrent_smooth" and np.ndim(x) != 2:
            raise DimensionMismatch(f"concurrent term {spec.name!r} needs a (n, T) series")
        return design_smooth_scalar(spec, x, grid_t, rows, by)
    if kind == "tensor_interaction":
        return design_tensor_interaction(
            spec, _scalar(data, spec.covariates[0]), _scalar(data, spec.covariates[1]), grid_t, rows, by
        )
    if kind in ("composition_linear", "composition_linear_tv"):
        name = spec.covariates[0]
        if name not in data.compositions:
            raise MissingCovariate(f"composition {name!r} not found")
        return design_composition(spec, data.compositions[name], grid_t, rows, by)
    if kind == "fun_on_fun":
        name = spec.covariates[0]
        if name not in data.functional:
            raise MissingCovariate(f"functional covariate {name!r} not found")
        grid_s, X = data.functional[name]
        return design_fun_on_fun(spec, grid_s, X, grid_t, rows)
    if kind == "fun_composition":
        name = spec.covariates[0]
        if name not in data.densities:
            raise MissingCovariate(f"density covariate {name!r} not found")
        grid_s, F = data.densities[name]
        return design_fun_composition(spec, grid_s, F, grid_t, rows)
    # random_intercept
    if spec.group == "region":
        groups = np.asarray(curves.labels)
    elif spec.group in data.groups:
        groups = np.asarray(data.groups[spec.group]).astype(str)
    else:
        raise MissingCovariate(f"grouping variable {spec.group!r} not found")
    precision = levels = None
    if spec.graph is not None:
        if spec.graph not in data.graphs:
            raise MissingCovariate(f"graph {spec.graph!r} not found")
        graph = data.graphs[spec.graph]
        precision, levels = mrf_precision(graph), graph.labels
    return design_random_intercept(spec, groups, grid_t, rows, precision, levels)


# ---------------------------------------------------------------------------
# evaluation on new points


def effect_basis(td, x=None, t=None, s=None):
    """Matrix mapping a term's coefficients to effect values on a grid.

    Returns ``(E, shape, axes)``; ``E @ theta_term`` reshaped to ``shape``
    gives the effect, and ``axes`` names the dimensions.  Unneeded arguments
    are ignored; missing ones default to the grids used for fitting.
    """
    meta, kind = td.meta, td.kind
    spec = meta["spec"]
    if t is None and "basis_t" in meta:
        lo, hi = meta["basis_t"].domain
        t = np.linspace(lo, hi, 101)
    t = None if t is None else np.asarray(t, dtype=float)

    def mesh(A, B):
        ia, ib = np.meshgrid(np.arange(A.shape[0]), np.arange(B.shape[0]), indexing="ij")
        return row_tensor(A[ia.ravel()], B[ib.ravel()])

    if kind == "intercept":
        E, shape, axes = meta["basis_t"](t), (t.size,), ("t",)
    elif kind == "linear_scalar":
        E, shape, axes = np.eye(1), (1,), ("coef",)
    elif kind == "linear_scalar_tv":
        E, shape, axes = meta["basis_t"](t), (t.size,), ("t",)
    elif kind in ("smooth_scalar", "smooth_scalar_tv", "concurrent_smooth"):
        bx = meta["basis_x"]
        if x is None:
            x = np.linspace(*bx.domain, 101)
        x = np.asarray(x, dtype=float)
        if meta["time_varying"]:
            E, shape, axes = mesh(bx(x), meta["basis_t"](t)), (x.size, t.size), ("x", "t")
        else:
            E, shape, axes = bx(x), (x.size,), ("x",)
    elif kind == "tensor_interaction":
        b1, b2 = meta["basis_x"]
        if x is None:
            x = (np.linspace(*b1.domain, 41), np.linspace(*b2.domain, 41))
        x1, x2 = (np.asarray(v, dtype=float) for v in x)
        E, shape, axes = mesh(b1(x1), b2(x2)), (x1.size, x2.size), tuple(spec.covariates)
    elif kind in ("fun_on_fun", "fun_composition"):
        if s is None:
            s = meta["grid_s"].points
        s = np.asarray(s, dtype=float)
        Bs = meta["basis_s"](s)
        if meta["Zs"] is not None:
            Bs = Bs @ meta["Zs"]
        E, shape, axes = mesh(Bs, meta["basis_t"](t)), (s.size, t.size), ("s", "t")
    elif kind == "composition_linear":
        D = meta["D"]
        E, shape, axes = np.eye(D - 1), (D - 1,), ("ilr",)
    elif kind == "composition_linear_tv":
        D = meta["D"]
        E, shape, axes = mesh(np.eye(D - 1), meta["basis_t"](t)), (D - 1, t.size), ("ilr", "t")
    elif kind == "random_intercept":
        M = len(meta["levels"])
        E, shape, axes = mesh(np.eye(M), meta["basis_t"](t)), (M, t.size), ("level", "t")
    else:  # pragma: no cover
        raise ValueError(kind)
    if td.Z is not None:
        E = E @ td.Z
    grids = {"t": t, "x": x, "s": s}
    return E, shape, axes, grids
