"""Synthetic count curves with known effects.

The default scenario draws ``n`` regions observed on ``T`` days with a
functional intercept, a smooth effect of a per-region scalar, a time-constant
effect of a four-part composition, a separable effect of a density
covariate, and an MRF functional random intercept on the regions' Gabriel
graph.  Counts are quasi-Poisson with dispersion ``xi``, drawn as negative
binomial with mean ``mu`` and variance ``xi * mu``.

True smooth effects are centred the same way the fitted terms are (over the
observed regions), so estimates and truth are directly comparable.
"""

from dataclasses import asdict, dataclass

import numpy as np

from . import simplex
from .bayes_space import Grid, clr_density, normalize_density
from .data import CurveSet, ModelData
from .spatial import gabriel_graph, mrf_precision


@dataclass
class SimulationSettings:
    n_regions: int = 40
    n_times: int = 60
    dispersion: float = 5.0
    log_rate: float = -7.5
    n_density_points: int = 51
    composition_beta: tuple = (0.6, -0.4, 0.5)
    scenario: str = "golden"

    @classmethod
    def from_dict(cls, d):
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown simulation setting(s): {sorted(extra)}")
        d = dict(d)
        if "composition_beta" in d:
            d["composition_beta"] = tuple(d["composition_beta"])
        s = cls(**d)
        s.validate()
        return s

    def validate(self):
        if self.n_regions < 3:
            raise ValueError("need at least 3 regions")
        if self.n_times < 8:
            raise ValueError("need at least 8 time points")
        if not self.dispersion >= 1:
            raise ValueError("quasi-Poisson dispersion must be >= 1 for this generator")
        if len(self.composition_beta) != 3:
            raise ValueError("composition_beta needs 3 pivot coefficients (D = 4)")
        if self.scenario not in ("golden", "full"):
            raise ValueError(f"unknown scenario {self.scenario!r}")

    def to_dict(self):
        return asdict(self)


def quasi_poisson_counts(rng, mu, xi):
    """Counts with mean ``mu`` and variance ``xi * mu``."""
    mu = np.asarray(mu, dtype=float)
    if xi == 1:
        return rng.poisson(mu)
    r = mu / (xi - 1.0)
    return rng.negative_binomial(r, 1.0 / xi)


def _sd_scale(v, target):
    return target / np.std(v)


def simulate(settings=None, seed=0):
    """Draw one synthetic data set.

    Returns
    -------
    data : ModelData
    truth : dict
        True effect values (see the module docstring) keyed by term, plus
        the region coordinates and the graph used for the MRF.
    """
    s = settings or SimulationSettings()
    s.validate()
    rng = np.random.default_rng(seed)
    n, T = s.n_regions, s.n_times
    labels = tuple(f"R{i + 1:02d}" for i in range(n))
    t = np.arange(T, dtype=float)
    grid_t = Grid.from_points(t)
    u = t / (T - 1)

    coords = rng.uniform(0, 10, size=(n, 2))
    graph = gabriel_graph(coords, labels)
    population = np.round(np.exp(rng.uniform(np.log(2e5), np.log(2e6), n)))
    offsets = np.log(population)

    beta0 = s.log_rate + 0.8 * np.sin(2 * np.pi * u) + 0.4 * np.cos(4 * np.pi * u)

    x = rng.uniform(0, 1, n)
    f_raw = lambda v: 0.4 * np.sin(2 * np.pi * v)  # noqa: E731
    f_shift = f_raw(x).mean()
    f_x = f_raw(x) - f_shift
    x_grid = np.linspace(x.min(), x.max(), 101)

    comp = simplex.closure(np.exp(rng.normal([0.0, -1.0, 0.5, 1.0], 0.5, size=(n, 4))))
    comp_beta = np.asarray(s.composition_beta, dtype=float)
    comp_contrib = simplex.ilr_pivot(comp) @ comp_beta

    S_pts = np.linspace(0, 100, s.n_density_points)
    grid_s = Grid.from_points(S_pts)
    v = S_pts / 100
    phis = np.stack([v - 0.5] + [np.cos(k * np.pi * v) for k in range(1, 5)])
    a = rng.normal(0, 1, size=(n, phis.shape[0])) * np.array([1.0, 0.6, 0.4, 0.3, 0.25])
    dens = normalize_density(np.exp(a @ phis), grid_s)
    clr_u = clr_density(dens, grid_s)
    g = np.cos(np.pi * v) + 0.5 * np.cos(2 * np.pi * v)
    g = g - grid_s.integrate(g) / grid_s.length
    g *= _sd_scale(grid_s.integrate(clr_u * g), 0.3)
    h = 1.0 + 0.5 * np.sin(2 * np.pi * u)
    beta_st = np.outer(g, h)
    dens_contrib = grid_s.integrate(clr_u * g)[:, None] * h[None, :]

    Q = mrf_precision(graph)
    _, vecs = np.linalg.eigh(Q)
    # smoothest non-constant graph eigenvectors are orthogonal to constants,
    # so the field is centred over regions at every t
    v1, v2 = vecs[:, 1], vecs[:, 2]
    gamma = np.outer(v1, np.sin(2 * np.pi * u)) + np.outer(v2, 0.7 * np.cos(2 * np.pi * u))
    gamma *= _sd_scale(gamma, 0.25)

    eta_terms = beta0[None, :] + f_x[:, None] + comp_contrib[:, None] + dens_contrib + gamma
    scalars = {"population": population, "x": x}
    compositions = {"comp": comp}
    groups = {}
    truth = {}

    if s.scenario == "full":
        extra, extra_truth = _full_scenario(rng, n, T, t)
        eta_terms = eta_terms + extra["eta"]
        scalars.update(extra["scalars"])
        compositions.update(extra["compositions"])
        groups.update(extra["groups"])
        truth.update(extra_truth)

    mu = np.exp(offsets[:, None] + eta_terms)
    y = quasi_poisson_counts(rng, mu, s.dispersion)

    data = ModelData(
        CurveSet(y, grid_t, offsets, labels),
        scalars=scalars,
        compositions=compositions,
        densities={"age": (grid_s, dens)},
        graphs={"gabriel": graph},
        groups=groups,
    )
    truth.update({
        "settings": s.to_dict(),
        "seed": seed,
        "t": t,
        "intercept": beta0,
        "smooth_x": {"x": x_grid, "f": f_raw(x_grid) - f_shift},
        "composition": {"beta": comp_beta, "contribution": comp_contrib},
        "density": {"s": S_pts, "t": t, "beta": beta_st, "contribution": dens_contrib},
        "mrf": {"gamma": gamma},
        "mu": mu,
        "coords": coords,
        "graph": graph,
        "dispersion": s.dispersion,
    })
    return data, truth


#: calendar date of ``t = 0`` in the full scenario (a Wednesday)
START_DATE = "2020-03-04"
WEEKDAY_NAMES = ("Monday", "Tuesday", "Wednesday", "Thursday", "Friday", "Saturday")


def _full_scenario(rng, n, T, t):
    """Extra covariates so the full application template runs end to end."""
    weekday = (t.astype(int) + 2) % 7  # Monday = 0, Sunday = 6 is the reference
    wd = {f"wd_{d}": np.tile((weekday == k).astype(float), (n, 1)) for k, d in enumerate(WEEKDAY_NAMES)}
    lock = {
        f"lockdown{k + 1}": np.tile(((t >= lo) & (t < hi)).astype(float), (n, 1))
        for k, (lo, hi) in enumerate([(10, 20), (30, 35), (45, 50)])
    }
    temp = 15 + 8 * np.sin(2 * np.pi * t / T)[None, :] + rng.normal(0, 2, (n, T))
    hum = 60 + rng.normal(0, 10, (n, T))
    sun = np.clip(8 + rng.normal(0, 2, (n, T)), 0, 14)
    wind = np.abs(rng.normal(12, 5, (n, T)))
    prec = rng.exponential(3, (n, T)) * (rng.uniform(size=(n, T)) < 0.3)
    rain = (prec > 0).astype(float)
    lprec = np.where(prec > 0, np.log(np.maximum(prec, 1e-3)), 0.0)
    gdp = rng.uniform(1.5, 3.5, n)
    transport = (rng.uniform(size=n) < 0.3).astype(float)
    sea = (rng.uniform(size=n) < 0.4).astype(float)
    dens = rng.lognormal(4.5, 0.8, n) / 100
    sex = simplex.closure(np.column_stack([rng.normal(0.49, 0.01, n), np.full(n, 0.51)]))
    smoke = simplex.closure(np.exp(rng.normal([-1.5, -3.0, -1.2, 0.3], 0.3, size=(n, 4))))
    community = np.array([f"C{k % 5 + 1}" for k in range(n)])
    eff_wd = np.array([0.3, 0.35, 0.32, 0.3, 0.33, 0.1])
    eta = sum(eff_wd[k] * wd[f"wd_{d}"] for k, d in enumerate(WEEKDAY_NAMES))
    eta = eta - 0.1 * lock["lockdown1"]
    eta = eta + 0.05 * rain - 0.3 * (gdp - gdp.mean())[:, None] + 0.3 * transport[:, None]
    eta = eta - 0.02 * (temp - 15)
    scalars = dict(wd, **lock)
    scalars.update(temp=temp, hum=hum, sun=sun, wind=wind, rain=rain, lprec=lprec,
                   gdp=gdp, transport=transport, sea=sea, dens=dens)
    out = {
        "eta": eta,
        "scalars": scalars,
        "compositions": {"sex": sex, "smoke": smoke},
        "groups": {"community": community},
    }
    return out, {"full": {"start_date": START_DATE, "weekday": dict(zip(WEEKDAY_NAMES, eff_wd)), "lockdown1": -0.1, "rain": 0.05, "gdp": -0.3,
                          "transport": 0.3, "temp_slope": -0.02}}
