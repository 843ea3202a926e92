"""Penalised quasi-Poisson estimation of functional additive models.

The inner loop is penalised IRLS for a log link; the outer loop picks one
smoothing parameter per penalty slot by minimising GCV on a log-spaced grid
with coordinate-descent sweeps.  The quasi-Poisson dispersion is estimated
afterwards from the Pearson statistic, and the Bayesian covariance
``xi * (Phi' W Phi + S)^{-1}`` drives standard errors and pointwise bands.
"""

import logging
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, stats

from . import simplex
from .bayes_space import clr_density_inv
from .errors import (
    Diverged,
    GfammError,
    NonPositiveMean,
    SelectionWarning,
    SingularSystem,
    TermError,
    UnknownTerm,
)
from .terms import build_term, effect_basis, required_lag

log = logging.getLogger(__name__)

DEVIANCE_RTOL = 1e-8
MAX_ITER = 200
MAX_HALVINGS = 5
LOG10_LAMBDA_GRID = np.linspace(-4.0, 8.0, 25)
MAX_SWEEPS = 5
ACF_MAX_LAG = 30


# ---------------------------------------------------------------------------
# likelihood pieces


def quasi_poisson_loglik(y, mu, xi=1.0):
    """Poisson log-likelihood kernel ``sum(y log mu - mu) / xi``."""
    mu = np.asarray(mu, dtype=float)
    if np.any(~(mu > 0)):
        raise NonPositiveMean("fitted means must be strictly positive")
    y = np.asarray(y, dtype=float)
    return float(np.sum(y * np.log(mu) - mu) / xi)


def poisson_deviance(y, mu):
    """``2 sum(y log(y/mu) - (y - mu))`` with the log term 0 where y = 0."""
    y = np.asarray(y, dtype=float)
    mu = np.asarray(mu, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        ylog = np.where(y > 0, y * np.log(y / mu), 0.0)
    return float(2.0 * np.sum(ylog - (y - mu)))


def penalized_loglik(theta, Phi, y, offset, S, xi=1.0):
    eta = Phi @ theta + offset
    return quasi_poisson_loglik(y, np.exp(eta), xi) - 0.5 * theta @ S @ theta


def penalized_score(theta, Phi, y, offset, S, xi=1.0):
    """Gradient of :func:`penalized_loglik` with respect to ``theta``."""
    mu = np.exp(Phi @ theta + offset)
    return Phi.T @ (y - mu) / xi - S @ theta


def pearson_statistic(y, mu):
    return float(np.sum((y - mu) ** 2 / mu))


def dispersion_estimate(y, mu, edf):
    """Pearson statistic over residual degrees of freedom."""
    y = np.asarray(y, dtype=float)
    return pearson_statistic(y, mu) / (y.size - edf)


def null_means(y, offsets):
    """Fitted means of the offset-plus-constant model."""
    c = np.log(np.sum(y) / np.sum(np.exp(offsets)))
    return np.exp(offsets + c)


def deviance_explained(y, mu, offsets):
    """``1 - D(model) / D(null)`` with the null model offset plus a constant."""
    d0 = poisson_deviance(y, null_means(y, offsets))
    if d0 <= 0:
        return 1.0
    return 1.0 - poisson_deviance(y, mu) / d0


# ---------------------------------------------------------------------------
# P-IRLS


@dataclass(eq=False)
class PirlsResult:
    theta: np.ndarray
    mu: np.ndarray
    eta: np.ndarray
    W: np.ndarray
    edf: float
    converged: bool
    iterations: int
    penalized_deviance: float
    XtWX: np.ndarray
    factor: tuple
    log: list = field(default_factory=list)


def _factor(A, log_):
    try:
        return linalg.cho_factor(A, lower=False, check_finite=True)
    except linalg.LinAlgError:
        pass
    ridge = 1e-10 * np.trace(A) / A.shape[0]
    log_.append({"event": "ridge", "value": float(ridge)})
    try:
        return linalg.cho_factor(A + ridge * np.eye(A.shape[0]), lower=False)
    except linalg.LinAlgError as exc:
        raise SingularSystem("penalised normal matrix is not positive definite") from exc


def _eval(theta, Phi, y, offsets, S):
    with np.errstate(over="ignore"):
        eta = Phi @ theta + offsets
        mu = np.exp(eta)
    if not np.all(np.isfinite(mu)):
        return eta, mu, np.inf
    return eta, mu, poisson_deviance(y, mu) + float(theta @ S @ theta)


def _worse(new, old):
    # increases at rounding level are not divergence
    return new > old + 1e-11 * (abs(old) + 1.0)


def pirls(y, offsets, Phi, S, start=None, tol=DEVIANCE_RTOL, max_iter=MAX_ITER):
    """Penalised IRLS for a log-link (quasi-)Poisson model.

    Minimises ``deviance + theta' S theta``.  Each step solves
    ``(Phi' W Phi + S) theta = Phi' W z`` with ``W = mu`` and working
    response ``z = eta - offset + (y - mu) / mu``; a step that raises the
    penalised deviance is halved up to ``MAX_HALVINGS`` times.

    Parameters
    ----------
    y, offsets : ndarray, shape (n_obs,)
    Phi : ndarray, shape (n_obs, p)
    S : ndarray, shape (p, p)
        Total penalty, smoothing parameters already applied.
    start : ndarray, optional
        Warm-start coefficients; otherwise ``mu = max(y, 0.1) + 0.1``.

    Raises
    ------
    Diverged
        If halving never recovers a decrease.
    SingularSystem
        If the penalised normal matrix cannot be factorised even with a ridge.
    """
    y = np.asarray(y, dtype=float)
    offsets = np.asarray(offsets, dtype=float)
    events = []
    if start is None:
        mu = np.maximum(y, 0.1) + 0.1
        eta = np.log(mu)
        theta_old, pdev_old = None, np.inf
    else:
        theta_old = np.asarray(start, dtype=float)
        eta, mu, pdev_old = _eval(theta_old, Phi, y, offsets, S)
        if not np.isfinite(pdev_old):
            mu = np.maximum(y, 0.1) + 0.1
            eta = np.log(mu)
            theta_old = None
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        z = eta - offsets + (y - mu) / mu
        WPhi = Phi * mu[:, None]
        XtWX = Phi.T @ WPhi
        factor = _factor(XtWX + S, events)
        theta = linalg.cho_solve(factor, WPhi.T @ z)
        eta_new, mu_new, pdev = _eval(theta, Phi, y, offsets, S)
        if theta_old is not None and _worse(pdev, pdev_old):
            step = theta - theta_old
            for _ in range(MAX_HALVINGS):
                step = step / 2
                theta = theta_old + step
                eta_new, mu_new, pdev = _eval(theta, Phi, y, offsets, S)
                if not _worse(pdev, pdev_old):
                    break
            else:
                raise Diverged(f"penalised deviance increased after {MAX_HALVINGS} step halvings")
            events.append({"event": "step_halving", "iteration": it})
        change = abs(pdev - pdev_old) / (abs(pdev) + 0.1) if np.isfinite(pdev_old) else np.inf
        theta_old, pdev_old, eta, mu = theta, pdev, eta_new, mu_new
        if change < tol:
            converged = True
            break
    WPhi = Phi * mu[:, None]
    XtWX = Phi.T @ WPhi
    factor = _factor(XtWX + S, events)
    edf = float(np.trace(linalg.cho_solve(factor, XtWX)))
    if not converged:
        events.append({"event": "max_iter", "iterations": it})
    return PirlsResult(theta_old, mu, eta, mu, edf, converged, it, pdev_old, XtWX, factor, events)


def coef_covariance(PhiWPhi, S, xi):
    """Bayesian posterior covariance ``xi * (Phi' W Phi + S)^{-1}``."""
    A = PhiWPhi + S
    try:
        factor = linalg.cho_factor(A)
    except linalg.LinAlgError as exc:
        raise SingularSystem("penalised normal matrix is not positive definite") from exc
    cov = xi * linalg.cho_solve(factor, np.eye(A.shape[0]))
    return (cov + cov.T) / 2


def wald_table(theta, cov, names=None):
    """Wald statistics ``theta_j / se_j`` with two-sided normal p-values."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    se = np.sqrt(np.diag(np.atleast_2d(cov)))
    if names is None:
        names = [f"coef{j}" for j in range(theta.size)]
    rows = []
    for name, b, s in zip(names, theta, se):
        t = b / s if s > 0 else np.nan
        rows.append({
            "term": name,
            "estimate": float(b),
            "exp_estimate": float(np.exp(b)),
            "se": float(s),
            "t": float(t),
            "p": float(2 * stats.norm.sf(abs(t))) if np.isfinite(t) else np.nan,
        })
    return rows


# ---------------------------------------------------------------------------
# smoothing parameter selection


def gcv_score(y, mu, edf):
    n = y.size
    if n - edf <= 0:
        return np.inf
    return n * pearson_statistic(y, mu) / (n - edf) ** 2


@dataclass(eq=False)
class Selection:
    lambdas: dict
    gcv: float
    fit: PirlsResult
    at_boundary: list
    evaluations: int
    sweeps: int


def _total_penalty(slot_mats, lambdas, p):
    S = np.zeros((p, p))
    for slot, mat in slot_mats.items():
        S += lambdas[slot] * mat
    return S


def select_lambda(Phi, slot_mats, y, offsets, fixed=None, criterion="gcv", threads=1,
                  log10_grid=LOG10_LAMBDA_GRID, max_sweeps=MAX_SWEEPS):
    """GCV selection of one smoothing parameter per slot.

    ``slot_mats`` maps slot ids to full-size ``p x p`` penalty matrices.
    Slots listed in ``fixed`` keep their value.  Free slots start at
    ``lambda = 1`` and are updated one at a time by exhaustive search over
    ``10 ** log10_grid``; sweeps repeat until nothing changes or
    ``max_sweeps`` is reached.  All grid fits in one scan warm-start from the
    same coefficients, so results do not depend on ``threads``.
    """
    if criterion != "gcv":
        raise ValueError(f"unsupported criterion {criterion!r}")
    fixed = dict(fixed or {})
    p = Phi.shape[1]
    grid = 10.0 ** np.asarray(log10_grid, dtype=float)
    free = [s for s in slot_mats if s not in fixed]
    lambdas = {s: float(fixed.get(s, 1.0)) for s in slot_mats}
    best = pirls(y, offsets, Phi, _total_penalty(slot_mats, lambdas, p))
    best_gcv = gcv_score(y, best.mu, best.edf)
    evaluations, sweeps = 1, 0
    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        for sweeps in range(1, max_sweeps + 1 if free else 1):
            changed = False
            for slot in free:
                start = best.theta

                def trial(value, slot=slot, start=start):
                    lam = dict(lambdas, **{slot: value})
                    try:
                        res = pirls(y, offsets, Phi, _total_penalty(slot_mats, lam, p), start=start)
                    except (Diverged, SingularSystem):
                        return np.inf, None
                    return gcv_score(y, res.mu, res.edf), res

                results = list(pool.map(trial, grid)) if pool else [trial(v) for v in grid]
                evaluations += len(results)
                scores = np.array([r[0] for r in results])
                k = int(np.argmin(scores))
                if results[k][1] is None:
                    continue
                if grid[k] != lambdas[slot]:
                    lambdas[slot] = float(grid[k])
                    changed = True
                best, best_gcv = results[k][1], float(scores[k])
            if not changed:
                break
    finally:
        if pool:
            pool.shutdown()
    boundary = [s for s in free if lambdas[s] in (grid[0], grid[-1])]
    if boundary:
        warnings.warn(f"smoothing parameters at grid endpoints: {', '.join(boundary)}",
                      SelectionWarning, stacklevel=2)
    return Selection(lambdas, best_gcv, best, boundary, evaluations, sweeps)


# ---------------------------------------------------------------------------
# full model


@dataclass(eq=False)
class FittedModel:
    """Result of :func:`fit_model`.

    Arrays ``y``, ``mu``, ``eta`` and ``offsets`` hold the observed cells
    only (``rows`` marks them within the ``n * T`` stacked grid).
    """

    terms: list
    index: dict
    theta: np.ndarray
    lambdas: dict
    lambda_fixed: dict
    dispersion: float
    edf: float
    edf_terms: dict
    deviance: float
    null_deviance: float
    deviance_explained: float
    cov: np.ndarray
    y: np.ndarray
    mu: np.ndarray
    eta: np.ndarray
    offsets: np.ndarray
    rows: np.ndarray
    n: int
    T: int
    grid_t: object
    labels: tuple
    converged: bool
    gcv: float
    log: list

    @property
    def n_obs(self):
        return self.y.size

    def term(self, name):
        for td in self.terms:
            if td.name == name:
                return td
        raise UnknownTerm(f"no term named {name!r}; terms are {[t.name for t in self.terms]}")

    def coef(self, name):
        return self.theta[self.index[self.term(name).name]]

    def coef_cov(self, name):
        sl = self.index[self.term(name).name]
        return self.cov[sl, sl]

    def to_grid(self, values):
        """Scatter observed-cell values back onto an ``(n, T)`` array (NaN elsewhere)."""
        out = np.full(self.n * self.T, np.nan)
        out[self.rows] = values
        return out.reshape(self.n, self.T)

    def term_contribution(self, name):
        td = self.term(name)
        return td.Phi @ self.coef(name)


def observed_rows(specs, data):
    lag = max((required_lag(s, data) for s in specs), default=0)
    n, T = data.curves.n, data.curves.T
    if lag >= T:
        raise ValueError(f"lag {lag} leaves no observed time points")
    return np.tile(np.arange(T) >= lag, n)


def fit_model(specs, data, lambdas=None, threads=1, criterion="gcv"):
    """Build all terms, select smoothing parameters and fit.

    Parameters
    ----------
    specs : list of TermSpec
        Must include an ``intercept`` term.
    data : ModelData
    lambdas : dict, optional
        Smoothing parameters pinned by slot id (``"<term name>:<margin>"``).
        Pinning every slot skips selection.
    threads : int
        Worker threads for the smoothing-parameter grid.
    """
    specs = list(specs)
    if not any(s.kind == "intercept" for s in specs):
        raise ValueError("a model needs a functional intercept term")
    names = [s.name for s in specs]
    if len(set(names)) != len(names):
        raise ValueError(f"term names must be unique: {names}")
    rows = observed_rows(specs, data)
    designs = []
    for spec in specs:
        try:
            designs.append(build_term(spec, data, rows))
        except GfammError as exc:
            raise TermError(spec.name, exc) from exc
    Phi = np.hstack([td.Phi for td in designs])
    p = Phi.shape[1]
    index, start = {}, 0
    slot_mats = {}
    for td in designs:
        sl = slice(start, start + td.p)
        index[td.name] = sl
        for S, slot in td.penalties:
            full = np.zeros((p, p))
            full[sl, sl] = S
            slot_mats[slot] = full
        start += td.p
    lambdas = dict(lambdas or {})
    unknown = set(lambdas) - set(slot_mats)
    if unknown:
        raise ValueError(f"lambda given for unknown slot(s): {sorted(unknown)}")
    y = data.curves.y.ravel()[rows]
    offsets = data.curves.offsets.ravel()[rows]
    if set(slot_mats) <= set(lambdas):
        chosen, start_theta = {s: float(lambdas[s]) for s in slot_mats}, None
        events = [{"event": "selection", "skipped": True}]
    else:
        sel = select_lambda(Phi, slot_mats, y, offsets, fixed=lambdas, criterion=criterion, threads=threads)
        chosen, start_theta = sel.lambdas, sel.fit.theta
        events = [{"event": "selection", "evaluations": sel.evaluations, "sweeps": sel.sweeps,
                   "gcv": sel.gcv, "at_boundary": sel.at_boundary}]
    S = _total_penalty(slot_mats, chosen, p)
    try:
        res = pirls(y, offsets, Phi, S, start=start_theta)
    except GfammError as exc:
        raise TermError("<model>", exc) from exc
    xi = dispersion_estimate(y, res.mu, res.edf)
    cov = coef_covariance(res.XtWX, S, xi)
    F = linalg.cho_solve(res.factor, res.XtWX)
    edf_terms = {td.name: float(np.trace(F[index[td.name], index[td.name]])) for td in designs}
    dev = poisson_deviance(y, res.mu)
    dev0 = poisson_deviance(y, null_means(y, offsets))
    events += res.log + [{"event": "final_fit", "iterations": res.iterations, "converged": res.converged}]
    return FittedModel(
        terms=designs,
        index=index,
        theta=res.theta,
        lambdas=dict(chosen),
        lambda_fixed={s: s in lambdas for s in slot_mats},
        dispersion=xi,
        edf=res.edf,
        edf_terms=edf_terms,
        deviance=dev,
        null_deviance=dev0,
        deviance_explained=min(1.0, max(0.0, 1.0 - dev / dev0)) if dev0 > 0 else 1.0,
        cov=cov,
        y=y,
        mu=res.mu,
        eta=res.eta,
        offsets=offsets,
        rows=rows,
        n=data.curves.n,
        T=data.curves.T,
        grid_t=data.curves.grid_t,
        labels=data.curves.labels,
        converged=res.converged,
        gcv=gcv_score(y, res.mu, res.edf),
        log=events,
    )


# ---------------------------------------------------------------------------
# interpretation


@dataclass(eq=False)
class Effect:
    """Effect estimate with pointwise standard errors and bands."""

    term: str
    values: np.ndarray
    se: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    axes: tuple
    grids: dict


def extract_effect(fitted, term, x=None, t=None, s=None, level=0.95):
    """Evaluate a term's effect with ``estimate +- z * se`` bands."""
    td = fitted.term(term)
    E, shape, axes, grids = effect_basis(td, x=x, t=t, s=s)
    theta = fitted.coef(td.name)
    C = fitted.coef_cov(td.name)
    values = E @ theta
    se = np.sqrt(np.maximum(np.einsum("ij,jk,ik->i", E, C, E), 0.0))
    z = stats.norm.ppf(0.5 + level / 2)
    r = lambda a: a.reshape(shape)  # noqa: E731
    return Effect(td.name, r(values), r(se), r(values - z * se), r(values + z * se), axes, grids)


@dataclass(eq=False)
class CompositionEffect:
    """Interpretation of a compositional term.

    For finite compositions ``gradient`` is the simplicial gradient ``b``
    (one row per time point when time-varying), ``clr`` its clr coordinates
    with standard errors ``clr_se``, and ``ratio`` the response factors
    ``alpha ** clr_j(b)``, one entry per requested ``alpha``.  For density
    covariates ``clr`` is the surface ``beta(s, t)`` (axes ``s, t``) and
    ``gradient`` holds ``clr^{-1}(beta(., t))`` as rows per time point.
    """

    term: str
    kind: str
    coef: np.ndarray
    gradient: np.ndarray
    clr: np.ndarray
    clr_se: np.ndarray
    ratio: dict
    grids: dict


def extract_composition_effect(fitted, term, alpha=(1.1,), t=None, s=None):
    td = fitted.term(term)
    alphas = tuple(np.atleast_1d(alpha).astype(float))
    if td.kind == "composition_linear":
        beta = fitted.coef(td.name)
        C = fitted.coef_cov(td.name)
        V = simplex.pivot_contrast_matrix(td.meta["D"])
        clr_b = V @ beta
        clr_se = np.sqrt(np.maximum(np.diag(V @ C @ V.T), 0))
        b = simplex.simplicial_gradient(beta)
        ratio = {a: simplex.relative_ratio_effect(clr_b, a) for a in alphas}
        return CompositionEffect(td.name, td.kind, beta, b, clr_b, clr_se, ratio, {})
    if td.kind == "composition_linear_tv":
        eff = extract_effect(fitted, td.name, t=t)
        D = td.meta["D"]
        V = simplex.pivot_contrast_matrix(D)
        beta_t = eff.values.T  # (len t, D-1)
        clr_b = beta_t @ V.T
        E, shape, _, _ = effect_basis(td, t=eff.grids["t"])
        C = fitted.coef_cov(td.name)
        # rows of E are (ilr j, t) pairs; map to clr parts for each t
        nt = shape[1]
        Et = E.reshape(D - 1, nt, -1)
        clr_rows = np.einsum("dj,jtp->tdp", V, Et)
        clr_se = np.sqrt(np.maximum(np.einsum("tdp,pq,tdq->td", clr_rows, C, clr_rows), 0))
        b = simplex.simplicial_gradient(beta_t)
        ratio = {a: simplex.relative_ratio_effect(clr_b, a) for a in alphas}
        return CompositionEffect(td.name, td.kind, beta_t, b, clr_b, clr_se, ratio, eff.grids)
    if td.kind == "fun_composition":
        eff = extract_effect(fitted, td.name, t=t, s=s)
        grid_s = td.meta["grid_s"]
        if s is None:
            b = clr_density_inv(eff.values.T, grid_s)
        else:
            b = None
        ratio = {a: simplex.relative_ratio_effect(eff.values, a) for a in alphas}
        return CompositionEffect(td.name, td.kind, fitted.coef(td.name), b, eff.values, eff.se, ratio, eff.grids)
    raise UnknownTerm(f"term {term!r} is not compositional (kind {td.kind})")


def parametric_table(fitted):
    """Wald table of all unpenalised coefficients (linear and ilr terms)."""
    rows = []
    for td in fitted.terms:
        if td.kind == "linear_scalar":
            rows += wald_table(fitted.coef(td.name), fitted.coef_cov(td.name), [td.name])
        elif td.kind == "composition_linear":
            D = td.meta["D"]
            labels = [f"ilr{j + 1}({td.meta['spec'].covariates[0]})" for j in range(D - 1)]
            rows += wald_table(fitted.coef(td.name), fitted.coef_cov(td.name), labels)
    return rows


def diagnostics(fitted, max_lag=ACF_MAX_LAG):
    """Scaled Pearson residuals, their pooled ACF and fitted/observed curves."""
    r = (fitted.y - fitted.mu) / np.sqrt(fitted.dispersion * fitted.mu)
    R = fitted.to_grid(r)
    acf = pooled_acf(R, max_lag)
    return {
        "pearson": R,
        "acf": acf,
        "fitted": fitted.to_grid(fitted.mu),
        "observed": fitted.to_grid(fitted.y),
        "residual_variance": float(np.var(r)),
        "share_abs_gt_1": float(np.mean(np.abs(r) > 1)),
        "share_abs_gt_2": float(np.mean(np.abs(r) > 2)),
    }


def pooled_acf(R, max_lag=ACF_MAX_LAG):
    """ACF of residual series pooled over regions; NaN cells are skipped."""
    R = np.asarray(R, dtype=float)
    ok = np.isfinite(R)
    m = R[ok].mean()
    D = np.where(ok, R - m, 0.0)
    denom = np.sum(D**2)
    T = R.shape[1]
    out = np.empty(min(max_lag, T - 1) + 1)
    if denom == 0:
        # constant residuals (e.g. an exact fit) have no defined autocorrelation
        return np.full_like(out, np.nan)
    for k in range(out.size):
        both = ok[:, : T - k] & ok[:, k:]
        out[k] = np.sum((D[:, : T - k] * D[:, k:])[both]) / denom
    return out
