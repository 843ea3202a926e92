"""Command-line front end: ``gfamm fit``, ``gfamm simulate`` and ``gfamm transform``.

Configurations are JSON documents carrying ``"schema_version": 1``; unknown
keys anywhere in them are errors.  Relative paths inside a configuration
resolve against the configuration file's directory.  Errors are written to
stderr as one JSON object (``error``, ``message`` and, when known, ``path``,
``line``, ``term``) and the process exits nonzero:

====  ==========================================
code  meaning
====  ==========================================
0     success
2     bad command line, configuration or input file
3     model building or fitting failed
====  ==========================================
"""

import argparse
import datetime as _dt
import json
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from . import io, simplex
from .bayes_space import clr_density, clr_density_inv
from .data import CurveSet, ModelData
from .errors import ConfigError, GfammError, MalformedLine, TermError
from .fit import (
    diagnostics,
    extract_composition_effect,
    extract_effect,
    fit_model,
    parametric_table,
)
from .simulate import SimulationSettings, simulate
from .spatial import format_adjacency, gabriel_graph, read_adjacency, write_adjacency
from .terms import TermSpec

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
FORMAT_VERSION = "1.0"

_FIT_KEYS = {"schema_version", "data", "terms", "lags", "lambda", "output_dir", "threads",
             "zero_replace", "criterion", "alpha"}
_DATA_KEYS = {"response", "offset", "scalars", "series", "groups", "compositions", "densities",
              "functional", "graphs", "weekdays"}
_TERM_KEYS = {"kind", "covariates", "name", "k_x", "k_t", "order_x", "order_t", "degree", "by", "lag",
              "graph", "group", "time_varying", "center"}
_SIM_KEYS = {"schema_version", "simulate", "seed", "output_dir"}


# ---------------------------------------------------------------------------
# configuration


def _load_json(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read configuration: {exc.strerror}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedLine(exc.lineno, f"invalid JSON: {exc.msg}", str(path)) from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: configuration must be a JSON object")
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ConfigError(f"{path}: field 'schema_version' must be {SCHEMA_VERSION}, "
                          f"got {doc.get('schema_version')!r}")
    return doc


def _check_keys(d, allowed, where):
    if not isinstance(d, dict):
        raise ConfigError(f"{where}: expected an object")
    extra = sorted(set(d) - allowed)
    if extra:
        raise ConfigError(f"{where}: unknown key(s) {extra}; allowed: {sorted(allowed)}")


def _as_list(v):
    if v is None:
        return []
    return [v] if isinstance(v, str) else list(v)


def parse_terms(items, lags=None, where="terms"):
    """Turn the ``terms`` list of a configuration into :class:`TermSpec` records.

    A term without an explicit ``lag`` takes the per-covariate lag from
    ``lags``; all lagged covariates of one term must agree.
    """
    lags = lags or {}
    if not isinstance(items, list) or not items:
        raise ConfigError(f"{where}: expected a non-empty list of terms")
    specs = []
    for k, item in enumerate(items):
        loc = f"{where}[{k}]"
        _check_keys(item, _TERM_KEYS, loc)
        if "kind" not in item:
            raise ConfigError(f"{loc}: field 'kind' is required")
        kw = dict(item)
        covs = _as_list(kw.pop("covariates", []))
        if isinstance(kw.get("k_x"), list):
            kw["k_x"] = tuple(kw["k_x"])
        if "lag" not in kw:
            wanted = {lags[c] for c in covs + ([kw["by"]] if kw.get("by") else []) if c in lags}
            if len(wanted) > 1:
                raise ConfigError(f"{loc}: covariates carry different lags {sorted(wanted)}; set 'lag' explicitly")
            if wanted:
                kw["lag"] = wanted.pop()
        try:
            specs.append(TermSpec(covariates=tuple(covs), **kw))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{loc}: {exc}") from None
    return specs


def load_fit_config(path):
    """Parse and validate a fit configuration (without reading data)."""
    path = Path(path)
    doc = _load_json(path)
    _check_keys(doc, _FIT_KEYS, str(path))
    for key in ("data", "terms"):
        if key not in doc:
            raise ConfigError(f"{path}: field {key!r} is required")
    _check_keys(doc["data"], _DATA_KEYS, f"{path}: data")
    if "response" not in doc["data"]:
        raise ConfigError(f"{path}: field 'data.response' is required")
    lags = doc.get("lags", {})
    if not isinstance(lags, dict) or any(not isinstance(v, int) or v < 0 for v in lags.values()):
        raise ConfigError(f"{path}: field 'lags' must map covariate names to integers >= 0")
    doc["specs"] = parse_terms(doc["terms"], lags, f"{path}: terms")
    lam = doc.get("lambda", {})
    if not isinstance(lam, dict) or any(not isinstance(v, (int, float)) or v < 0 for v in lam.values()):
        raise ConfigError(f"{path}: field 'lambda' must map slot ids to non-negative numbers")
    doc["base"] = path.parent
    return doc


def _resolve(base, p):
    p = Path(p)
    return p if p.is_absolute() else base / p


def load_data(cfg, zero_replace=None):
    """Read every data file named in a fit configuration into :class:`ModelData`."""
    base, d = cfg["base"], cfg["data"]
    labels, t, dates, y = io.read_response(_resolve(base, d["response"]))
    t_keys = list(t) if dates is None else [x.isoformat() for x in dates]
    n, T = y.shape
    scalars, groups = {}, {}
    for f in _as_list(d.get("scalars")):
        scalars.update(io.read_scalars(_resolve(base, f), labels))
    for f in _as_list(d.get("series")):
        scalars.update(io.read_series(_resolve(base, f), labels, t_keys))
    for f in _as_list(d.get("groups")):
        groups.update(io.read_groups(_resolve(base, f), labels))
    wd = d.get("weekdays")
    if wd is not None:
        _check_keys(wd, {"reference", "prefix"}, "data.weekdays")
        if dates is None:
            raise ConfigError("data.weekdays needs ISO dates in the response 't' column")
        try:
            ind = io.weekday_indicators(dates, wd.get("reference", "Sunday"), wd.get("prefix", "wd_"))
        except ValueError as exc:
            raise ConfigError(f"data.weekdays: {exc}") from None
        scalars.update({k: np.tile(v, (n, 1)) for k, v in ind.items()})
    compositions = {}
    for name, f in (d.get("compositions") or {}).items():
        compositions[name] = io.read_composition(_resolve(base, f), labels, zero_replace)[1]
    densities = {}
    for name, f in (d.get("densities") or {}).items():
        grid, F, _ = io.read_density(_resolve(base, f), labels, zero_replace)
        densities[name] = (grid, F)
    functional = {}
    for name, f in (d.get("functional") or {}).items():
        grid, X, _ = io.read_functional(_resolve(base, f), labels)
        functional[name] = (grid, X)
    graphs = {}
    for name, g in (d.get("graphs") or {}).items():
        _check_keys(g, {"coordinates", "adjacency"}, f"data.graphs.{name}")
        if len(g) != 1:
            raise ConfigError(f"data.graphs.{name}: give exactly one of 'coordinates' or 'adjacency'")
        if "coordinates" in g:
            clab, xy = io.read_coordinates(_resolve(base, g["coordinates"]))
            graphs[name] = gabriel_graph(xy, clab)
        else:
            graphs[name] = read_adjacency(_resolve(base, g["adjacency"]), labels)
    offsets = None
    off = d.get("offset")
    if off is not None:
        _check_keys(off, {"column", "log"}, "data.offset")
        col = off.get("column")
        if col not in scalars:
            raise ConfigError(f"data.offset: column {col!r} not found among the scalar covariates")
        v = np.asarray(scalars[col], dtype=float)
        if off.get("log", True):
            if np.any(v <= 0):
                raise ConfigError(f"data.offset: column {col!r} must be positive to take logs")
            v = np.log(v)
        offsets = v
    curves = CurveSet(y, t, offsets, labels)
    data = ModelData(curves, scalars, compositions, functional, densities, graphs, groups)
    return data, dates


# ---------------------------------------------------------------------------
# fit


def _write_effects(fitted, out, alpha):
    eff_dir = out / "effects"
    eff_dir.mkdir(exist_ok=True)
    written = []
    for td in fitted.terms:
        e = extract_effect(fitted, td.name, t=fitted.grid_t.points)
        axes = list(e.axes)
        header, cols = [], []
        for ax, size in zip(axes, e.values.shape):
            if ax == "t":
                vals = fitted.grid_t.points
            elif ax == "level":
                vals = np.asarray(td.meta["levels"])
            elif ax in ("ilr", "coef"):
                vals = np.arange(1, size + 1)
            elif ax in ("x", "s"):
                vals = e.grids[ax]
            else:  # tensor interaction: axes are covariate names
                vals = e.grids["x"][axes.index(ax)]
            header.append(ax)
            cols.append(np.asarray(vals))
        mesh = np.meshgrid(*cols, indexing="ij")
        flat = [m.ravel() for m in mesh]
        rows = zip(*flat, e.values.ravel(), e.se.ravel(), e.lower.ravel(), e.upper.ravel())
        fname = eff_dir / f"{_safe(td.name)}.csv"
        io.write_table(fname, header + ["estimate", "se", "lower", "upper"], rows)
        written.append(fname.name)
        if td.kind in ("composition_linear", "composition_linear_tv"):
            ce = extract_composition_effect(fitted, td.name, alpha=alpha, t=fitted.grid_t.points)
            parts = [f"part{j + 1}" for j in range(td.meta["D"])]
            cname = eff_dir / f"{_safe(td.name)}_clr.csv"
            ratio_cols = [f"ratio_{a:g}" for a in ce.ratio]
            if td.kind == "composition_linear":
                rows = ([parts[j], ce.gradient[j], ce.clr[j], ce.clr_se[j]] + [ce.ratio[a][j] for a in ce.ratio]
                        for j in range(len(parts)))
                io.write_table(cname, ["part", "gradient", "clr", "clr_se"] + ratio_cols, rows)
            else:
                tt = fitted.grid_t.points
                rows = ([tt[k], parts[j], ce.gradient[k, j], ce.clr[k, j], ce.clr_se[k, j]]
                        + [ce.ratio[a][k, j] for a in ce.ratio]
                        for k in range(tt.size) for j in range(len(parts)))
                io.write_table(cname, ["t", "part", "gradient", "clr", "clr_se"] + ratio_cols, rows)
            written.append(cname.name)
    return written


def _safe(name):
    return "".join(c if c.isalnum() or c in "-_" else "_" for c in name).strip("_")


def _model_document(fitted, cfg):
    terms = []
    for td in fitted.terms:
        sl = fitted.index[td.name]
        spec = td.meta["spec"]
        terms.append({
            "name": td.name,
            "kind": td.kind,
            "covariates": list(spec.covariates),
            "lag": spec.lag,
            "coef_start": sl.start,
            "coef_stop": sl.stop,
            "edf": fitted.edf_terms[td.name],
            "slots": td.slots,
        })
    return {
        "format_version": FORMAT_VERSION,
        "n_regions": fitted.n,
        "n_times": fitted.T,
        "n_obs": fitted.n_obs,
        "labels": list(fitted.labels),
        "t": fitted.grid_t.points,
        "terms": terms,
        "theta": fitted.theta,
        "lambda": {s: {"value": v, "fixed": fitted.lambda_fixed[s]} for s, v in fitted.lambdas.items()},
        "dispersion": fitted.dispersion,
        "edf": fitted.edf,
        "deviance": fitted.deviance,
        "null_deviance": fitted.null_deviance,
        "deviance_explained": fitted.deviance_explained,
        "gcv": fitted.gcv,
        "converged": fitted.converged,
        "convergence_log": fitted.log,
        "cov_diag": np.diag(fitted.cov),
    }


def _report(fitted, diag):
    lines = [
        f"regions {fitted.n}  time points {fitted.T}  observed cells {fitted.n_obs}",
        f"edf {fitted.edf:.3f}",
        f"dispersion {fitted.dispersion:.4f}",
        f"deviance explained {fitted.deviance_explained:.4f}",
        f"gcv {fitted.gcv:.6g}",
        f"converged {fitted.converged}",
        f"pearson residual variance {diag['residual_variance']:.4f}",
        f"share |r| > 1: {diag['share_abs_gt_1']:.4f}  share |r| > 2: {diag['share_abs_gt_2']:.4f}",
        "",
        "term edf",
    ]
    lines += [f"  {name}  {edf:.3f}" for name, edf in fitted.edf_terms.items()]
    lines += ["", "smoothing parameters"]
    all_fixed = all(fitted.lambda_fixed.values())
    for slot, v in fitted.lambdas.items():
        lines.append(f"  {slot}  {v:.6g}  {'fixed' if fitted.lambda_fixed[slot] else 'selected'}")
    lines += ["", "selection: " + ("fixed (all smoothing parameters given)" if all_fixed else "gcv")]
    return "\n".join(lines) + "\n"


def cmd_fit(config, out=None, threads=None, zero_replace=None):
    cfg = load_fit_config(config)
    zr = zero_replace if zero_replace is not None else cfg.get("zero_replace")
    out = Path(out) if out else _resolve(cfg["base"], cfg.get("output_dir", "fit_output"))
    threads = threads or cfg.get("threads", 1)
    alpha = tuple(_as_list(cfg.get("alpha", [1.1])))
    data, _ = load_data(cfg, zr)
    fitted = fit_model(cfg["specs"], data, lambdas=cfg.get("lambda"), threads=threads,
                       criterion=cfg.get("criterion", "gcv"))
    out.mkdir(parents=True, exist_ok=True)
    io.write_json(out / "model.json", _model_document(fitted, cfg))
    _write_effects(fitted, out, alpha)
    io.write_table(out / "wald.csv", ["coefficient", "estimate", "exp_estimate", "se", "t", "p_value"],
                   ([r["term"], r["estimate"], r["exp_estimate"], r["se"], r["t"], r["p"]]
                    for r in parametric_table(fitted)))
    diag = diagnostics(fitted)
    tt = fitted.grid_t.points
    rows = ([lab, tt[k], diag["observed"][i, k], diag["fitted"][i, k], diag["pearson"][i, k]]
            for i, lab in enumerate(fitted.labels) for k in range(fitted.T)
            if np.isfinite(diag["pearson"][i, k]))
    io.write_table(out / "residuals.csv", ["region", "t", "observed", "fitted", "pearson"], rows)
    io.write_table(out / "acf.csv", ["lag", "acf"], enumerate(diag["acf"]))
    (out / "report.txt").write_text(_report(fitted, diag))
    return fitted


# ---------------------------------------------------------------------------
# simulate


GOLDEN_TERMS = [
    {"kind": "intercept", "k_t": 12},
    {"kind": "smooth_scalar", "covariates": ["x"], "k_x": 8},
    {"kind": "composition_linear", "covariates": ["comp"]},
    {"kind": "fun_composition", "covariates": ["age"], "k_x": 6, "k_t": 6},
    {"kind": "random_intercept", "graph": "gabriel", "k_t": 6},
]


def application_terms(k_t=8, k_intercept=8, k_s=5):
    """The full application model at reduced basis sizes.

    Weather covariates enter with a five-step lag (set through ``lags``).
    """
    lin = [{"kind": "linear_scalar", "covariates": [c]} for c in
           ["rain", "gdp", "transport"]
           + [f"wd_{d}" for d in ("Monday", "Tuesday", "Wednesday", "Thursday", "Friday", "Saturday")]
           + ["lockdown1", "lockdown2", "lockdown3"]]
    return [
        {"kind": "intercept", "k_t": k_intercept},
        *lin,
        {"kind": "linear_scalar_tv", "covariates": ["sea"], "k_t": k_t},
        {"kind": "linear_scalar_tv", "covariates": ["dens"], "k_t": k_t},
        {"kind": "concurrent_smooth", "covariates": ["temp"], "k_x": 6},
        {"kind": "concurrent_smooth", "covariates": ["sun"], "k_x": 6},
        {"kind": "concurrent_smooth", "covariates": ["hum"], "k_x": 6},
        {"kind": "concurrent_smooth", "covariates": ["wind"], "k_x": 5},
        {"kind": "concurrent_smooth", "covariates": ["lprec"], "by": "rain", "k_x": 5},
        {"kind": "tensor_interaction", "covariates": ["hum", "temp"], "k_x": [5, 5]},
        {"kind": "random_intercept", "graph": "gabriel", "k_t": k_t},
        {"kind": "random_intercept", "group": "community", "k_t": k_t},
        {"kind": "composition_linear", "covariates": ["smoke"]},
        {"kind": "composition_linear_tv", "covariates": ["sex"], "k_t": k_t},
        {"kind": "fun_composition", "covariates": ["age"], "k_x": k_s, "k_t": k_s},
    ]


WEATHER_LAGS = {c: 5 for c in ("temp", "sun", "hum", "wind", "lprec", "rain")}


def load_simulate_config(path):
    path = Path(path)
    doc = _load_json(path)
    _check_keys(doc, _SIM_KEYS, str(path))
    try:
        doc["settings"] = SimulationSettings.from_dict(doc.get("simulate", {}))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: simulate: {exc}") from None
    doc["base"] = path.parent
    return doc


def write_simulation(data, truth, out):
    """Write a simulated data set in the ingestion formats plus truth and a fit config."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    c = data.curves
    labels = c.labels
    settings = truth["settings"]
    full = settings["scenario"] == "full"
    t = c.grid_t.points
    if full:
        d0 = _dt.date.fromisoformat(truth["full"]["start_date"])
        t_out = [(d0 + _dt.timedelta(days=int(v))).isoformat() for v in t]
        io.write_table(out / "response.csv", ["region", "t", "count"],
                       ([lab, t_out[k], int(c.y[i, k])] for i, lab in enumerate(labels) for k in range(c.T)))
    else:
        io.write_response(out / "response.csv", labels, t, c.y)
    per_region = {k: v for k, v in data.scalars.items() if np.ndim(v) == 1}
    series = {k: v for k, v in data.scalars.items() if np.ndim(v) == 2 and not k.startswith("wd_")}
    io.write_scalars(out / "scalars.csv", labels, per_region)
    if series:
        if full:
            header = ["region", "t"] + list(series)
            io.write_table(out / "series.csv", header,
                           ([lab, t_out[k]] + [series[s][i, k] for s in series]
                            for i, lab in enumerate(labels) for k in range(c.T)))
        else:
            io.write_series(out / "series.csv", labels, t, series)
    if data.groups:
        io.write_table(out / "groups.csv", ["region"] + list(data.groups),
                       ([lab] + [data.groups[g][i] for g in data.groups] for i, lab in enumerate(labels)))
    for name, X in data.compositions.items():
        io.write_composition(out / f"composition_{name}.csv", labels,
                             [f"part{j + 1}" for j in range(X.shape[1])], X)
    for name, (grid, F) in data.densities.items():
        io.write_density(out / f"density_{name}.csv", grid.points, labels, F)
    io.write_coordinates(out / "coords.csv", labels, truth["coords"])
    write_adjacency(truth["graph"], out / "graph.txt")

    truth_doc = {k: v for k, v in truth.items() if k not in ("graph", "coords", "mu")}
    truth_doc["format_version"] = FORMAT_VERSION
    io.write_json(out / "truth.json", truth_doc)

    data_cfg = {
        "response": "response.csv",
        "offset": {"column": "population", "log": True},
        "scalars": "scalars.csv",
        "compositions": {name: f"composition_{name}.csv" for name in data.compositions},
        "densities": {name: f"density_{name}.csv" for name in data.densities},
        "graphs": {"gabriel": {"coordinates": "coords.csv"}},
    }
    if series:
        data_cfg["series"] = "series.csv"
    if data.groups:
        data_cfg["groups"] = "groups.csv"
    cfg = {"schema_version": SCHEMA_VERSION, "data": data_cfg}
    if full:
        data_cfg["weekdays"] = {"reference": "Sunday", "prefix": "wd_"}
        cfg["lags"] = WEATHER_LAGS
        cfg["terms"] = application_terms()
    else:
        cfg["terms"] = GOLDEN_TERMS
    cfg["output_dir"] = "fit_output"
    io.write_json(out / "fit_config.json", cfg)


def cmd_simulate(config, seed=None, out=None):
    cfg = load_simulate_config(config)
    seed = seed if seed is not None else cfg.get("seed", 0)
    if not isinstance(seed, int) or seed < 0:
        raise ConfigError(f"{config}: field 'seed' must be a non-negative integer")
    out = Path(out) if out else _resolve(cfg["base"], cfg.get("output_dir", "simulated"))
    data, truth = simulate(cfg["settings"], seed)
    write_simulation(data, truth, out)
    return out


# ---------------------------------------------------------------------------
# transform


def _read_plain_composition(path, zero_replace):
    header, rows = io.read_table(path)
    labels = tuple(f[0] for _, f in rows)
    return io.read_composition(path, labels, zero_replace) + (labels, header[0])


def cmd_transform(kind, input, output, zero_replace=None):
    """Apply a standalone transform to a file.

    clr, ilr
        composition table (``region,<part>...``) to coordinates
        ``region,clr1..clrD`` or ``region,ilr1..ilr(D-1)`` (pivot basis).
    clr-inv, ilr-inv
        the inverses, closing to 1.
    clr-density, clr-density-inv
        density file (grid column plus one column per region) to clr curves
        in the same layout, and back.
    graph
        coordinates file (``label,x,y``) to a Gabriel-graph edge list.
    """
    if kind in ("clr", "ilr"):
        parts, X, kappa, labels, first = _read_plain_composition(input, zero_replace)
        if kind == "clr":
            Y, names = simplex.clr(X), [f"clr{j + 1}" for j in range(X.shape[1])]
        else:
            Y, names = simplex.ilr_pivot(X), [f"ilr{j + 1}" for j in range(X.shape[1] - 1)]
        io.write_table(output, [first] + names, ([lab] + list(row) for lab, row in zip(labels, Y)))
    elif kind in ("clr-inv", "ilr-inv"):
        header, rows = io.read_table(input)
        labels = [f[0] for _, f in rows]
        Z = np.array([[io._float(v, input, ln, header[k + 1]) for k, v in enumerate(f[1:])] for ln, f in rows])
        X = simplex.clr_inv(Z) if kind == "clr-inv" else simplex.ilr_pivot_inv(Z)
        names = [f"part{j + 1}" for j in range(X.shape[1])]
        io.write_table(output, [header[0]] + names, ([lab] + list(row) for lab, row in zip(labels, X)))
    elif kind == "clr-density":
        grid, F, labels = io.read_density(input, None, zero_replace)
        io.write_density(output, grid.points, labels, clr_density(F, grid), first=io.read_table(input)[0][0])
    elif kind == "clr-density-inv":
        grid, U, labels = io.read_functional(input)
        io.write_density(output, grid.points, labels, clr_density_inv(U, grid), first=io.read_table(input)[0][0])
    elif kind == "graph":
        labels, xy = io.read_coordinates(input)
        Path(output).write_text(format_adjacency(gabriel_graph(xy, labels)))
    else:  # pragma: no cover - argparse restricts choices
        raise ConfigError(f"unknown transform {kind!r}")


TRANSFORMS = ("clr", "clr-inv", "ilr", "ilr-inv", "clr-density", "clr-density-inv", "graph")


# ---------------------------------------------------------------------------
# entry point


def build_parser():
    p = argparse.ArgumentParser(prog="gfamm", description=__doc__.split("\n\n")[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    f = sub.add_parser("fit", help="fit a model described by a JSON configuration")
    f.add_argument("--config", required=True, type=Path)
    f.add_argument("--out", type=Path, help="output directory (default: the config's output_dir)")
    f.add_argument("--threads", type=int, help="worker threads for smoothing-parameter search")
    f.add_argument("--zero-replace", type=float, metavar="EPS",
                   help="replace zero composition/density values by EPS times the total")

    s = sub.add_parser("simulate", help="write a synthetic data set with known effects")
    s.add_argument("--config", required=True, type=Path)
    s.add_argument("--seed", type=int)
    s.add_argument("--out", type=Path)

    t = sub.add_parser("transform", help="apply a compositional or graph transform to a file")
    t.add_argument("kind", choices=TRANSFORMS)
    t.add_argument("--input", required=True, type=Path)
    t.add_argument("--out", required=True, type=Path)
    t.add_argument("--zero-replace", type=float, metavar="EPS")
    return p


def _error(exc, code):
    info = {"error": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, MalformedLine):
        info.update(path=exc.path, line=exc.lineno)
    if isinstance(exc, TermError):
        info.update(term=exc.term, cause=type(exc.cause).__name__)
    print(json.dumps(info), file=sys.stderr)
    return code


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            if args.command == "fit":
                if args.threads is not None and args.threads < 1:
                    raise ConfigError("--threads must be >= 1")
                cmd_fit(args.config, args.out, args.threads, args.zero_replace)
            elif args.command == "simulate":
                cmd_simulate(args.config, args.seed, args.out)
            else:
                cmd_transform(args.kind, args.input, args.out, args.zero_replace)
        for w in caught:
            print(json.dumps({"warning": w.category.__name__, "message": str(w.message)}), file=sys.stderr)
    except TermError as exc:
        return _error(exc, 3)
    except (MalformedLine, ConfigError) as exc:
        return _error(exc, 2)
    except GfammError as exc:
        return _error(exc, 3)
    except (ValueError, KeyError, OSError) as exc:
        return _error(exc, 2)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
