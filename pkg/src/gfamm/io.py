"""Readers and writers for the delimited-text input and output formats.

All tables have a header row.  Files ending in ``.tsv`` or ``.txt`` are
tab-separated, everything else comma-separated.  Every parse error names the
file, the line and, where there is one, the field.

Formats
-------
response
    long format ``region,t,count``; every region must cover the same ``t``
    values.  ``t`` is numeric or an ISO date (then days since the first date).
scalars
    ``region,<name>,...`` one row per region.
series
    ``region,t,<name>,...`` time-varying covariates on the response grid.
groups
    ``region,<name>,...`` with string-valued group labels.
composition
    ``region,<part>,...``; ``kappa`` is the median row sum and each row must
    match it to ``KAPPA_RTOL`` before being re-closed.
density
    first column the grid point, then one column per region (header names
    the regions).
coordinates
    ``label,x,y``.
"""

import csv
import datetime as _dt
import json
from pathlib import Path

import numpy as np

from . import simplex
from .bayes_space import Grid, normalize_density
from .errors import MalformedLine, NonPositiveDensity, NonPositivePart

#: relative tolerance for a composition row sum against the table's kappa
KAPPA_RTOL = 1e-2

WEEKDAYS = ("Monday", "Tuesday", "Wednesday", "Thursday", "Friday", "Saturday", "Sunday")


def _delimiter(path):
    return "\t" if Path(path).suffix.lower() in (".tsv", ".txt") else ","


def read_table(path):
    """Return ``(header, rows)`` where rows are ``(lineno, fields)``."""
    path = Path(path)
    try:
        fh = path.open(newline="")
    except OSError as exc:
        raise MalformedLine(0, f"cannot read file: {exc.strerror}", str(path)) from exc
    with fh:
        reader = csv.reader(fh, delimiter=_delimiter(path))
        header = None
        rows = []
        for fields in reader:
            lineno = reader.line_num
            if not fields or all(not f.strip() for f in fields):
                continue
            fields = [f.strip() for f in fields]
            if header is None:
                header = fields
                if len(set(header)) != len(header):
                    raise MalformedLine(lineno, "duplicate column names in header", str(path))
                continue
            if len(fields) != len(header):
                raise MalformedLine(lineno, f"expected {len(header)} fields, got {len(fields)}", str(path))
            rows.append((lineno, fields))
    if header is None:
        raise MalformedLine(1, "empty file (a header row is required)", str(path))
    return header, rows


def _float(value, path, lineno, column):
    try:
        v = float(value)
    except ValueError:
        raise MalformedLine(lineno, f"field {column!r}: {value!r} is not a number", str(path)) from None
    if not np.isfinite(v):
        raise MalformedLine(lineno, f"field {column!r}: non-finite value {value!r}", str(path))
    return v


def _expect(header, names, path):
    for k, name in enumerate(names):
        if k >= len(header) or header[k].lower() != name:
            raise MalformedLine(1, f"column {k + 1} must be {name!r}", str(path))


def parse_time(values):
    """Numeric time values, or days since the first date for ISO dates.

    Returns ``(t, dates)`` with ``dates`` None for numeric input.
    """
    try:
        return np.array([float(v) for v in values]), None
    except ValueError:
        pass
    dates = [_dt.date.fromisoformat(v) for v in values]
    d0 = min(dates)
    return np.array([(d - d0).days for d in dates], dtype=float), dates


def read_response(path):
    """Read long-format counts into ``(labels, t, dates, y)``.

    Regions keep their order of first appearance; ``y`` is ``(n, T)``.
    """
    header, rows = read_table(path)
    _expect(header, ("region", "t", "count"), path)
    labels, cells = [], {}
    raw_t = []
    for lineno, f in rows:
        region, tv = f[0], f[1]
        c = _float(f[2], path, lineno, "count")
        if c < 0 or c != int(c):
            raise MalformedLine(lineno, f"field 'count': {f[2]!r} is not a non-negative integer", str(path))
        if region not in cells:
            labels.append(region)
            cells[region] = {}
        if tv in cells[region]:
            raise MalformedLine(lineno, f"duplicate cell for region {region!r}, t={tv}", str(path))
        cells[region][tv] = c
        raw_t.append((lineno, tv))
    if not labels:
        raise MalformedLine(2, "no data rows", str(path))
    try:
        tvals, dates = parse_time([tv for _, tv in raw_t])
    except ValueError as exc:
        raise MalformedLine(raw_t[0][0], f"field 't': {exc}", str(path)) from None
    key = dict(zip((tv for _, tv in raw_t), tvals))
    order = sorted(set(key), key=lambda k: key[k])
    t = np.array([key[k] for k in order])
    y = np.empty((len(labels), len(order)))
    for i, region in enumerate(labels):
        got = cells[region]
        missing = [k for k in order if k not in got]
        if missing:
            raise MalformedLine(0, f"region {region!r} has no count for t={missing[0]}", str(path))
        y[i] = [got[k] for k in order]
    if dates is not None:
        date_of = dict(zip((tv for _, tv in raw_t), dates))
        dates = [date_of[k] for k in order]
    return tuple(labels), t, dates, y


def _index_rows(rows, labels, path):
    where = {s: k for k, s in enumerate(labels)}
    seen = {}
    for lineno, f in rows:
        if f[0] not in where:
            raise MalformedLine(lineno, f"unknown region {f[0]!r}", str(path))
        if f[0] in seen:
            raise MalformedLine(lineno, f"duplicate row for region {f[0]!r}", str(path))
        seen[f[0]] = (lineno, f)
    missing = [s for s in labels if s not in seen]
    if missing:
        raise MalformedLine(0, f"no row for region {missing[0]!r}", str(path))
    return [seen[s] for s in labels]


def read_scalars(path, labels):
    """Per-region numeric covariates as ``{name: (n,) array}``."""
    header, rows = read_table(path)
    _expect(header, ("region",), path)
    ordered = _index_rows(rows, labels, path)
    return {
        name: np.array([_float(f[k], path, lineno, name) for lineno, f in ordered])
        for k, name in enumerate(header[1:], start=1)
    }


def read_groups(path, labels):
    """Per-region string labels as ``{name: (n,) array of str}``."""
    header, rows = read_table(path)
    _expect(header, ("region",), path)
    ordered = _index_rows(rows, labels, path)
    return {name: np.array([f[k] for _, f in ordered]) for k, name in enumerate(header[1:], start=1)}


def read_series(path, labels, t_keys):
    """Time-varying covariates as ``{name: (n, T) array}``.

    ``t_keys`` are the response's time values as strings or numbers; every
    (region, t) cell must be present.
    """
    header, rows = read_table(path)
    _expect(header, ("region", "t"), path)
    where = {s: k for k, s in enumerate(labels)}
    tpos = {_tkey(v): k for k, v in enumerate(t_keys)}
    n, T = len(labels), len(t_keys)
    names = header[2:]
    out = {name: np.full((n, T), np.nan) for name in names}
    for lineno, f in rows:
        if f[0] not in where:
            raise MalformedLine(lineno, f"unknown region {f[0]!r}", str(path))
        k = tpos.get(_tkey(f[1]))
        if k is None:
            raise MalformedLine(lineno, f"field 't': {f[1]!r} is not on the response grid", str(path))
        i = where[f[0]]
        for c, name in enumerate(names, start=2):
            if not np.isnan(out[name][i, k]):
                raise MalformedLine(lineno, f"duplicate cell for region {f[0]!r}, t={f[1]}", str(path))
            out[name][i, k] = _float(f[c], path, lineno, name)
    for name, arr in out.items():
        if np.isnan(arr).any():
            i, k = np.argwhere(np.isnan(arr))[0]
            raise MalformedLine(0, f"column {name!r} missing for region {labels[i]!r}, t={t_keys[k]}", str(path))
    return out


def _tkey(v):
    try:
        return float(v)
    except (TypeError, ValueError):
        return str(v)


def read_composition(path, labels, zero_replace=None):
    """Read a composition table.

    Returns ``(parts, X, kappa)`` with ``X`` re-closed to ``kappa``.  Zero or
    negative parts raise :class:`MalformedLine` unless ``zero_replace`` is
    given, in which case they become ``zero_replace * kappa``.
    """
    header, rows = read_table(path)
    _expect(header, ("region",), path)
    parts = tuple(header[1:])
    if len(parts) < 2:
        raise MalformedLine(1, "a composition needs at least two parts", str(path))
    ordered = _index_rows(rows, labels, path)
    X = np.array([[_float(v, path, lineno, parts[k]) for k, v in enumerate(f[1:])] for lineno, f in ordered])
    kappa = float(np.median(X.sum(axis=1)))
    if not kappa > 0:
        raise MalformedLine(0, "composition rows must have positive sums", str(path))
    for (lineno, f), row in zip(ordered, X):
        if zero_replace is None:
            bad = np.flatnonzero(~(row > 0))
            if bad.size:
                raise MalformedLine(lineno, f"field {parts[bad[0]]!r}: part must be > 0 "
                                    "(use --zero-replace to impute)", str(path))
        if abs(row.sum() - kappa) > KAPPA_RTOL * kappa:
            raise MalformedLine(lineno, f"row sums to {row.sum():.6g}, table kappa is {kappa:.6g}", str(path))
    if zero_replace is not None:
        X = simplex.zero_replace(X, zero_replace, kappa)
    try:
        X = simplex.closure(X, kappa)
    except NonPositivePart as exc:  # pragma: no cover - caught above
        raise MalformedLine(0, str(exc), str(path)) from exc
    return parts, X, kappa


def _read_grid_table(path, labels):
    header, rows = read_table(path)
    if len(header) < 2:
        raise MalformedLine(1, "need a grid column and at least one region column", str(path))
    cols = tuple(header[1:])
    pts = np.array([_float(f[0], path, lineno, header[0]) for lineno, f in rows])
    vals = np.array([[_float(v, path, lineno, cols[k]) for k, v in enumerate(f[1:])] for lineno, f in rows])
    if pts.size < 3 or np.any(np.diff(pts) <= 0):
        raise MalformedLine(0, "grid column must have >= 3 strictly increasing points", str(path))
    F = vals.T
    linenos = [lineno for lineno, _ in rows]
    if labels is not None:
        where = {s: k for k, s in enumerate(cols)}
        missing = [s for s in labels if s not in where]
        if missing:
            raise MalformedLine(1, f"no column for region {missing[0]!r}", str(path))
        F = F[[where[s] for s in labels]]
        cols = tuple(labels)
    return Grid.from_points(pts), F, cols, linenos


def read_functional(path, labels=None):
    """Read functional covariate curves on a shared grid (density layout, no normalisation).

    Returns ``(grid, X, labels)`` with ``X`` of shape ``(n, n_s)``.
    """
    return _read_grid_table(path, labels)[:3]


def read_density(path, labels=None, zero_replace=None):
    """Read densities (or raw histograms) on a shared grid.

    Returns ``(grid, F, labels)`` with each row of ``F`` normalised to
    integrate to one.  With ``labels`` given, columns are reordered to match.
    Zero or negative values raise :class:`MalformedLine` unless
    ``zero_replace`` is given; they are then set to ``zero_replace`` times the
    row total before normalising.
    """
    grid, F, cols, linenos = _read_grid_table(path, labels)
    if zero_replace is None:
        bad = np.argwhere(~(F > 0))
        if bad.size:
            c, r = bad[0]
            raise MalformedLine(linenos[r], f"field {cols[c]!r}: density value must be > 0 "
                                "(use --zero-replace to impute)", str(path))
    else:
        total = np.abs(F).sum(axis=1, keepdims=True)
        F = np.where(F > 0, F, zero_replace * total)
    try:
        F = normalize_density(F, grid)
    except NonPositiveDensity as exc:  # pragma: no cover - caught above
        raise MalformedLine(0, str(exc), str(path)) from exc
    return grid, F, cols


def read_coordinates(path):
    header, rows = read_table(path)
    _expect(header, ("label", "x", "y"), path)
    labels = [f[0] for _, f in rows]
    if len(set(labels)) != len(labels):
        raise MalformedLine(0, "duplicate labels", str(path))
    xy = np.array([[_float(f[1], path, ln, "x"), _float(f[2], path, ln, "y")] for ln, f in rows])
    return tuple(labels), xy


def weekday_indicators(dates, reference="Sunday", prefix="wd_"):
    """Indicator series for every weekday except ``reference``.

    Returns ``{prefix + day: (T,) array}`` in Monday..Sunday order.
    """
    if reference not in WEEKDAYS:
        raise ValueError(f"reference must be one of {WEEKDAYS}")
    wd = np.array([d.weekday() for d in dates])
    return {
        f"{prefix}{day}": (wd == k).astype(float)
        for k, day in enumerate(WEEKDAYS)
        if day != reference
    }


# ---------------------------------------------------------------------------
# writers


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


def write_table(path, header, rows, delimiter=None):
    path = Path(path)
    delimiter = delimiter or _delimiter(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def write_response(path, labels, t, y):
    write_table(path, ["region", "t", "count"],
                ([lab, _fmt_t(tv), int(c)] for lab, row in zip(labels, y) for tv, c in zip(t, row)))


def _fmt_t(tv):
    return str(int(tv)) if float(tv).is_integer() else repr(float(tv))


def write_scalars(path, labels, columns):
    names = list(columns)
    write_table(path, ["region"] + names,
                ([lab] + [columns[c][i] for c in names] for i, lab in enumerate(labels)))


def write_series(path, labels, t, columns):
    names = list(columns)
    write_table(path, ["region", "t"] + names,
                ([lab, _fmt_t(tv)] + [columns[c][i, k] for c in names]
                 for i, lab in enumerate(labels) for k, tv in enumerate(t)))


def write_composition(path, labels, parts, X):
    write_table(path, ["region"] + list(parts), ([lab] + list(row) for lab, row in zip(labels, X)))


def write_density(path, grid_points, labels, F, first="s"):
    F = np.asarray(F)
    write_table(path, [first] + list(labels), ([s] + list(F[:, k]) for k, s in enumerate(grid_points)))


def write_coordinates(path, labels, xy):
    write_table(path, ["label", "x", "y"], ([lab, x, y] for lab, (x, y) in zip(labels, xy)))


class _Encoder(json.JSONEncoder):
    def default(self, o):
        if isinstance(o, np.ndarray):
            return o.tolist()
        if isinstance(o, np.floating):
            return float(o)
        if isinstance(o, np.integer):
            return int(o)
        if isinstance(o, (set, frozenset, tuple)):
            return list(o)
        return super().default(o)


def write_json(path, obj):
    Path(path).write_text(json.dumps(obj, cls=_Encoder, indent=2, sort_keys=False) + "\n")
