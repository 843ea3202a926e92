"""Aitchison geometry of finite compositions.

Compositions are plain arrays whose last axis holds the ``D`` parts, so every
function here works on a single composition or on a stack of them (one row
per region).  The closure constant ``kappa`` is passed explicitly where a
result has to be closed.

The isometric log-ratio transform is fixed to pivot coordinates; the matching
orthonormal contrast matrix is :func:`pivot_contrast_matrix`, with
``clr(x) == pivot_contrast_matrix(D) @ ilr_pivot(x)``.
"""

import numpy as np

from .errors import DimensionMismatch, NonPositivePart, NotCentred

#: relative tolerance on ``sum(x) == kappa`` when validating a composition
CLOSURE_RTOL = 1e-10
#: largest |sum| of a clr vector that :func:`clr_inv` silently re-centres
CLR_CENTRE_TOL = 1e-8

__all__ = [
    "CLOSURE_RTOL",
    "CLR_CENTRE_TOL",
    "closure",
    "check_composition",
    "uniform",
    "zero_replace",
    "perturb",
    "power",
    "aitchison_inner",
    "aitchison_norm",
    "clr",
    "clr_inv",
    "ilr_pivot",
    "ilr_pivot_inv",
    "pivot_contrast_matrix",
    "simplicial_gradient",
    "relative_ratio_effect",
]


def _as_parts(v):
    v = np.asarray(v, dtype=float)
    if v.ndim == 0 or v.shape[-1] < 2:
        raise DimensionMismatch(f"a composition needs at least 2 parts, got shape {v.shape}")
    bad = np.argwhere(~(v > 0))
    if bad.size:
        idx = tuple(int(i) for i in bad[0])
        raise NonPositivePart(idx if len(idx) > 1 else idx[0], float(v[tuple(bad[0])]))
    return v


def closure(v, kappa=1.0):
    """Rescale positive vectors so that their parts sum to ``kappa``.

    Parameters
    ----------
    v : array_like, shape (..., D)
        Strictly positive parts.
    kappa : float
        Closure constant.

    Raises
    ------
    NonPositivePart
        If an entry is zero, negative or NaN; ``index`` names the first one.
    """
    if not kappa > 0:
        raise ValueError(f"kappa must be positive, got {kappa!r}")
    v = _as_parts(v)
    return kappa * v / v.sum(axis=-1, keepdims=True)


def check_composition(x, kappa=None):
    """Validate ``x`` as a composition and return it as a float array.

    When ``kappa`` is None only positivity is checked.
    """
    x = _as_parts(x)
    if kappa is not None:
        s = x.sum(axis=-1)
        if np.any(np.abs(s - kappa) > CLOSURE_RTOL * kappa):
            raise ValueError(f"parts do not sum to kappa={kappa} (sums {s})")
    return x


def uniform(D, kappa=1.0):
    """The neutral element of perturbation: ``D`` equal parts."""
    return np.full(D, kappa / D)


def zero_replace(v, eps, kappa=None):
    """Replace non-positive parts by ``eps * kappa`` and re-close.

    ``kappa`` defaults to each row's own total.  This is an explicit opt-in
    preprocessing step; nothing else in the package imputes zeros.
    """
    v = np.array(v, dtype=float)
    total = v.sum(axis=-1, keepdims=True) if kappa is None else np.full(v.shape[:-1] + (1,), kappa)
    v = np.where(v > 0, v, eps * total)
    return closure(v, 1.0) * total


def _same_d(x, y):
    if x.shape[-1] != y.shape[-1]:
        raise DimensionMismatch(f"compositions have {x.shape[-1]} and {y.shape[-1]} parts")


def perturb(x, y, kappa=1.0):
    """Perturbation ``x ⊕ y``: closure of the componentwise product."""
    x, y = _as_parts(x), _as_parts(y)
    _same_d(x, y)
    return closure(x * y, kappa)


def power(alpha, x, kappa=1.0):
    """Powering ``alpha ⊙ x``: closure of ``x ** alpha``."""
    x = _as_parts(x)
    # work in log space so large |alpha| does not underflow before closing
    lx = alpha * np.log(x)
    lx = lx - lx.max(axis=-1, keepdims=True)
    return closure(np.exp(lx), kappa)


def aitchison_inner(x, y):
    """Aitchison inner product from the pairwise log-ratio definition.

    ``(2D)^{-1} sum_d sum_j log(x_d/x_j) log(y_d/y_j)``, evaluated along the
    last axis.
    """
    x, y = _as_parts(x), _as_parts(y)
    _same_d(x, y)
    D = x.shape[-1]
    lx, ly = np.log(x), np.log(y)
    rx = lx[..., :, None] - lx[..., None, :]
    ry = ly[..., :, None] - ly[..., None, :]
    return (rx * ry).sum(axis=(-2, -1)) / (2 * D)


def aitchison_norm(x):
    return np.sqrt(aitchison_inner(x, x))


def clr(x):
    """Centred log-ratio transform: log parts minus their mean log."""
    lx = np.log(_as_parts(x))
    return lx - lx.mean(axis=-1, keepdims=True)


def clr_inv(u, kappa=1.0):
    """Inverse clr.

    Inputs whose coordinates sum to at most ``CLR_CENTRE_TOL`` in absolute
    value are re-centred first; larger deviations raise :class:`NotCentred`.
    """
    u = np.asarray(u, dtype=float)
    s = u.sum(axis=-1, keepdims=True)
    if np.any(np.abs(s) > CLR_CENTRE_TOL):
        raise NotCentred(f"clr coordinates sum to {np.max(np.abs(s)):.3g}, not 0")
    u = u - s / u.shape[-1]
    e = np.exp(u - u.max(axis=-1, keepdims=True))
    return kappa * e / e.sum(axis=-1, keepdims=True)


def pivot_contrast_matrix(D):
    """Orthonormal ``D x (D-1)`` basis of the clr plane for pivot coordinates.

    Column ``j`` contrasts part ``j`` against the geometric mean of the parts
    after it.
    """
    if D < 2:
        raise DimensionMismatch(f"D must be at least 2, got {D}")
    V = np.zeros((D, D - 1))
    for j in range(D - 1):
        rest = D - j - 1
        scale = np.sqrt(rest / (rest + 1.0))
        V[j, j] = scale
        V[j + 1:, j] = -scale / rest
    return V


def ilr_pivot(x):
    """Pivot coordinates of ``x``.

    Coordinate ``j`` (1-based) is ``sqrt((D-j)/(D-j+1))`` times the log of
    ``x_j`` over the geometric mean of ``x_{j+1}, ..., x_D``.
    """
    lx = np.log(_as_parts(x))
    D = lx.shape[-1]
    out = np.empty(lx.shape[:-1] + (D - 1,))
    # tail[k] = mean of log parts k..D-1
    tail = np.cumsum(lx[..., ::-1], axis=-1)[..., ::-1] / np.arange(D, 0, -1)
    for j in range(D - 1):
        rest = D - j - 1
        out[..., j] = np.sqrt(rest / (rest + 1.0)) * (lx[..., j] - tail[..., j + 1])
    return out


def ilr_pivot_inv(z, kappa=1.0):
    """Composition with pivot coordinates ``z`` (shape ``(..., D-1)``)."""
    z = np.asarray(z, dtype=float)
    V = pivot_contrast_matrix(z.shape[-1] + 1)
    return clr_inv(z @ V.T, kappa)


def simplicial_gradient(beta, kappa=1.0):
    """Composition ``b`` whose pivot coordinates are the coefficients ``beta``.

    ``b`` is the perturbation direction of steepest increase of the linear
    predictor ``<b, x>_A = sum_j beta_j ilr_j(x)``.
    """
    return ilr_pivot_inv(beta, kappa)


def relative_ratio_effect(clr_b_j, alpha):
    """Response-scale factor ``alpha ** clr_b_j`` under a log link.

    This is the multiplicative change of the expected response when the
    relative ratio of one part is multiplied by ``alpha`` with all other
    ratios held fixed.
    """
    alpha = np.asarray(alpha, dtype=float)
    if np.any(alpha <= 0):
        raise ValueError("alpha must be positive")
    return alpha ** np.asarray(clr_b_j, dtype=float)
