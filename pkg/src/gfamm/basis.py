"""B-spline bases, difference penalties, row tensor products and constraints.

Coefficient ordering convention: wherever two marginal bases are combined,
the first (covariate) index runs slow and the second (time) index runs fast,
i.e. coefficient ``(j, k)`` sits at position ``j * K_t + k``.  Both
:func:`row_tensor` and :func:`tensor_penalty` follow it.
"""

from dataclasses import dataclass

import numpy as np
from scipy import linalg
from scipy.interpolate import BSpline

from .errors import OrderTooLarge, OutOfDomain, RankDeficientConstraint, RowCountMismatch

DEFAULT_DEGREE = 3
DEFAULT_PENALTY_ORDER = 2


@dataclass(frozen=True, eq=False)
class SplineBasis:
    """Clamped B-spline basis with equally spaced interior knots.

    ``knots`` is the full knot vector including the ``degree + 1`` fold
    boundary knots, so ``K = len(knots) - degree - 1``.
    """

    knots: np.ndarray
    degree: int = DEFAULT_DEGREE

    @classmethod
    def uniform(cls, lower, upper, K, degree=DEFAULT_DEGREE):
        if not upper > lower:
            raise ValueError(f"empty spline domain [{lower}, {upper}]")
        if K < degree + 1:
            raise ValueError(f"K={K} too small for degree {degree}")
        inner = np.linspace(lower, upper, K - degree + 1)
        knots = np.concatenate([[lower] * degree, inner, [upper] * degree])
        return cls(knots, degree)

    @property
    def K(self):
        return self.knots.size - self.degree - 1

    @property
    def domain(self):
        return float(self.knots[self.degree]), float(self.knots[-self.degree - 1])

    def __call__(self, x):
        return bspline_eval(self, x)


def bspline_eval(basis, x):
    """Evaluate all basis functions at ``x``; returns ``(len(x), K)``.

    Points outside the domain by more than a relative ``1e-12`` raise
    :class:`OutOfDomain`; points within that slack are clipped onto it.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    lo, hi = basis.domain
    slack = 1e-12 * max(1.0, abs(lo), abs(hi))
    bad = (x < lo - slack) | (x > hi + slack) | ~np.isfinite(x)
    if np.any(bad):
        raise OutOfDomain(float(x[np.argmax(bad)]))
    x = np.clip(x, lo, hi)
    return BSpline.design_matrix(x, basis.knots, basis.degree).toarray()


def difference_penalty(K, order=DEFAULT_PENALTY_ORDER):
    """``D.T @ D`` for the ``order``-th difference operator on ``K`` coefficients."""
    if order < 1 or order >= K:
        raise OrderTooLarge(f"difference order {order} needs more than {order} coefficients, got K={K}")
    D = np.diff(np.eye(K), n=order, axis=0)
    return D.T @ D


def row_tensor(A, B):
    """Row-wise Kronecker product of ``A`` (h x a) and ``B`` (h x b)."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.ndim == 1:
        A = A[:, None]
    if B.ndim == 1:
        B = B[:, None]
    if A.shape[0] != B.shape[0]:
        raise RowCountMismatch(f"{A.shape[0]} rows vs {B.shape[0]} rows")
    return (A[:, :, None] * B[:, None, :]).reshape(A.shape[0], -1)


def tensor_penalty(Px, Pt, lx, lt):
    """``lx * kron(Px, I_Kt) + lt * kron(I_Kx, Pt)``."""
    Px = np.atleast_2d(Px)
    Pt = np.atleast_2d(Pt)
    return lx * np.kron(Px, np.eye(Pt.shape[0])) + lt * np.kron(np.eye(Px.shape[0]), Pt)


@dataclass(frozen=True, eq=False)
class ConstraintMap:
    """Reparameterisation ``theta = Z @ theta_tilde`` enforcing ``C @ theta = 0``."""

    Z: np.ndarray
    C: np.ndarray


def constraint_nullspace(C, tol=1e-10):
    """Orthonormal basis of the null space of ``C`` via QR of ``C.T``.

    Column signs are fixed so the largest-magnitude entry of each column is
    positive.
    """
    C = np.atleast_2d(np.asarray(C, dtype=float))
    c, K = C.shape
    if c >= K:
        raise RankDeficientConstraint(f"{c} constraints on {K} coefficients leave nothing free")
    Q, R = linalg.qr(C.T, mode="full")
    d = np.abs(np.diag(R[:c, :c]))
    if d.size == 0 or d.min() <= tol * max(1.0, d.max()):
        raise RankDeficientConstraint("constraint matrix is not of full row rank")
    Z = Q[:, c:]
    # one-off projection tidies the rounding left by QR
    Z = Z - C.T @ linalg.solve(C @ C.T, C @ Z, assume_a="pos")
    Z, _ = linalg.qr(Z, mode="economic")
    pick = np.argmax(np.abs(Z), axis=0)
    signs = np.sign(Z[pick, np.arange(Z.shape[1])])
    return ConstraintMap(Z * signs, C)
