import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import linalg

from gfamm.basis import (
    SplineBasis,
    bspline_eval,
    constraint_nullspace,
    difference_penalty,
    row_tensor,
    tensor_penalty,
)
from gfamm.errors import OrderTooLarge, OutOfDomain, RankDeficientConstraint, RowCountMismatch


def cox_de_boor(knots, degree, x):
    """Textbook recursion; the right end point is assigned to the last interval."""
    knots = np.asarray(knots, dtype=float)
    K = knots.size - degree - 1
    out = np.zeros((x.size, K))
    last = np.max(np.flatnonzero(knots[:-1] < knots[1:]))
    for r, xv in enumerate(x):
        B = np.zeros(knots.size - 1)
        for i in range(knots.size - 1):
            if knots[i] <= xv < knots[i + 1] or (i == last and xv == knots[i + 1]):
                B[i] = 1.0
        for p in range(1, degree + 1):
            nxt = np.zeros(knots.size - p - 1)
            for i in range(nxt.size):
                left = right = 0.0
                if knots[i + p] > knots[i]:
                    left = (xv - knots[i]) / (knots[i + p] - knots[i]) * B[i]
                if knots[i + p + 1] > knots[i + 1]:
                    right = (knots[i + p + 1] - xv) / (knots[i + p + 1] - knots[i + 1]) * B[i + 1]
                nxt[i] = left + right
            B = nxt
        out[r] = B[:K]
    return out


class TestSplineBasis:
    @pytest.mark.parametrize("K,degree", [(4, 3), (8, 3), (12, 3), (6, 2), (5, 1)])
    def test_matches_cox_de_boor(self, K, degree):
        b = SplineBasis.uniform(-1.0, 3.0, K, degree)
        x = np.concatenate([np.linspace(-1, 3, 57), [-1.0, 3.0]])
        np.testing.assert_allclose(b(x), cox_de_boor(b.knots, degree, x), atol=1e-12)

    @given(st.integers(4, 20), st.lists(st.floats(0, 1), min_size=1, max_size=50))
    def test_partition_of_unity_and_band(self, K, xs):
        b = SplineBasis.uniform(0, 1, K)
        B = b(np.array(xs))
        np.testing.assert_allclose(B.sum(axis=1), 1.0, atol=1e-12)
        assert np.all(B >= -1e-15)
        assert np.all((np.abs(B) > 0).sum(axis=1) <= b.degree + 1)

    def test_shape_and_domain(self):
        b = SplineBasis.uniform(2, 5, 7)
        assert b.K == 7 and b.domain == (2.0, 5.0)
        assert b(np.linspace(2, 5, 11)).shape == (11, 7)

    def test_out_of_domain(self):
        b = SplineBasis.uniform(0, 1, 6)
        with pytest.raises(OutOfDomain) as info:
            bspline_eval(b, [0.5, 1.01])
        assert info.value.value == pytest.approx(1.01)

    def test_boundary_slack_is_clipped(self):
        b = SplineBasis.uniform(0, 1, 6)
        np.testing.assert_allclose(b([1 + 1e-14]), b([1.0]))

    def test_too_few_functions(self):
        with pytest.raises(ValueError):
            SplineBasis.uniform(0, 1, 3, degree=3)

    def test_reproduces_cubic_polynomials(self):
        b = SplineBasis.uniform(0, 1, 9)
        x = np.linspace(0, 1, 200)
        B = b(x)
        y = 1 - 2 * x + 3 * x**3
        coef, *_ = np.linalg.lstsq(B, y, rcond=None)
        np.testing.assert_allclose(B @ coef, y, atol=1e-10)


class TestDifferencePenalty:
    @pytest.mark.parametrize("K,order", [(5, 1), (8, 2), (10, 3)])
    def test_null_space_is_polynomials(self, K, order):
        P = difference_penalty(K, order)
        k = np.arange(K, dtype=float)
        for j in range(order):
            np.testing.assert_allclose(P @ k**j, 0, atol=1e-9)
        assert np.linalg.matrix_rank(P) == K - order

    def test_second_order_explicit(self):
        D = np.array([[1, -2, 1, 0], [0, 1, -2, 1]], dtype=float)
        np.testing.assert_allclose(difference_penalty(4, 2), D.T @ D)

    def test_symmetric_psd(self):
        P = difference_penalty(12, 2)
        np.testing.assert_allclose(P, P.T)
        assert np.linalg.eigvalsh(P).min() > -1e-10

    def test_order_too_large(self):
        with pytest.raises(OrderTooLarge):
            difference_penalty(3, 3)


class TestTensor:
    @given(st.integers(1, 6), st.integers(1, 6), st.integers(1, 8))
    def test_row_tensor_is_rowwise_kron(self, a, b, h):
        rng = np.random.default_rng(a * 100 + b * 10 + h)
        A, B = rng.normal(size=(h, a)), rng.normal(size=(h, b))
        T = row_tensor(A, B)
        for i in range(h):
            np.testing.assert_allclose(T[i], np.kron(A[i], B[i]))

    def test_row_mismatch(self):
        with pytest.raises(RowCountMismatch):
            row_tensor(np.ones((3, 2)), np.ones((4, 2)))

    def test_tensor_penalty_matches_ordering(self):
        # rough along x only: coefficient (j, k) = j**2 varies with the slow index
        Px, Pt = difference_penalty(4, 2), difference_penalty(3, 2)
        theta_x = np.repeat(np.arange(4.0) ** 2, 3)
        theta_t = np.tile(np.arange(3.0) ** 2, 4)
        S_x = tensor_penalty(Px, Pt, 1.0, 0.0)
        S_t = tensor_penalty(Px, Pt, 0.0, 1.0)
        assert theta_x @ S_x @ theta_x > 0 and abs(theta_x @ S_t @ theta_x) < 1e-12
        assert theta_t @ S_t @ theta_t > 0 and abs(theta_t @ S_x @ theta_t) < 1e-12
        np.testing.assert_allclose(tensor_penalty(Px, Pt, 2.0, 3.0), 2 * S_x + 3 * S_t)


class TestConstraints:
    @given(st.integers(3, 15), st.integers(1, 2))
    def test_nullspace_properties(self, K, c):
        if c >= K:
            return
        rng = np.random.default_rng(K * 7 + c)
        C = rng.normal(size=(c, K))
        cm = constraint_nullspace(C)
        Z = cm.Z
        assert Z.shape == (K, K - c)
        np.testing.assert_allclose(C @ Z, 0, atol=1e-12)
        np.testing.assert_allclose(Z.T @ Z, np.eye(K - c), atol=1e-12)
        pick = np.argmax(np.abs(Z), axis=0)
        assert np.all(Z[pick, np.arange(K - c)] > 0)

    def test_deterministic(self):
        C = np.linspace(1, 2, 9)[None, :]
        np.testing.assert_array_equal(constraint_nullspace(C).Z, constraint_nullspace(C.copy()).Z)

    def test_rank_deficient(self):
        with pytest.raises(RankDeficientConstraint):
            constraint_nullspace(np.array([[1.0, 2.0, 3.0], [2.0, 4.0, 6.0]]))
        with pytest.raises(RankDeficientConstraint):
            constraint_nullspace(np.eye(3))

    def test_matches_lagrange_solution(self, rng):
        # penalised least squares under C theta = 0, solved two ways
        n, K = 80, 10
        x = rng.uniform(0, 1, n)
        B = SplineBasis.uniform(0, 1, K)(x)
        y = np.sin(3 * x) + rng.normal(0, 0.1, n)
        P = difference_penalty(K, 2)
        C = B.mean(axis=0)[None, :]
        lam = 0.5
        kkt = np.block([[B.T @ B + lam * P, C.T], [C, np.zeros((1, 1))]])
        rhs = np.concatenate([B.T @ y, [0.0]])
        theta_lagrange = linalg.solve(kkt, rhs)[:K]
        Z = constraint_nullspace(C).Z
        Bz, Pz = B @ Z, Z.T @ P @ Z
        theta_z = linalg.solve(Bz.T @ Bz + lam * Pz, Bz.T @ y)
        np.testing.assert_allclose(Z @ theta_z, theta_lagrange, atol=1e-8)
