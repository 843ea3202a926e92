import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gfamm import simplex
from gfamm.errors import DimensionMismatch, NonPositivePart, NotCentred

from conftest import composition_pairs, compositions


def ilr_oracle(x):
    """Pivot coordinates straight from the defining formula, one loop per coordinate."""
    x = np.asarray(x, dtype=float)
    D = x.size
    z = np.empty(D - 1)
    for j in range(1, D):
        gm = np.exp(np.mean(np.log(x[j:])))
        z[j - 1] = np.sqrt((D - j) / (D - j + 1)) * np.log(x[j - 1] / gm)
    return z


class TestClosure:
    def test_sums_to_kappa(self):
        np.testing.assert_allclose(simplex.closure([1, 2, 3, 4], kappa=100).sum(), 100)

    @given(compositions(), st.floats(0.01, 1e3))
    def test_scale_invariance(self, x, c):
        np.testing.assert_allclose(simplex.closure(c * x), simplex.closure(x), rtol=1e-12)

    def test_rejects_zero_part(self):
        with pytest.raises(NonPositivePart) as info:
            simplex.closure([0.2, 0.0, 0.8])
        assert info.value.index == 1

    def test_rejects_nan(self):
        with pytest.raises(NonPositivePart):
            simplex.closure([0.2, np.nan, 0.8])

    def test_rows(self):
        X = simplex.closure(np.array([[1.0, 1.0], [1.0, 3.0]]))
        np.testing.assert_allclose(X, [[0.5, 0.5], [0.25, 0.75]])

    def test_single_part_is_not_a_composition(self):
        with pytest.raises(DimensionMismatch):
            simplex.closure([1.0])

    def test_check_composition_kappa(self):
        simplex.check_composition([0.5, 0.5], kappa=1.0)
        with pytest.raises(ValueError):
            simplex.check_composition([0.5, 0.6], kappa=1.0)


class TestVectorSpace:
    def test_ten_percent_perturbation_of_one_part(self):
        x = np.array([0.248, 0.021, 0.205, 0.527])
        p = simplex.closure([1.1, 1.0, 1.0, 1.0])
        np.testing.assert_allclose(np.round(simplex.perturb(x, p), 3), [0.266, 0.020, 0.200, 0.514])

    @given(composition_pairs())
    def test_perturbation_commutes(self, pair):
        x, y = pair
        np.testing.assert_allclose(simplex.perturb(x, y), simplex.perturb(y, x), rtol=1e-12)

    @given(compositions())
    def test_uniform_is_neutral(self, x):
        np.testing.assert_allclose(simplex.perturb(x, simplex.uniform(x.size)), x, rtol=1e-10)

    @given(compositions(), st.floats(-3, 3), st.floats(-3, 3))
    def test_power_distributes(self, x, a, b):
        lhs = simplex.power(a + b, x)
        rhs = simplex.perturb(simplex.power(a, x), simplex.power(b, x))
        np.testing.assert_allclose(simplex.clr(lhs), simplex.clr(rhs), atol=1e-8)

    @given(composition_pairs(), st.floats(-3, 3))
    def test_clr_is_linear(self, pair, a):
        x, y = pair
        z = simplex.perturb(simplex.power(a, x), y)
        np.testing.assert_allclose(simplex.clr(z), a * simplex.clr(x) + simplex.clr(y), atol=1e-9)

    def test_power_large_alpha_stays_finite(self):
        # every part**alpha underflows on its own; the ratios do not
        z = simplex.power(120.0, [1e-3, 1.005e-3])
        np.testing.assert_allclose(z[1] / z[0], 1.005**120, rtol=1e-9)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            simplex.perturb([0.5, 0.5], [0.2, 0.3, 0.5])


class TestIsometry:
    @given(composition_pairs())
    def test_three_routes_agree(self, pair):
        x, y = pair
        a = simplex.aitchison_inner(x, y)
        b = simplex.clr(x) @ simplex.clr(y)
        c = simplex.ilr_pivot(x) @ simplex.ilr_pivot(y)
        scale = 1 + abs(a)
        assert abs(a - b) < 1e-10 * scale and abs(a - c) < 1e-10 * scale

    @given(compositions())
    def test_ilr_matches_formula(self, x):
        np.testing.assert_allclose(simplex.ilr_pivot(x), ilr_oracle(x), atol=1e-10)

    @pytest.mark.parametrize("D", range(2, 11))
    def test_contrast_matrix_orthonormal(self, D):
        V = simplex.pivot_contrast_matrix(D)
        np.testing.assert_allclose(V.T @ V, np.eye(D - 1), atol=1e-14)
        np.testing.assert_allclose(V.sum(axis=0), 0, atol=1e-14)

    @given(compositions())
    def test_clr_equals_contrast_times_ilr(self, x):
        V = simplex.pivot_contrast_matrix(x.size)
        np.testing.assert_allclose(V @ simplex.ilr_pivot(x), simplex.clr(x), atol=1e-10)

    @given(compositions())
    def test_ilr_round_trip(self, x):
        np.testing.assert_allclose(simplex.ilr_pivot_inv(simplex.ilr_pivot(x)), x, rtol=1e-9)

    @given(compositions())
    def test_norm_is_distance_from_uniform(self, x):
        np.testing.assert_allclose(simplex.aitchison_norm(x), np.linalg.norm(simplex.clr(x)), atol=1e-10)


class TestClr:
    @given(compositions())
    def test_sums_to_zero(self, x):
        assert abs(simplex.clr(x).sum()) < 1e-10

    @given(compositions(), st.floats(0.5, 200))
    def test_round_trip(self, x, kappa):
        back = simplex.clr_inv(simplex.clr(x), kappa)
        np.testing.assert_allclose(back, kappa * x, rtol=1e-9)

    def test_recentres_small_deviation(self):
        u = np.array([1.0, -0.5, -0.5 + 5e-9])
        np.testing.assert_allclose(simplex.clr(simplex.clr_inv(u)).sum(), 0, atol=1e-14)

    def test_rejects_uncentred(self):
        with pytest.raises(NotCentred):
            simplex.clr_inv([1.0, -0.5, -0.4])

    def test_table_two_round_trip(self):
        u = np.array([5.747, -1.515, 0.778, -5.010])
        assert abs(u.sum()) < 1e-3
        x = simplex.clr_inv(u - u.mean())
        simplex.check_composition(x, kappa=1.0)
        np.testing.assert_allclose(simplex.clr(x), u - u.mean(), atol=1e-12)


class TestInterpretation:
    def test_relative_ratio_factors(self):
        assert abs(simplex.relative_ratio_effect(5.747, 1.1) - 1.729) <= 1e-3
        assert abs(simplex.relative_ratio_effect(-5.009, 1.1) - 0.620) <= 2e-3

    def test_ratio_rejects_nonpositive_alpha(self):
        with pytest.raises(ValueError):
            simplex.relative_ratio_effect(1.0, 0.0)

    @given(st.lists(st.floats(-3, 3), min_size=1, max_size=8))
    def test_gradient_clr_is_contrast_of_beta(self, beta):
        beta = np.array(beta)
        V = simplex.pivot_contrast_matrix(beta.size + 1)
        b = simplex.simplicial_gradient(beta)
        np.testing.assert_allclose(simplex.clr(b), V @ beta, atol=1e-10)

    def test_zero_coefficients_give_uniform_gradient(self):
        np.testing.assert_allclose(simplex.simplicial_gradient(np.zeros(3)), np.full(4, 0.25))

    @given(composition_pairs(3, 8))
    def test_linear_predictor_identity(self, pair):
        x, b = pair
        beta = simplex.ilr_pivot(b)
        np.testing.assert_allclose(simplex.ilr_pivot(x) @ beta, simplex.aitchison_inner(x, b), atol=1e-9)

    def test_relative_ratio_is_the_response_factor(self):
        # multiplying x_1 relative to the others by alpha changes <x, b>_A by log(alpha) clr_1(b)
        b = simplex.closure([0.4, 0.1, 0.2, 0.3])
        x = simplex.closure([0.25, 0.25, 0.3, 0.2])
        x2 = simplex.perturb(x, simplex.closure([1.1, 1, 1, 1]))
        ratio = np.exp(simplex.aitchison_inner(x2, b) - simplex.aitchison_inner(x, b))
        np.testing.assert_allclose(ratio, simplex.relative_ratio_effect(simplex.clr(b)[0], 1.1), rtol=1e-12)


class TestZeroReplace:
    def test_replaces_and_keeps_total(self):
        z = simplex.zero_replace([0.5, 0.0, 0.5], 1e-3)
        assert np.all(z > 0)
        np.testing.assert_allclose(z.sum(), 1.0)
        assert z[1] < 2e-3

    def test_explicit_kappa(self):
        z = simplex.zero_replace(np.array([[60.0, 0.0, 40.0]]), 0.01, kappa=100.0)
        np.testing.assert_allclose(z.sum(axis=1), 100.0)
