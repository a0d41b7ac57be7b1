import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from lab.numerics import formulas
from lab.numerics.distortion import kp_values

entries = st.floats(min_value=-10, max_value=10, allow_nan=False, allow_infinity=False)


def well_conditioned(matrix):
    sigma = np.linalg.svd(matrix, compute_uv=False)
    return sigma[-1] > 1e-3 * max(sigma[0], 1.0)


class TestExponents:
    @pytest.mark.parametrize("outer, inner, expected", [
        (2.0, 2.0, math.inf),
        (math.inf, 2.0, 2.0),
        (4.0, 2.0, 4.0),
        (3.0, 1.5, 3.0),
    ])
    def test_mixed_exponent(self, outer, inner, expected):
        assert formulas.mixed_exponent(outer, inner) == pytest.approx(expected)

    @pytest.mark.parametrize("q, expected", [(2.0, 2.0), (3.0, 1.5), (1.0, math.inf), (math.inf, 1.0)])
    def test_conjugate_exponent(self, q, expected):
        assert formulas.conjugate_exponent(q) == expected

    def test_unit_ball_and_sphere(self):
        assert formulas.unit_ball_volume(2) == pytest.approx(math.pi)
        assert formulas.unit_ball_volume(3) == pytest.approx(4 * math.pi / 3)
        assert formulas.unit_sphere_area(2) == pytest.approx(2 * math.pi)
        assert formulas.unit_sphere_area(3) == pytest.approx(4 * math.pi)


class TestLinearAlgebra:
    def test_singular_values_of_diagonal(self):
        sigma_max, sigma_min = formulas.singular_values(np.diag([2.0, 1.0]))
        assert sigma_max == pytest.approx(2.0)
        assert sigma_min == pytest.approx(1.0)

    def test_singular_values_3x3_match_svd(self):
        rng = np.random.default_rng(3)
        a = rng.normal(size=(50, 3, 3))
        sigma_max, sigma_min = formulas.singular_values(a)
        reference = np.linalg.svd(a, compute_uv=False)
        np.testing.assert_allclose(sigma_max, reference[:, 0], rtol=1e-10)
        np.testing.assert_allclose(sigma_min, reference[:, -1], rtol=1e-8, atol=1e-12)

    def test_rejects_non_square(self):
        with pytest.raises(ValueError):
            formulas.singular_values(np.ones((2, 3)))

    def test_adjugate_of_diag321(self):
        np.testing.assert_allclose(formulas.adjugate(np.diag([3.0, 2.0, 1.0])), np.diag([2.0, 3.0, 6.0]))
        assert formulas.operator_norm(formulas.adjugate(np.diag([3.0, 2.0, 1.0]))) == pytest.approx(6.0)

    @settings(max_examples=200, deadline=None)
    @given(st.sampled_from([2, 3]).flatmap(lambda n: arrays(float, (n, n), elements=entries)))
    def test_adjugate_identity(self, a):
        n = a.shape[0]
        product = a @ formulas.adjugate(a)
        scale = max(1.0, float(np.max(np.abs(a)))) ** n
        np.testing.assert_allclose(product, formulas.determinant(a) * np.eye(n), atol=1e-10 * scale)

    @settings(max_examples=200, deadline=None)
    @given(st.sampled_from([2, 3]).flatmap(lambda n: arrays(float, (n, n), elements=entries)))
    def test_adjugate_norm_is_det_over_least_stretching(self, a):
        if not well_conditioned(a):
            return
        _, sigma_min = formulas.singular_values(a)
        adj_norm = formulas.operator_norm(formulas.adjugate(a))
        assert adj_norm == pytest.approx(abs(formulas.determinant(a)) / sigma_min, rel=1e-8)

    @settings(max_examples=200, deadline=None)
    @given(st.sampled_from([2, 3]).flatmap(lambda n: arrays(float, (n, n), elements=entries)))
    def test_singular_values_sandwich_the_jacobian(self, a):
        n = a.shape[0]
        sigma_max, sigma_min = formulas.singular_values(a)
        det = abs(formulas.determinant(a))
        scale = max(1.0, float(sigma_max)) ** n
        assert sigma_min <= sigma_max
        assert sigma_min ** n <= det + 1e-9 * scale
        assert det <= sigma_max ** n + 1e-9 * scale

    @settings(max_examples=100, deadline=None)
    @given(arrays(float, (2, 2), elements=entries), st.floats(0.1, 10), st.floats(1, 8))
    def test_p_dilatation_scales_like_lambda_to_one_minus_n_over_p(self, a, factor, p):
        if not well_conditioned(a):
            return
        n = a.shape[0]

        def dilatation(m):
            sigma_max, _ = formulas.singular_values(m)
            return float(kp_values(formulas.determinant(m), sigma_max, p))

        assert dilatation(factor * a) == pytest.approx(factor ** (1 - n / p) * dilatation(a), rel=1e-9)


class TestNorms:
    def test_weighted_norm(self):
        values = np.array([1.0, 2.0])
        weights = np.array([0.5, 0.5])
        assert formulas.weighted_norm(values, weights, 2) == pytest.approx(math.sqrt(2.5))
        assert formulas.weighted_norm(values, weights, math.inf) == 2.0

    def test_weighted_norm_of_infinite_cell(self):
        assert formulas.weighted_norm([1.0, math.inf], [1.0, 1.0], 2) == math.inf

    def test_weighted_norm_of_empty_field(self):
        assert formulas.weighted_norm([], [], 2) == 0.0

    def test_relative_difference(self):
        assert formulas.relative_difference(0.0, 0.0) == 0.0
        assert formulas.relative_difference(1.0, 2.0) == pytest.approx(0.5)
        assert formulas.relative_difference(math.inf, math.inf) == 0.0
        assert formulas.relative_difference(1.0, math.inf) == math.inf

    @pytest.mark.parametrize("value, expected", [
        (math.inf, "inf"), (-math.inf, "-inf"), (math.nan, None), (None, None), (np.float64(1.5), 1.5),
    ])
    def test_json_number(self, value, expected):
        assert formulas.json_number(value) == expected


class TestDiscRectangleArea:
    def test_quarter_disc(self):
        assert formulas.disc_rectangle_area([0.0, 0.0], [2.0, 2.0], 2.0) == pytest.approx(math.pi)

    def test_rectangle_inside(self):
        assert formulas.disc_rectangle_area([-0.3, 0.1], [0.2, 0.5], 1.0) == pytest.approx(0.2)

    def test_rectangle_outside(self):
        assert formulas.disc_rectangle_area([0.8, 0.8], [1.0, 1.0], 1.0) == pytest.approx(0.0, abs=1e-14)

    def test_zero_radius(self):
        assert formulas.disc_rectangle_area([-1.0, -1.0], [1.0, 1.0], 0.0) == 0.0

    def test_half_disc_strip(self):
        # {0 ≤ y ≤ r} ∩ disc is half the disc
        assert formulas.disc_rectangle_area([-3.0, 0.0], [3.0, 1.0], 1.0) == pytest.approx(math.pi / 2)

    @given(st.floats(0.1, 5.0), st.integers(1, 12))
    @settings(deadline=None)
    def test_tiles_sum_to_the_disc(self, radius, cells):
        edges = np.linspace(-radius, radius, cells + 1)
        x0, y0 = np.meshgrid(edges[:-1], edges[:-1], indexing="ij")
        x1, y1 = np.meshgrid(edges[1:], edges[1:], indexing="ij")
        low = np.stack([x0, y0], axis=-1)
        high = np.stack([x1, y1], axis=-1)
        total = formulas.disc_rectangle_area(low, high, radius).sum()
        assert total == pytest.approx(math.pi * radius ** 2, rel=1e-12)
