import math

import numpy as np
import pytest

from lab.exceptions import (DegenerateDomainError, DomainError, NoClosedFormInverseError, UnsupportedSchemeError,
                            ValidationError)
from lab.numerics.mapping import (ComposedMap, Domain, GridFieldMap, IdentityMap, LinearMap, PlanarStretchMap,
                                  RadialPowerMap, Scheme, differential_sample, evaluate, image_domain_of, inverse_spec,
                                  jacobian, mapping_from_config, sample_grid)


def identity_samples(nodes=5):
    axis = np.linspace(0.0, 1.0, nodes)
    return np.stack(np.meshgrid(axis, axis, indexing="ij"), axis=-1)


class TestEvaluate:
    def test_identity(self, identity):
        np.testing.assert_allclose(evaluate(identity, [0.3, 0.4]), [0.3, 0.4])

    @pytest.mark.parametrize("x, expected", [([1.0, 0.0], [1.0, 0.0]), ([2.0, 0.0], [4.0, 0.0])])
    def test_radial_power(self, squaring, x, expected):
        np.testing.assert_allclose(evaluate(squaring, x), expected)

    def test_radial_power_fixes_origin(self):
        np.testing.assert_allclose(evaluate(RadialPowerMap(0.5), [0.0, 0.0]), [0.0, 0.0])

    def test_point_outside_domain(self, identity, unit_square):
        with pytest.raises(DomainError):
            evaluate(identity, [1.5, 0.5], unit_square)

    def test_vectorized_shape(self, diag21):
        points = np.zeros((3, 4, 2))
        assert evaluate(diag21, points).shape == (3, 4, 2)


class TestJacobian:
    def test_identity(self, identity):
        np.testing.assert_allclose(jacobian(identity, [0.7, -0.2]), np.eye(2))

    def test_linear(self, diag21):
        np.testing.assert_allclose(jacobian(diag21, [5.0, 3.0]), np.diag([2.0, 1.0]))

    def test_radial_power_on_the_unit_circle(self, squaring):
        np.testing.assert_allclose(jacobian(squaring, [1.0, 0.0]), np.diag([2.0, 1.0]))

    @pytest.mark.parametrize("spec", [RadialPowerMap(2.0), RadialPowerMap(0.5), PlanarStretchMap(1.5),
                                      LinearMap([[1.0, 0.5], [0.0, 1.0]])])
    def test_central_fd_agrees_with_analytic(self, spec):
        x = np.array([[1.3, 0.4], [-0.7, 1.1]])
        np.testing.assert_allclose(jacobian(spec, x, Scheme.central_fd()), jacobian(spec, x), atol=1e-6)

    def test_composed_with_inverse_is_identity(self, diag21):
        composed = ComposedMap(diag21, inverse_spec(diag21))
        np.testing.assert_allclose(jacobian(composed, [0.4, 0.9]), np.eye(2), atol=1e-14)

    def test_chain_rule_through_a_shear(self):
        shear = LinearMap([[1.0, 0.5], [-0.3, 1.2]])
        composed = ComposedMap(shear, RadialPowerMap(2.0))
        x = np.array([0.8, -0.6])

        # D(|y|y) = |y|(I + ŷŷᵀ) at y = Ax
        y = shear.matrix @ x
        radius = np.linalg.norm(y)
        expected = radius * (np.eye(2) + np.outer(y, y) / radius ** 2) @ shear.matrix

        np.testing.assert_allclose(jacobian(composed, x), expected, rtol=1e-12)
        np.testing.assert_allclose(jacobian(composed, x, Scheme.central_fd()), expected, atol=1e-6)

    def test_central_fd_is_second_order(self, squaring):
        x = np.array([1.3, 0.4])
        exact = jacobian(squaring, x)
        coarse = np.max(np.abs(jacobian(squaring, x, Scheme.central_fd(1e-2)) - exact))
        fine = np.max(np.abs(jacobian(squaring, x, Scheme.central_fd(5e-3)) - exact))
        assert coarse / fine >= 3.5

    def test_grid_field_has_no_analytic_jacobian(self):
        field = GridFieldMap(identity_samples(), [0, 0], [1, 1])
        with pytest.raises(UnsupportedSchemeError):
            jacobian(field, [0.5, 0.5])

    def test_grid_field_central_fd(self):
        field = GridFieldMap(identity_samples(), [0, 0], [1, 1])
        np.testing.assert_allclose(jacobian(field, [0.3, 0.6], "central_fd"), np.eye(2), atol=1e-8)

    def test_grid_field_one_sided_at_the_boundary(self):
        field = GridFieldMap(identity_samples(), [0, 0], [1, 1])
        np.testing.assert_allclose(jacobian(field, [0.0, 1.0], "central_fd"), np.eye(2), atol=1e-8)


class TestDifferentialSample:
    def test_diag21(self, diag21):
        sample = differential_sample(diag21, [0.5, 0.5])
        assert sample.det == pytest.approx(2.0)
        assert sample.op_norm == pytest.approx(2.0)
        assert sample.min_stretch == pytest.approx(1.0)
        assert sample.adj_norm == pytest.approx(2.0)

    def test_rejects_point_stacks(self, diag21):
        with pytest.raises(ValidationError):
            differential_sample(diag21, [[0.5, 0.5]])


class TestSampleGrid:
    def test_identity_on_unit_square(self, identity):
        field = sample_grid(identity, Domain.box([0, 0], [1, 1], grid=4))
        assert len(field) == 16
        np.testing.assert_allclose(field.op_norm, 1.0)
        assert field.excluded_count == 0

    def test_grid_too_coarse(self, identity):
        with pytest.raises(ValidationError):
            sample_grid(identity, Domain.box([0, 0], [1, 1], grid=3))

    def test_no_exclusion_when_origin_is_outside(self):
        field = sample_grid(RadialPowerMap(0.5), Domain.annulus([0, 0], 0.5, 1.0, grid=32))
        assert field.excluded_count == 0

    def test_cells_near_the_origin_are_excluded(self):
        domain = Domain.ball([0, 0], 1.0, grid=32)
        field = sample_grid(RadialPowerMap(0.5), domain)
        h = float(np.max(domain.spacing))
        expected = np.count_nonzero(np.linalg.norm(domain.quadrature()[0], axis=-1) < 2 * h)
        assert field.excluded_count == expected == 12
        assert np.all(np.isnan(field.det[field.excluded]))

    def test_every_cell_excluded(self):
        with pytest.raises(DegenerateDomainError):
            sample_grid(RadialPowerMap(0.5), Domain.ball([0, 0], 0.1, grid=4), exclusion_radius=1.0)

    def test_dimension_mismatch(self):
        with pytest.raises(ValidationError):
            sample_grid(LinearMap.diagonal(3, 2, 1), Domain.box([0, 0], [1, 1], grid=8))


class TestInverse:
    def test_linear(self, diag21):
        np.testing.assert_allclose(inverse_spec(diag21).matrix, np.diag([0.5, 1.0]))

    def test_radial_power(self, squaring):
        assert inverse_spec(squaring).exponent == 0.5

    def test_identity(self, identity):
        assert isinstance(inverse_spec(identity), IdentityMap)

    def test_grid_field(self):
        with pytest.raises(NoClosedFormInverseError):
            inverse_spec(GridFieldMap(identity_samples(), [0, 0], [1, 1]))

    def test_round_trip(self, squaring):
        x = np.array([1.2, -0.4])
        np.testing.assert_allclose(evaluate(inverse_spec(squaring), evaluate(squaring, x)), x)


class TestDomain:
    def test_annulus_volume_fractions(self, annulus12):
        _, weights, _ = annulus12.quadrature()
        assert weights.sum() == pytest.approx(3 * math.pi, rel=1e-3)
        assert annulus12.measure() == pytest.approx(3 * math.pi)

    @pytest.mark.parametrize("grid", [16, 33, 64])
    def test_planar_annulus_fractions_are_exact(self, grid):
        domain = Domain.annulus([0.3, -0.2], 0.5, 1.0, grid)
        points, weights, _ = domain.quadrature()
        assert weights.sum() == pytest.approx(domain.measure(), rel=1e-12)

        distance = np.linalg.norm(points - [0.3, -0.2], axis=-1)
        half_diagonal = 0.5 * np.linalg.norm(domain.spacing)
        assert np.all((distance > 0.5 - half_diagonal) & (distance < 1.0 + half_diagonal))

    def test_ball_volume_fractions_3d(self):
        _, weights, _ = Domain.ball([0, 0, 0], 1.0, grid=24).quadrature()
        assert weights.sum() == pytest.approx(4 * math.pi / 3, rel=5e-3)

    @pytest.mark.parametrize("build", [
        lambda: Domain.annulus([0, 0], 2.0, 1.0),
        lambda: Domain.ball([0, 0], -1.0),
        lambda: Domain.box([0, 0], [1, 0]),
        lambda: Domain.box([0], [1]),
        lambda: Domain.box([0, 0], [math.inf, 1]),
    ])
    def test_invalid_geometry(self, build):
        with pytest.raises(ValidationError):
            build()

    def test_from_config(self):
        domain = Domain.from_config({"kind": "annulus", "n": 2, "center": [0, 0], "r_inner": 1, "r_outer": 2,
                                     "grid": 16})
        assert domain.kind == "annulus"
        assert domain.grid == 16
        assert Domain.from_config(domain.to_config()).to_config() == domain.to_config()

    def test_from_config_prefixes_the_field(self):
        with pytest.raises(ValidationError, match=r"domain\.r_inner"):
            Domain.from_config({"kind": "annulus", "center": [0, 0], "r_inner": 3, "r_outer": 2})

    def test_from_config_rejects_unknown_keys(self):
        with pytest.raises(ValidationError, match="radius"):
            Domain.from_config({"kind": "box", "lower": [0, 0], "upper": [1, 1], "radius": 2})

    def test_from_config_checks_dimension(self):
        with pytest.raises(ValidationError, match=r"domain\.n"):
            Domain.from_config({"kind": "box", "n": 3, "lower": [0, 0], "upper": [1, 1]})


class TestMappingFromConfig:
    def test_families(self, unit_square):
        assert isinstance(mapping_from_config({"family": "identity"}, unit_square), IdentityMap)
        assert mapping_from_config({"family": "radial_power", "a": 2}).exponent == 2.0
        assert mapping_from_config({"family": "planar_stretch", "k": 1.5}).factor == 1.5

    def test_composed(self):
        spec = mapping_from_config({"family": "composed", "maps": [{"family": "planar_stretch", "k": 2},
                                                                   {"family": "radial_power", "a": 2}]})
        assert isinstance(spec, ComposedMap)
        assert spec.to_config()["maps"][1] == {"family": "radial_power", "a": 2.0}

    def test_unknown_family(self):
        with pytest.raises(ValidationError, match=r"map\.family"):
            mapping_from_config({"family": "mobius"})

    @pytest.mark.parametrize("config", [
        {"family": "radial_power", "a": -1},
        {"family": "radial_power", "a": math.nan},
        {"family": "planar_stretch", "k": 0},
        {"family": "linear", "matrix": [[1, 2], [2, 4]]},
        {"family": "linear"},
        {"family": "identity", "a": 2},
        {"family": "composed", "maps": [{"family": "identity"}]},
    ])
    def test_invalid(self, config):
        with pytest.raises(ValidationError):
            mapping_from_config(config)

    def test_grid_field_from_csv(self, tmp_path, unit_square):
        values = identity_samples()
        path = tmp_path / "field.csv"
        rows = "\n".join(",".join(f"{c:.6f}" for c in node) for node in values.reshape(-1, 2))
        path.write_text("5,5,2\n" + rows + "\n", encoding="utf-8")

        spec = mapping_from_config({"family": "grid_field", "path": str(path)}, unit_square)
        np.testing.assert_allclose(spec.evaluate(np.array([0.3, 0.7])), [0.3, 0.7], atol=1e-12)

    def test_grid_field_from_npy(self, tmp_path):
        path = tmp_path / "field.npy"
        np.save(path, identity_samples())
        spec = mapping_from_config({"family": "grid_field", "path": str(path), "lower": [0, 0], "upper": [1, 1],
                                    "order": "cubic"})
        np.testing.assert_allclose(spec.evaluate(np.array([0.25, 0.5])), [0.25, 0.5], atol=1e-12)

    def test_grid_field_missing_file(self, tmp_path, unit_square):
        with pytest.raises(ValidationError, match="does not exist"):
            mapping_from_config({"family": "grid_field", "path": str(tmp_path / "missing.npy")}, unit_square)


class TestImageDomain:
    def test_identity(self, identity, unit_square):
        assert image_domain_of(identity, unit_square).to_config() == unit_square.to_config()

    def test_diagonal_box(self, diag21, unit_square):
        image = image_domain_of(diag21, unit_square)
        np.testing.assert_allclose(image.lower, [0, 0])
        np.testing.assert_allclose(image.upper, [2, 1])

    def test_radial_annulus(self, squaring, annulus12):
        image = image_domain_of(squaring, annulus12)
        assert (image.kind, image.r_inner, image.r_outer) == ("annulus", 1.0, 4.0)

    def test_shear_has_no_exact_image(self, unit_square):
        shear = LinearMap([[1.0, 0.5], [0.0, 1.0]])
        with pytest.raises(ValidationError, match="image_domain"):
            image_domain_of(shear, unit_square, exact=True)

    def test_shear_covering_box(self, unit_square):
        image = image_domain_of(LinearMap([[1.0, 0.5], [0.0, 1.0]]), unit_square, exact=False)
        np.testing.assert_allclose(image.lower, [0, 0])
        np.testing.assert_allclose(image.upper, [1.5, 1])
