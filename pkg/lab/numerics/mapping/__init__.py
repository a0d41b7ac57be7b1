"""
Mappings φ: Ω → ℝⁿ, the domains they act on, and the differential packages every functional is built from.
"""

import numpy as np

from lab.exceptions import DomainError, NoClosedFormInverseError, ValidationError
from lab.numerics import FAMILIES
from lab.numerics.mapping._abstract_mapping import MappingSpec, Scheme
from lab.numerics.mapping._differential import (DifferentialField, DifferentialSample, compute_jacobian,
                                                differential_quantities, finite_difference_jacobian, sample_grid)
from lab.numerics.mapping._domain import Domain
from lab.numerics.mapping._families import ComposedMap, IdentityMap, LinearMap, PlanarStretchMap, RadialPowerMap
from lab.numerics.mapping._grid_field import GridFieldMap

__all__ = [
    "MappingSpec", "Scheme", "Domain", "DifferentialSample", "DifferentialField", "IdentityMap", "LinearMap",
    "RadialPowerMap", "PlanarStretchMap", "ComposedMap", "GridFieldMap", "evaluate", "jacobian",
    "differential_sample", "sample_grid", "inverse_spec", "mapping_from_config", "image_domain_of",
    "differential_quantities", "finite_difference_jacobian",
]


def evaluate(spec: MappingSpec, x, domain: Domain | None = None):
    """φ(x). When a domain is given every point must lie in its closure."""
    x = np.asarray(x, dtype=float)
    if domain is not None and not np.all(domain.contains(x)):
        raise DomainError(f"point(s) outside {domain!r}")
    return spec.evaluate(x)


def jacobian(spec: MappingSpec, x, scheme=None):
    """Dφ(x) by the analytic or the central_fd scheme."""
    return compute_jacobian(spec, x, scheme)


def differential_sample(spec: MappingSpec, x, scheme=None) -> DifferentialSample:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValidationError(f"differential_sample takes a single point, got shape {x.shape}")
    return DifferentialSample.from_jacobian(x, compute_jacobian(spec, x, scheme))


def inverse_spec(spec: MappingSpec) -> MappingSpec:
    """Closed-form inverse mapping. Raises NoClosedFormInverseError for sampled fields."""
    return spec.inverse()


def mapping_from_config(config: dict, domain: Domain | None = None, field: str = "map") -> MappingSpec:
    """
    Build a MappingSpec from its JSON description.

    The domain supplies the dimension for dimension-free families and the default sample box of grid fields.
    """
    if not isinstance(config, dict):
        raise ValidationError("mapping description must be an object", field)

    family = config.get("family")
    dimension = domain.dimension if domain is not None else None

    keys = {
        "identity": set(),
        "linear": {"matrix"},
        "radial_power": {"a"},
        "planar_stretch": {"k"},
        "grid_field": {"path", "order", "lower", "upper"},
        "composed": {"maps"},
    }

    if family not in FAMILIES:
        raise ValidationError(f"unknown family {family!r}, expected one of {sorted(FAMILIES)}", f"{field}.family")

    unknown = set(config) - keys[family] - {"family"}
    if unknown:
        raise ValidationError(f"unknown keys {sorted(unknown)} for family {family}", field)

    try:
        if family == "identity":
            return IdentityMap(dimension)

        if family == "linear":
            return LinearMap(config["matrix"])

        if family == "radial_power":
            return RadialPowerMap(config["a"], dimension)

        if family == "planar_stretch":
            return PlanarStretchMap(config["k"], dimension)

        if family == "grid_field":
            lower, upper = config.get("lower"), config.get("upper")
            if lower is None or upper is None:
                if domain is None:
                    raise ValidationError("grid_field needs lower/upper or a domain", field)
                lower, upper = domain.bounds()
            return GridFieldMap.load(config["path"], lower, upper, config.get("order", "linear"))

        parts = config["maps"]
        if not isinstance(parts, list) or len(parts) != 2:
            raise ValidationError("composed takes a list of exactly two mappings", f"{field}.maps")
        first = mapping_from_config(parts[0], domain, f"{field}.maps[0]")
        second = mapping_from_config(parts[1], domain, f"{field}.maps[1]")
        return ComposedMap(first, second)

    except KeyError as e:
        raise ValidationError(f"missing required key {e.args[0]!r} for family {family}", field) from e
    except (TypeError, ValueError) as e:
        if isinstance(e, ValidationError):
            raise
        raise ValidationError(str(e), field) from e


def _is_axis_aligned(matrix):
    off_diagonal = matrix - np.diag(np.diag(matrix))
    return not np.any(off_diagonal)


def _covering_box(spec, domain):
    """Axis-aligned box containing φ(Ω), from the images of the grid nodes and domain corners."""
    lower, upper = domain.bounds()
    nodes = np.stack(np.meshgrid(*[np.linspace(lower[k], upper[k], domain.grid + 1)
                                   for k in range(domain.dimension)], indexing="ij"), axis=-1)
    nodes = nodes.reshape(-1, domain.dimension)
    nodes = nodes[spec.admissible(nodes)]
    image = spec.evaluate(nodes)
    return Domain.box(image.min(axis=0), image.max(axis=0), domain.grid)


def image_domain_of(spec: MappingSpec, domain: Domain, exact: bool = True) -> Domain:
    """
    The image domain φ(Ω) at the same grid resolution.

    With exact=False a covering box is returned whenever the image is not itself a box, ball or annulus; the caller
    restricts to φ(Ω) by pulling cell centres back through the inverse.
    """
    if isinstance(spec, IdentityMap):
        return domain.with_grid(domain.grid)

    image = None

    if isinstance(spec, (LinearMap, PlanarStretchMap)):
        matrix = spec.matrix if isinstance(spec, LinearMap) else np.diag([spec.factor] + [1.0] * (domain.dimension - 1))
        if domain.kind == "box" and _is_axis_aligned(matrix):
            corners = np.stack([domain.lower @ matrix.T, domain.upper @ matrix.T])
            image = Domain.box(corners.min(axis=0), corners.max(axis=0), domain.grid)
        elif domain.kind != "box" and np.allclose(np.abs(np.diag(matrix)), abs(matrix[0, 0])) \
                and _is_axis_aligned(matrix):
            scale = abs(matrix[0, 0])
            center = domain.center @ matrix.T
            if domain.kind == "ball":
                image = Domain.ball(center, scale * domain.radius, domain.grid)
            else:
                image = Domain.annulus(center, scale * domain.r_inner, scale * domain.r_outer, domain.grid)

    elif isinstance(spec, RadialPowerMap) and domain.kind != "box" and not np.any(domain.center):
        a = spec.exponent
        if domain.kind == "ball":
            image = Domain.ball(domain.center, domain.radius ** a, domain.grid)
        else:
            image = Domain.annulus(domain.center, domain.r_inner ** a, domain.r_outer ** a, domain.grid)

    elif isinstance(spec, ComposedMap):
        try:
            middle = image_domain_of(spec.first, domain, exact=True)
            image = image_domain_of(spec.second, middle, exact=True)
        except ValidationError:
            image = None

    if image is not None:
        return image

    if exact:
        raise ValidationError(f"the image of {domain!r} under {spec!r} is not a box, ball or annulus; "
                              "give image_domain explicitly", "image_domain")

    if isinstance(spec, GridFieldMap) and not spec.covers(*domain.bounds()):
        raise NoClosedFormInverseError("grid field samples do not cover the domain")

    return _covering_box(spec, domain)
