import numpy as np

from lab.exceptions import ValidationError
from lab.numerics import formulas
from lab.numerics.mapping._abstract_mapping import MappingSpec


class IdentityMap(MappingSpec):
    """The identity mapping, defined in every dimension."""

    __slots__ = ()

    family = "identity"
    constant_jacobian = True

    def __init__(self, dimension=None):
        self.dimension = dimension

    def __repr__(self):
        return "IdentityMap()"

    def evaluate(self, points):
        return np.array(self.check_dimension(points), copy=True)

    def jacobian(self, points):
        points = self.check_dimension(points)
        n = points.shape[-1]
        return np.broadcast_to(np.eye(n), points.shape[:-1] + (n, n)).copy()

    def inverse(self):
        return self

    def sanity_check(self):
        pass

    def to_config(self):
        return {"family": self.family}


class LinearMap(MappingSpec):
    """x ↦ A·x for a nonsingular square matrix A."""

    __slots__ = "matrix",

    family = "linear"
    constant_jacobian = True

    def __init__(self, matrix):
        self.matrix = np.array(matrix, dtype=float)
        self.dimension = self.matrix.shape[0] if self.matrix.ndim == 2 else None
        self.sanity_check()
        self.matrix.setflags(write=False)

    @classmethod
    def diagonal(cls, *entries):
        return cls(np.diag(entries))

    def __repr__(self):
        return f"LinearMap({self.matrix.tolist()})"

    def sanity_check(self):
        if self.matrix.ndim != 2 or self.matrix.shape[0] != self.matrix.shape[1]:
            raise ValidationError(f"linear matrix must be square, got shape {self.matrix.shape}", "map.matrix")
        if self.matrix.shape[0] < 2:
            raise ValidationError("linear matrix must be at least 2×2", "map.matrix")
        if not np.all(np.isfinite(self.matrix)):
            raise ValidationError("linear matrix entries must be finite", "map.matrix")
        if formulas.determinant(self.matrix) == 0:
            raise ValidationError("linear matrix must have a nonzero determinant", "map.matrix")

    def evaluate(self, points):
        return self.check_dimension(points) @ self.matrix.T

    def jacobian(self, points):
        points = self.check_dimension(points)
        return np.broadcast_to(self.matrix, points.shape[:-1] + self.matrix.shape).copy()

    def inverse(self):
        return LinearMap(np.linalg.inv(self.matrix))

    def to_config(self):
        return {"family": self.family, "matrix": self.matrix.tolist()}


class RadialPowerMap(MappingSpec):
    """
    x ↦ |x|^{a−1}·x about the origin, a > 0.

    The map fixes the origin and the unit sphere and is a homeomorphism of every annulus about the origin. For a < 1
    it stretches a neighbourhood of the origin without bound, which makes the origin a singular point.
    """

    __slots__ = "exponent",

    family = "radial_power"

    def __init__(self, exponent, dimension=None):
        self.exponent = float(exponent)
        self.dimension = dimension
        self.sanity_check()

    def __repr__(self):
        return f"RadialPowerMap(a={self.exponent})"

    def sanity_check(self):
        if not np.isfinite(self.exponent):
            raise ValidationError("radial_power exponent must be finite", "map.a")
        if self.exponent <= 0:
            raise ValidationError(f"radial_power exponent must be positive, got {self.exponent}", "map.a")

    def _radius(self, points):
        return np.linalg.norm(points, axis=-1)

    def evaluate(self, points):
        points = self.check_dimension(points)
        radius = self._radius(points)
        with np.errstate(divide="ignore", invalid="ignore"):
            scale = np.where(radius > 0, radius ** (self.exponent - 1), 0.0)
        return scale[..., None] * points

    def jacobian(self, points):
        # D(|x|^{a−1}x) = |x|^{a−1}·(I + (a−1)·x̂x̂ᵀ)
        points = self.check_dimension(points)
        n = points.shape[-1]
        radius = self._radius(points)
        safe = np.where(radius > 0, radius, 1.0)
        unit = np.where(radius[..., None] > 0, points / safe[..., None], 0.0)

        with np.errstate(divide="ignore", invalid="ignore"):
            scale = radius ** (self.exponent - 1)
            projector = unit[..., :, None] * unit[..., None, :]
            return scale[..., None, None] * (np.eye(n) + (self.exponent - 1) * projector)

    def inverse(self):
        return RadialPowerMap(1 / self.exponent, self.dimension)

    def singular_points(self, dimension):
        if self.exponent < 1:
            return np.zeros((1, dimension))
        return np.empty((0, dimension))

    def to_config(self):
        return {"family": self.family, "a": self.exponent}


class PlanarStretchMap(MappingSpec):
    """(x, y, …) ↦ (k·x, y, …)."""

    __slots__ = "factor",

    family = "planar_stretch"
    constant_jacobian = True

    def __init__(self, factor, dimension=None):
        self.factor = float(factor)
        self.dimension = dimension
        self.sanity_check()

    def __repr__(self):
        return f"PlanarStretchMap(k={self.factor})"

    def sanity_check(self):
        if not np.isfinite(self.factor) or self.factor == 0:
            raise ValidationError(f"stretch factor must be finite and nonzero, got {self.factor}", "map.k")

    def evaluate(self, points):
        image = np.array(self.check_dimension(points), copy=True)
        image[..., 0] *= self.factor
        return image

    def jacobian(self, points):
        points = self.check_dimension(points)
        n = points.shape[-1]
        matrix = np.eye(n)
        matrix[0, 0] = self.factor
        return np.broadcast_to(matrix, points.shape[:-1] + (n, n)).copy()

    def inverse(self):
        return PlanarStretchMap(1 / self.factor, self.dimension)

    def to_config(self):
        return {"family": self.family, "k": self.factor}


class ComposedMap(MappingSpec):
    """
    g ∘ f for two non-composed mappings, given in application order [f, g].

    Depth is limited to two so that a mapping and its inverse can always be chained.
    """

    __slots__ = "first", "second"

    family = "composed"

    def __init__(self, first: MappingSpec, second: MappingSpec):
        self.first = first
        self.second = second
        dimensions = {d for d in (first.dimension, second.dimension) if d is not None}
        self.dimension = dimensions.pop() if len(dimensions) == 1 else None
        self.sanity_check()

    def __repr__(self):
        return f"ComposedMap({self.second!r} ∘ {self.first!r})"

    @property
    def has_analytic_jacobian(self):
        return self.first.has_analytic_jacobian and self.second.has_analytic_jacobian

    @property
    def constant_jacobian(self):
        return self.first.constant_jacobian and self.second.constant_jacobian

    def sanity_check(self):
        if isinstance(self.first, ComposedMap) or isinstance(self.second, ComposedMap):
            raise ValidationError("composed mappings are limited to depth 2", "map.maps")
        dimensions = {d for d in (self.first.dimension, self.second.dimension) if d is not None}
        if len(dimensions) > 1:
            raise ValidationError(f"composed parts act on different dimensions {sorted(dimensions)}", "map.maps")

    def evaluate(self, points):
        return self.second.evaluate(self.first.evaluate(points))

    def jacobian(self, points):
        inner = self.first.evaluate(points)
        return np.matmul(self.second.jacobian(inner), self.first.jacobian(points))

    def admissible(self, points):
        mask = self.first.admissible(points)
        with np.errstate(all="ignore"):
            inner = self.first.evaluate(np.where(mask[..., None], points, 0.0)) if not np.all(mask) \
                else self.first.evaluate(points)
        return mask & self.second.admissible(inner)

    def inverse(self):
        return ComposedMap(self.second.inverse(), self.first.inverse())

    def singular_points(self, dimension):
        points = [self.first.singular_points(dimension)]
        outer = self.second.singular_points(dimension)
        if len(outer):
            # preimages of the outer factor's singular points
            points.append(self.first.inverse().evaluate(outer))
        return np.concatenate(points, axis=0)

    def to_config(self):
        return {"family": self.family, "maps": [self.first.to_config(), self.second.to_config()]}
