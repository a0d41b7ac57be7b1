import itertools
import math

import numpy as np

from lab.exceptions import ValidationError
from lab.numerics.mapping import Domain

FAMILY_KINDS = {"coordinate", "radial_log", "radius", "bump", "tensor_cosine", "constant"}


class TestFunction:
    """
    A C¹ function on the closed image domain with a closed-form gradient.

    :param self.value: vectorized callable, points (..., n) -> (...)
    :param self.gradient: vectorized callable, points (..., n) -> (..., n)
    :param self.affine: the function is affine, so midpoint quadrature of it over boxes is exact
    """

    __test__ = False
    __slots__ = "name", "_value", "_gradient", "affine"

    def __init__(self, name, value, gradient, affine=False):
        self.name = name
        self._value = value
        self._gradient = gradient
        self.affine = affine

    def __repr__(self):
        return f"TestFunction({self.name})"

    def value(self, points):
        return self._value(np.asarray(points, dtype=float))

    def gradient(self, points):
        return self._gradient(np.asarray(points, dtype=float))

    def pullback_gradient(self, images, jacobian):
        """∇(f∘φ)(x) = Dφ(x)ᵀ ∇f(φ(x)), given φ(x) and Dφ(x)."""
        return np.einsum("...ji,...j->...i", jacobian, self.gradient(images))


def _directions(n):
    yield from np.eye(n)
    for i, j in itertools.combinations(range(n), 2):
        for sign in (1.0, -1.0):
            direction = np.zeros(n)
            direction[i], direction[j] = 1.0, sign
            yield direction / math.sqrt(2)


def _coordinate(direction, index):
    return TestFunction(f"coordinate[{index}]", lambda y: y @ direction,
                        lambda y: np.broadcast_to(direction, y.shape).copy(), affine=True)


def _radial_log(center, scale, power):
    def value(y):
        return np.log(np.linalg.norm(y - center, axis=-1) / scale) ** power

    def gradient(y):
        offset = y - center
        squared = np.sum(offset ** 2, axis=-1)
        factor = power * np.log(np.sqrt(squared) / scale) ** (power - 1) / squared
        return factor[..., None] * offset

    name = "radial_log" if power == 1 else f"radial_log^{power}"
    return TestFunction(name, value, gradient)


def _radius(center, power):
    def value(y):
        return np.linalg.norm(y - center, axis=-1) ** power

    def gradient(y):
        offset = y - center
        distance = np.linalg.norm(offset, axis=-1)
        with np.errstate(divide="ignore", invalid="ignore"):
            factor = np.where(distance > 0, power * distance ** (power - 2), 0.0)
        return factor[..., None] * offset

    return TestFunction("radius" if power == 1 else f"radius^{power}", value, gradient)


def _bump(center, radius, index):
    # (1 − |y − c|²/ρ²)²₊ is C¹ with compact support
    def value(y):
        t = np.sum((y - center) ** 2, axis=-1) / radius ** 2
        return np.clip(1 - t, 0.0, None) ** 2

    def gradient(y):
        offset = y - center
        t = np.sum(offset ** 2, axis=-1) / radius ** 2
        return (-4 * np.clip(1 - t, 0.0, None) / radius ** 2)[..., None] * offset

    return TestFunction(f"bump[{index}]", value, gradient)


def _tensor_cosine(lower, extent, frequency):
    wave = frequency * math.pi / extent

    def value(y):
        return np.prod(np.cos(wave * (y - lower)), axis=-1)

    def gradient(y):
        phase = wave * (y - lower)
        cosines = np.cos(phase)
        result = np.empty_like(y)
        for k in range(y.shape[-1]):
            others = np.prod(np.delete(cosines, k, axis=-1), axis=-1)
            result[..., k] = -wave[k] * np.sin(phase[..., k]) * others
        return result

    return TestFunction(f"tensor_cosine[{frequency}]", value, gradient)


class TestFunctionFamily:
    """
    Parametrized family of test functions with bounded gradients on the image domain.

    coordinate: f = v·y for the coordinate axes, then the normalized diagonals e_i ± e_j.
    radial_log: f = ln(|y − c|/scale)^k for k = 1..count; c must lie outside the domain.
    radius: f = |y − c|^k for k = 1..count, non-negative.
    bump: f = (1 − |y − c|²/ρ²)²₊ with ρ = scale·k/count.
    tensor_cosine: f = Π cos(kπ(y_i − lower_i)/L_i) over the bounding box.
    constant: f ≡ 1.

    :param self.center: defaults to the domain centre for radial_log and radius on balls and annuli, to a point
        inside the domain for bump
    :param self.scale: defaults to 1 for radial_log and a quarter of the smallest extent for bump
    """

    __test__ = False
    __slots__ = "kind", "count", "center", "scale"

    DEFAULT_COUNTS = {"radial_log": 1, "radius": 1, "bump": 2, "tensor_cosine": 2, "constant": 1}

    def __init__(self, kind, count=None, center=None, scale=None):
        if kind not in FAMILY_KINDS:
            raise ValidationError(f"unknown family kind {kind!r}, expected one of {sorted(FAMILY_KINDS)}",
                                  "family.kind")
        self.kind = kind
        self.count = None if count is None else int(count)
        self.center = None if center is None else np.asarray(center, dtype=float)
        self.scale = None if scale is None else float(scale)

        if self.count is not None and self.count < 1:
            raise ValidationError(f"family count must be positive, got {self.count}", "family.count")
        if self.scale is not None and not self.scale > 0:
            raise ValidationError(f"family scale must be positive, got {self.scale}", "family.scale")

    def __repr__(self):
        return f"TestFunctionFamily({self.kind}, count={self.count})"

    def _center(self, domain: Domain):
        if self.center is not None:
            if self.center.shape != (domain.dimension,):
                raise ValidationError(f"family center must have {domain.dimension} coordinates", "family.center")
            return self.center

        lower, upper = domain.bounds()
        if self.kind in ("radial_log", "radius"):
            if domain.kind == "box":
                return lower - 0.5 * (upper - lower)
            return domain.center

        if domain.kind == "annulus":
            offset = np.zeros(domain.dimension)
            offset[0] = 0.5 * (domain.r_inner + domain.r_outer)
            return domain.center + offset
        return 0.5 * (lower + upper)

    def members(self, domain: Domain) -> list[TestFunction]:
        """The family members for an image domain."""
        n = domain.dimension
        lower, upper = domain.bounds()

        if self.kind == "constant":
            return [TestFunction("constant", lambda y: np.ones(y.shape[:-1]), np.zeros_like, affine=True)]

        if self.kind == "coordinate":
            directions = list(_directions(n))
            count = n if self.count is None else self.count
            if count > len(directions):
                raise ValidationError(f"the coordinate family has at most {len(directions)} members in ℝ^{n}",
                                      "family.count")
            return [_coordinate(direction, i) for i, direction in enumerate(directions[:count])]

        count = self.DEFAULT_COUNTS[self.kind] if self.count is None else self.count

        if self.kind == "tensor_cosine":
            return [_tensor_cosine(lower, upper - lower, k) for k in range(1, count + 1)]

        center = self._center(domain)

        if self.kind == "radial_log":
            if np.all(domain.contains(center)):
                raise ValidationError("radial_log center must lie outside the domain", "family.center")
            scale = 1.0 if self.scale is None else self.scale
            return [_radial_log(center, scale, k) for k in range(1, count + 1)]

        if self.kind == "radius":
            return [_radius(center, k) for k in range(1, count + 1)]

        scale = 0.25 * float(np.min(upper - lower)) if self.scale is None else self.scale
        return [_bump(center, scale * k / count, k) for k in range(1, count + 1)]

    def to_config(self):
        config = {"kind": self.kind}
        if self.count is not None:
            config["count"] = self.count
        if self.center is not None:
            config["center"] = self.center.tolist()
        if self.scale is not None:
            config["scale"] = self.scale
        return config

    @classmethod
    def from_config(cls, config, field: str = "family"):
        if isinstance(config, str):
            return cls(config)
        if not isinstance(config, dict):
            raise ValidationError("family description must be a kind or an object", field)

        unknown = set(config) - {"kind", "count", "center", "scale"}
        if unknown:
            raise ValidationError(f"unknown keys {sorted(unknown)}", field)
        if "kind" not in config:
            raise ValidationError("missing required key 'kind'", field)

        return cls(config["kind"], config.get("count"), config.get("center"), config.get("scale"))


def default_families(domain: Domain) -> list[TestFunctionFamily]:
    """Coordinate functions and cosines everywhere, plus the logarithmic potential on annuli."""
    families = [TestFunctionFamily("coordinate"), TestFunctionFamily("tensor_cosine", 1)]
    if domain.kind == "annulus":
        families.append(TestFunctionFamily("radial_log"))
    return families


def family_members(families, domain: Domain) -> list[TestFunction]:
    """Members of one family or of a sequence of families."""
    if families is None:
        families = default_families(domain)
    if isinstance(families, TestFunctionFamily):
        families = [families]

    members = [member for family in families for member in family.members(domain)]
    if not members:
        raise ValidationError("the test-function family is empty", "family")
    return members
