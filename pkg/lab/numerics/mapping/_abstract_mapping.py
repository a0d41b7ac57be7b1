import numpy as np

from lab.exceptions import NoClosedFormInverseError, ValidationError


class Scheme:
    """
    Differentiation scheme for Jacobi matrices.

    :param self.kind: "analytic" or "central_fd"
    :param self.step: fixed finite-difference step, or None for the adaptive h = max(1e−5, 1e−6·(1+|x|))
    """

    __slots__ = "kind", "step"

    ANALYTIC = "analytic"
    CENTRAL_FD = "central_fd"

    def __init__(self, kind=ANALYTIC, step=None):
        if kind not in (self.ANALYTIC, self.CENTRAL_FD):
            raise ValidationError(f"unknown scheme {kind!r}, expected analytic or central_fd", "scheme")
        if step is not None and not (np.isfinite(step) and step > 0):
            raise ValidationError(f"finite-difference step must be positive, got {step}", "scheme.h")

        self.kind = kind
        self.step = step

    def __repr__(self):
        if self.kind == self.ANALYTIC:
            return "Scheme(analytic)"
        return f"Scheme(central_fd, h={self.step if self.step is not None else 'adaptive'})"

    def __eq__(self, other):
        return isinstance(other, Scheme) and (self.kind, self.step) == (other.kind, other.step)

    def __hash__(self):
        return hash((self.kind, self.step))

    @classmethod
    def analytic(cls):
        return cls(cls.ANALYTIC)

    @classmethod
    def central_fd(cls, step=None):
        return cls(cls.CENTRAL_FD, step)

    @classmethod
    def parse(cls, value):
        """Accepts a Scheme, "analytic", "central_fd" or {"kind": "central_fd", "h": 1e-4}."""
        if value is None:
            return cls.analytic()
        if isinstance(value, Scheme):
            return value
        if isinstance(value, str):
            return cls(value)
        if isinstance(value, dict):
            unknown = set(value) - {"kind", "h"}
            if unknown:
                raise ValidationError(f"unknown keys {sorted(unknown)}", "scheme")
            return cls(value.get("kind", cls.ANALYTIC), value.get("h"))
        raise ValidationError(f"cannot interpret {value!r} as a differentiation scheme", "scheme")

    def fd_steps(self, points):
        """Per-point step sizes."""
        points = np.asarray(points, dtype=float)
        if self.step is not None:
            return np.full(points.shape[:-1], float(self.step))
        return np.maximum(1e-5, 1e-6 * (1 + np.linalg.norm(points, axis=-1)))

    def to_config(self):
        if self.kind == self.ANALYTIC or self.step is None:
            return self.kind
        return {"kind": self.kind, "h": self.step}


class MappingSpec:
    """
    The MappingSpec abstract class is the cornerstone of the mapping sub-module. Child classes inherit from it to
    represent the different families of mappings φ: Ω → ℝⁿ.

    All evaluation methods are vectorized: they take points with shape (..., n) and return arrays with the same
    leading shape. Instances are immutable after construction.

    :param self.dimension: the dimension n the mapping acts on, or None for families defined in every dimension
    """

    __slots__ = "dimension",

    family = None
    has_analytic_jacobian = True
    constant_jacobian = False

    def evaluate(self, points):
        """
        The evaluate method returns φ at every point.

        :param points: array with shape (..., n)
        :return: array with shape (..., n)
        """
        raise NotImplementedError("evaluate(self, points) must be implemented")

    def jacobian(self, points):
        """
        The jacobian method returns the closed-form Jacobi matrix Dφ at every point.

        :param points: array with shape (..., n)
        :return: array with shape (..., n, n)
        """
        raise NotImplementedError("jacobian(self, points) must be implemented")

    def inverse(self):
        """Return the closed-form inverse mapping."""
        raise NoClosedFormInverseError(f"the {self.family} family has no closed-form inverse")

    def sanity_check(self):
        """Verify that the mapping parameters are valid."""
        raise NotImplementedError("sanity_check(self) must be implemented")

    def to_config(self) -> dict:
        raise NotImplementedError("to_config(self) must be implemented")

    def singular_points(self, dimension):
        """Points where the smooth representative is not differentiable, shape (m, n)."""
        return np.empty((0, dimension))

    def admissible(self, points):
        """Mask of points where the mapping can be evaluated."""
        return np.ones(np.asarray(points).shape[:-1], dtype=bool)

    def check_dimension(self, points):
        points = np.asarray(points, dtype=float)
        if points.ndim == 0 or points.shape[-1] < 2:
            raise ValidationError(f"points must have at least two coordinates, got shape {points.shape}")
        if self.dimension is not None and points.shape[-1] != self.dimension:
            raise ValidationError(f"{self.family} mapping acts on ℝ^{self.dimension}, got points in "
                                  f"ℝ^{points.shape[-1]}")
        return points

    # A custom print representation is trivial to implement and useful for debugging
    def __repr__(self):
        raise NotImplementedError("__repr__(self) must be implemented")
