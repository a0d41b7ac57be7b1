import logging
from pathlib import Path

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from lab.exceptions import DomainError, UnsupportedSchemeError, ValidationError
from lab.numerics.mapping._abstract_mapping import MappingSpec

logger = logging.getLogger(__name__)

INTERPOLATION_ORDERS = {"linear", "cubic"}


class GridFieldMap(MappingSpec):
    """
    A mapping sampled on the nodes of a uniform grid and interpolated in between.

    :param self.values: array with shape (N_1, ..., N_n, n), the image of every grid node
    :param self.lower: lower corner of the sampled box
    :param self.upper: upper corner of the sampled box
    :param self.order: "linear" (multilinear, default) or "cubic"
    """

    __slots__ = "values", "lower", "upper", "order", "path", "_interpolator"

    family = "grid_field"
    has_analytic_jacobian = False

    def __init__(self, values, lower, upper, order="linear", path=None):
        self.values = np.asarray(values, dtype=float)
        self.lower = np.asarray(lower, dtype=float)
        self.upper = np.asarray(upper, dtype=float)
        self.order = order
        self.path = path
        self.dimension = self.values.ndim - 1

        self.sanity_check()

        nodes = [np.linspace(self.lower[k], self.upper[k], self.values.shape[k]) for k in range(self.dimension)]
        self._interpolator = RegularGridInterpolator(nodes, self.values, method=self.order, bounds_error=False,
                                                     fill_value=None)

    def __repr__(self):
        shape = "×".join(str(s) for s in self.values.shape[:-1])
        return f"GridFieldMap({shape} nodes, {self.order})"

    def sanity_check(self):
        if self.order not in INTERPOLATION_ORDERS:
            raise ValidationError(f"unknown interpolation order {self.order!r}, expected one of "
                                  f"{sorted(INTERPOLATION_ORDERS)}", "map.order")

        if self.dimension < 2 or self.values.shape[-1] != self.dimension:
            raise ValidationError(f"grid field must have shape (N_1, ..., N_n, n), got {self.values.shape}",
                                  "map.values")

        minimum = 4 if self.order == "cubic" else 2
        if min(self.values.shape[:-1]) < minimum:
            raise ValidationError(f"{self.order} interpolation needs at least {minimum} nodes per axis", "map.values")

        if not np.all(np.isfinite(self.values)):
            raise ValidationError("grid field samples must be finite numbers", "map.values")

        if self.lower.shape != (self.dimension,) or self.upper.shape != (self.dimension,):
            raise ValidationError("sample box corners must have n coordinates", "map.lower")

        if not np.all(self.upper > self.lower):
            raise ValidationError("sample box upper corner must exceed the lower corner", "map.upper")

    def admissible(self, points):
        points = np.asarray(points, dtype=float)
        slack = 1e-12 * (self.upper - self.lower)
        return np.all((points >= self.lower - slack) & (points <= self.upper + slack), axis=-1)

    def covers(self, lower, upper):
        return bool(np.all(self.lower <= lower + 1e-12) and np.all(self.upper >= upper - 1e-12))

    def evaluate(self, points):
        points = self.check_dimension(points)

        if not np.all(self.admissible(points)):
            raise DomainError(f"points outside the sampled box {self.lower.tolist()}..{self.upper.tolist()}")

        clipped = np.clip(points, self.lower, self.upper)
        flat = clipped.reshape(-1, self.dimension)
        return self._interpolator(flat).reshape(points.shape)

    def jacobian(self, points):
        raise UnsupportedSchemeError("grid_field has no analytic Jacobian, use the central_fd scheme")

    def to_config(self):
        config = {"family": self.family, "order": self.order, "lower": self.lower.tolist(),
                  "upper": self.upper.tolist()}
        if self.path is not None:
            config["path"] = str(self.path)
        return config

    @classmethod
    def load(cls, path, lower, upper, order="linear"):
        """
        Load samples from a .npy file or a CSV file.

        CSV layout: a header row with the node counts followed by the component count (for example "33,33,2"),
        then one row of n components per node in row-major order.
        """
        path = Path(path)
        if not path.exists():
            raise ValidationError(f"grid field file {path} does not exist", "map.path")

        if path.suffix == ".npy":
            values = np.load(path, allow_pickle=False)
        else:
            values = _read_csv_field(path)

        logger.debug("loaded grid field %s with shape %s", path, values.shape)
        return cls(values, lower, upper, order, path=path)


def _read_csv_field(path):
    with open(path, encoding="utf-8") as f:
        header = f.readline().strip().lstrip("#").strip()

    try:
        shape = tuple(int(token) for token in header.replace(";", ",").split(","))
    except ValueError as e:
        raise ValidationError(f"CSV header must declare the dimensions, got {header!r}", "map.path") from e

    rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if rows.size != int(np.prod(shape)):
        raise ValidationError(f"CSV holds {rows.size} numbers, header declares shape {shape}", "map.path")

    return rows.reshape(shape)
