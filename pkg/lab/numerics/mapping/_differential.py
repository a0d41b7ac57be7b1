import logging

import numpy as np

from lab.exceptions import DegenerateDomainError, DomainError, UnsupportedSchemeError, ValidationError
from lab.numerics import formulas
from lab.numerics.mapping._abstract_mapping import MappingSpec, Scheme
from lab.numerics.mapping._domain import Domain

logger = logging.getLogger(__name__)

MINIMUM_GRID = 4


class DifferentialSample:
    """
    The differential package of a mapping at one point.

    :param self.point: x
    :param self.jacobian: Dφ(x)
    :param self.det: J(x, φ)
    :param self.op_norm: σ_max(Dφ(x)), the operator norm |Dφ(x)|
    :param self.min_stretch: σ_min(Dφ(x)), the least stretching l(Dφ(x))
    :param self.adj_norm: operator norm of adj Dφ(x)
    """

    __slots__ = "point", "jacobian", "det", "op_norm", "min_stretch", "adj_norm"

    def __init__(self, point, jacobian, det, op_norm, min_stretch, adj_norm):
        self.point = np.asarray(point, dtype=float)
        self.jacobian = np.asarray(jacobian, dtype=float)
        self.det = float(det)
        self.op_norm = float(op_norm)
        self.min_stretch = float(min_stretch)
        self.adj_norm = float(adj_norm)

    @classmethod
    def from_jacobian(cls, point, jacobian):
        jacobian = np.asarray(jacobian, dtype=float)
        det, op_norm, min_stretch, adj_norm = differential_quantities(jacobian)
        return cls(point, jacobian, det, op_norm, min_stretch, adj_norm)

    @property
    def dimension(self):
        return self.jacobian.shape[-1]

    def __repr__(self):
        return (f"DifferentialSample(x={self.point.tolist()}, det={self.det:.6g}, |Dφ|={self.op_norm:.6g}, "
                f"l={self.min_stretch:.6g}, |adj|={self.adj_norm:.6g})")


class DifferentialField:
    """
    Differential packages on the cells of a grid, stored as parallel arrays in row-major grid order.

    Excluded cells keep their slot; their Jacobian entries are NaN and every functional skips them.
    """

    __slots__ = ("domain", "points", "index", "weights", "excluded", "jacobian", "det", "op_norm", "min_stretch",
                 "adj_norm", "exclusion_radius")

    def __init__(self, domain, points, index, weights, excluded, jacobian, exclusion_radius):
        self.domain = domain
        self.points = points
        self.index = index
        self.weights = weights
        self.excluded = excluded
        self.jacobian = jacobian
        self.exclusion_radius = exclusion_radius
        self.det, self.op_norm, self.min_stretch, self.adj_norm = differential_quantities(jacobian)

    def __len__(self):
        return len(self.points)

    def __getitem__(self, i):
        return DifferentialSample(self.points[i], self.jacobian[i], self.det[i], self.op_norm[i],
                                  self.min_stretch[i], self.adj_norm[i])

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def __repr__(self):
        return f"DifferentialField({len(self)} cells, {self.excluded_count} excluded, {self.domain!r})"

    @property
    def active(self):
        return ~self.excluded

    @property
    def excluded_count(self):
        return int(np.count_nonzero(self.excluded))

    @property
    def dimension(self):
        return self.points.shape[-1]

    def active_weights(self):
        return self.weights[self.active]


def differential_quantities(jacobian):
    """det, σ_max, σ_min and |adj| of a stack of Jacobi matrices. NaN matrices give NaN entries."""
    jacobian = np.asarray(jacobian, dtype=float)
    finite = np.all(np.isfinite(jacobian), axis=(-2, -1))
    safe = np.where(finite[..., None, None], jacobian, 0.0)

    det = formulas.determinant(safe)
    op_norm, min_stretch = formulas.singular_values(safe)
    adj_norm = formulas.operator_norm(formulas.adjugate(safe))

    nan = np.full(finite.shape, np.nan)
    return tuple(np.where(finite, value, nan) for value in (det, op_norm, min_stretch, adj_norm))


def finite_difference_jacobian(spec: MappingSpec, points, scheme: Scheme):
    """
    Second-order finite-difference Jacobi matrices.

    Central differences where both neighbours are admissible for the mapping, three-point one-sided formulas within
    one step of the boundary of its definition box.
    """
    points = spec.check_dimension(points)
    n = points.shape[-1]
    flat = points.reshape(-1, n)
    steps = scheme.fd_steps(flat)
    jacobian = np.empty(flat.shape + (n,))

    for k in range(n):
        offset = np.zeros_like(flat)
        offset[:, k] = steps
        plus = spec.admissible(flat + offset)
        minus = spec.admissible(flat - offset)

        central = plus & minus
        forward = ~central & plus & spec.admissible(flat + 2 * offset)
        backward = ~central & ~forward & minus & spec.admissible(flat - 2 * offset)

        if not np.all(central | forward | backward):
            raise DomainError("finite-difference stencil leaves the mapping's domain of definition")

        h = steps[:, None]
        if np.any(central):
            x, d = flat[central], offset[central]
            jacobian[central, :, k] = (spec.evaluate(x + d) - spec.evaluate(x - d)) / (2 * h[central])

        if np.any(forward):
            x, d = flat[forward], offset[forward]
            jacobian[forward, :, k] = (-3 * spec.evaluate(x) + 4 * spec.evaluate(x + d)
                                       - spec.evaluate(x + 2 * d)) / (2 * h[forward])

        if np.any(backward):
            x, d = flat[backward], offset[backward]
            jacobian[backward, :, k] = (3 * spec.evaluate(x) - 4 * spec.evaluate(x - d)
                                        + spec.evaluate(x - 2 * d)) / (2 * h[backward])

    return jacobian.reshape(points.shape + (n,))


def compute_jacobian(spec: MappingSpec, points, scheme=None):
    scheme = Scheme.parse(scheme)

    if scheme.kind == Scheme.ANALYTIC:
        if not spec.has_analytic_jacobian:
            raise UnsupportedSchemeError(f"the {spec.family} family has no analytic Jacobian, use central_fd")
        return spec.jacobian(points)

    return finite_difference_jacobian(spec, points, scheme)


def sample_grid(spec: MappingSpec, domain: Domain, scheme=None, exclusion_radius=None) -> DifferentialField:
    """
    Differential packages at the centres of the quadrature cells of a domain.

    Cells whose centre lies closer than `exclusion_radius` (default two cells) to a singular point of the mapping are
    flagged as excluded. They stay in the field so that their count can be reported.
    """
    domain.require_grid_dimension()
    if domain.grid < MINIMUM_GRID:
        raise ValidationError(f"grid resolution must be at least {MINIMUM_GRID} per axis, got {domain.grid}",
                              "domain.grid")

    if spec.dimension is not None and spec.dimension != domain.dimension:
        raise ValidationError(f"{spec.family} mapping acts on ℝ^{spec.dimension}, domain lives in "
                              f"ℝ^{domain.dimension}", "map")

    if exclusion_radius is None:
        exclusion_radius = 2 * float(np.max(domain.spacing))

    points, weights, index = domain.quadrature()

    excluded = np.zeros(len(points), dtype=bool)
    singular = spec.singular_points(domain.dimension)
    for point in singular:
        excluded |= np.linalg.norm(points - point, axis=-1) < exclusion_radius

    if np.all(excluded):
        raise DegenerateDomainError(f"no quadrature cell of {domain!r} survives singular-point exclusion")

    jacobian = np.full((len(points), domain.dimension, domain.dimension), np.nan)
    jacobian[~excluded] = compute_jacobian(spec, points[~excluded], scheme)

    if np.any(excluded):
        logger.info("%s: excluded %d of %d cells within %.3g of singular points", spec, int(excluded.sum()),
                    len(points), exclusion_radius)

    return DifferentialField(domain, points, index, weights, excluded, jacobian, exclusion_radius)
