import numpy as np

from lab.exceptions import ValidationError
from lab.numerics import DOMAIN_KINDS, GRID_DIMENSIONS
from lab.numerics import formulas

LINES = 16
SLIVER = 1e-12


class Domain:
    """
    The Domain class describes a bounded domain Ω ⊂ ℝⁿ together with the uniform grid laid over its bounding box.

    The grid has `grid` cells per axis. Quadrature cells are the cells that overlap the domain; each carries its
    volume fraction inside the domain so that curved boundaries do not degrade the midpoint rule.

    :param self.kind: one of box, ball, annulus
    :param self.dimension: n ≥ 2
    :param self.grid: cells per axis
    """

    __slots__ = "kind", "dimension", "grid", "lower", "upper", "center", "radius", "r_inner", "r_outer", "_fractions"

    def __init__(self, kind, dimension, grid, lower=None, upper=None, center=None, radius=None, r_inner=None,
                 r_outer=None):
        self.kind = kind
        self.dimension = int(dimension)
        self.grid = int(grid)
        self.lower = None if lower is None else np.asarray(lower, dtype=float)
        self.upper = None if upper is None else np.asarray(upper, dtype=float)
        self.center = None if center is None else np.asarray(center, dtype=float)
        self.radius = radius
        self.r_inner = r_inner
        self.r_outer = r_outer
        self._fractions = None

        self.sanity_check()

    @classmethod
    def box(cls, lower, upper, grid=32):
        return cls("box", len(lower), grid, lower=lower, upper=upper)

    @classmethod
    def ball(cls, center, radius, grid=32):
        return cls("ball", len(center), grid, center=center, radius=float(radius))

    @classmethod
    def annulus(cls, center, r_inner, r_outer, grid=32):
        return cls("annulus", len(center), grid, center=center, r_inner=float(r_inner), r_outer=float(r_outer))

    def __repr__(self):
        if self.kind == "box":
            return f"Domain(box {self.lower.tolist()}..{self.upper.tolist()}, grid={self.grid})"
        if self.kind == "ball":
            return f"Domain(ball center={self.center.tolist()} radius={self.radius}, grid={self.grid})"
        return (f"Domain(annulus center={self.center.tolist()} r=({self.r_inner}, {self.r_outer}), "
                f"grid={self.grid})")

    def sanity_check(self):
        if self.kind not in DOMAIN_KINDS:
            raise ValidationError(f"unknown domain kind {self.kind!r}, expected one of {sorted(DOMAIN_KINDS)}", "kind")

        if self.dimension < 2:
            raise ValidationError(f"dimension must be at least 2, got {self.dimension}", "n")

        if self.grid < 1:
            raise ValidationError(f"grid must be positive, got {self.grid}", "grid")

        numbers = [v for v in (self.lower, self.upper, self.center) if v is not None]
        numbers += [np.asarray(v) for v in (self.radius, self.r_inner, self.r_outer) if v is not None]
        if not all(np.all(np.isfinite(v)) for v in numbers):
            raise ValidationError("geometry parameters must be finite numbers")

        if self.kind == "box":
            if self.lower.shape != (self.dimension,) or self.upper.shape != (self.dimension,):
                raise ValidationError("box corners must both have n coordinates", "lower")
            if not np.all(self.upper > self.lower):
                raise ValidationError("box upper corner must exceed the lower corner on every axis", "upper")
        elif self.kind == "ball":
            if not self.radius > 0:
                raise ValidationError(f"radius must be positive, got {self.radius}", "radius")
        elif not 0 < self.r_inner < self.r_outer:
            raise ValidationError(f"annulus requires 0 < r_inner < r_outer, got ({self.r_inner}, {self.r_outer})",
                                  "r_inner")

    def with_grid(self, grid):
        """Return a copy of the domain with another resolution."""
        return Domain(self.kind, self.dimension, grid, self.lower, self.upper, self.center, self.radius,
                      self.r_inner, self.r_outer)

    def require_grid_dimension(self):
        if self.dimension not in GRID_DIMENSIONS:
            raise ValidationError(f"grid operations support n in {sorted(GRID_DIMENSIONS)}, got {self.dimension}",
                                  "n")

    @property
    def outer_radius(self):
        return self.radius if self.kind == "ball" else self.r_outer

    def bounds(self):
        """Corners of the bounding box the grid covers."""
        if self.kind == "box":
            return self.lower, self.upper

        extent = self.outer_radius
        return self.center - extent, self.center + extent

    @property
    def spacing(self):
        lower, upper = self.bounds()
        return (upper - lower) / self.grid

    @property
    def cell_volume(self):
        return float(np.prod(self.spacing))

    @property
    def shape(self):
        return (self.grid,) * self.dimension

    def axes(self, pad=0):
        """Cell-centre coordinates along every axis, optionally padded by `pad` ghost cells on each side."""
        lower, _ = self.bounds()
        h = self.spacing
        index = np.arange(-pad, self.grid + pad)
        return [lower[k] + (index + 0.5) * h[k] for k in range(self.dimension)]

    def cell_centers(self, pad=0):
        mesh = np.meshgrid(*self.axes(pad), indexing="ij")
        return np.stack(mesh, axis=-1)

    def cell_index(self, points):
        """Multi-index of the grid cell containing each point, and a mask of points inside the grid."""
        lower, _ = self.bounds()
        points = np.asarray(points, dtype=float)
        with np.errstate(invalid="ignore"):
            raw = np.floor((points - lower) / self.spacing)
        inside = np.all(np.isfinite(raw), axis=-1) & np.all((raw >= 0) & (raw < self.grid), axis=-1)
        index = np.where(inside[..., None], raw, 0).astype(int)
        return index, inside

    def contains(self, points, tolerance=1e-12):
        """Closed-domain membership test."""
        points = np.asarray(points, dtype=float)

        if self.kind == "box":
            slack = tolerance * (self.upper - self.lower)
            return np.all((points >= self.lower - slack) & (points <= self.upper + slack), axis=-1)

        distance = np.linalg.norm(points - self.center, axis=-1)
        outer = self.outer_radius * (1 + tolerance)

        if self.kind == "ball":
            return distance <= outer

        return (distance >= self.r_inner * (1 - tolerance)) & (distance <= outer)

    def measure(self):
        """Exact Lebesgue measure of the continuum domain."""
        if self.kind == "box":
            return float(np.prod(self.upper - self.lower))

        volume = formulas.unit_ball_volume(self.dimension)
        if self.kind == "ball":
            return volume * self.radius ** self.dimension

        return volume * (self.r_outer ** self.dimension - self.r_inner ** self.dimension)

    def volume_fractions(self):
        """Fraction of every grid cell lying inside the domain (cached)."""
        if self._fractions is None:
            self.require_grid_dimension()

            if self.kind == "box":
                fractions = np.ones(self.shape)
            elif self.kind == "ball":
                fractions = self._ball_fractions(self.radius)
            else:
                fractions = np.clip(self._ball_fractions(self.r_outer) - self._ball_fractions(self.r_inner), 0.0, 1.0)

            # rounding leftovers of the exact areas, not cells that touch the domain
            self._fractions = np.where(fractions < SLIVER, 0.0, fractions)

        return self._fractions

    def _ball_fractions(self, radius):
        # Cross-sections in axes (0, 1) are exact disc areas; further axes use a midpoint rule with LINES lines each,
        # whose spacing shrinks with the cell.
        centers = self.cell_centers() - self.center
        h = self.spacing
        distance = np.linalg.norm(centers, axis=-1)
        half_diagonal = 0.5 * np.linalg.norm(h)

        fractions = (distance + half_diagonal <= radius).astype(float)
        boundary = np.abs(distance - radius) < half_diagonal
        if not np.any(boundary):
            return fractions

        cut = centers[boundary]
        low = cut[:, None, :2] - h[:2] / 2
        high = cut[:, None, :2] + h[:2] / 2

        if self.dimension == 2:
            slice_radius = np.full((len(cut), 1), radius)
        else:
            offsets = (np.arange(LINES) + 0.5) / LINES - 0.5
            transverse = np.stack(np.meshgrid(*[offsets * h[k] for k in range(2, self.dimension)], indexing="ij"),
                                  axis=-1).reshape(-1, self.dimension - 2)
            rho_squared = np.sum((cut[:, None, 2:] + transverse[None, :, :]) ** 2, axis=-1)
            slice_radius = np.sqrt(np.clip(radius ** 2 - rho_squared, 0.0, None))

        area = formulas.disc_rectangle_area(low, high, slice_radius)
        fractions[boundary] = np.clip(np.mean(area, axis=1) / (h[0] * h[1]), 0.0, 1.0)
        return fractions

    def quadrature(self):
        """
        Midpoint-rule quadrature of the domain.

        :return: (points, weights, index) for every cell with positive volume fraction, in row-major grid order.
        """
        fractions = self.volume_fractions()
        inside = fractions > 0
        index = np.argwhere(inside)
        points = self.cell_centers()[inside]
        weights = fractions[inside] * self.cell_volume
        return points, weights, index

    def to_config(self):
        config = {"kind": self.kind, "n": self.dimension, "grid": self.grid}
        if self.kind == "box":
            config.update(lower=self.lower.tolist(), upper=self.upper.tolist())
        elif self.kind == "ball":
            config.update(center=self.center.tolist(), radius=self.radius)
        else:
            config.update(center=self.center.tolist(), r_inner=self.r_inner, r_outer=self.r_outer)
        return config

    @classmethod
    def from_config(cls, config: dict, field: str = "domain"):
        if not isinstance(config, dict):
            raise ValidationError("domain description must be an object", field)

        kind = config.get("kind")
        grid = config.get("grid", 32)

        geometry = {"box": {"lower", "upper"}, "ball": {"center", "radius"},
                    "annulus": {"center", "r_inner", "r_outer"}}
        unknown = set(config) - geometry.get(kind, set()) - {"kind", "n", "grid"}
        if kind in geometry and unknown:
            raise ValidationError(f"unknown keys {sorted(unknown)} for domain kind {kind}", field)

        try:
            if kind == "box":
                domain = cls.box(config["lower"], config["upper"], grid)
            elif kind == "ball":
                domain = cls.ball(config["center"], config["radius"], grid)
            elif kind == "annulus":
                domain = cls.annulus(config["center"], config["r_inner"], config["r_outer"], grid)
            else:
                raise ValidationError(f"unknown kind {kind!r}, expected one of {sorted(DOMAIN_KINDS)}",
                                      f"{field}.kind")
        except KeyError as e:
            raise ValidationError(f"missing required key {e.args[0]!r}", field) from e
        except ValidationError as e:
            if e.field and not e.field.startswith(field):
                raise ValidationError(str(e).split(": ", 1)[-1], f"{field}.{e.field}") from e
            raise

        if "n" in config and int(config["n"]) != domain.dimension:
            raise ValidationError(f"n={config['n']} does not match the geometry dimension {domain.dimension}",
                                  f"{field}.n")

        return domain
