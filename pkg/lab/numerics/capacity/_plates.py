import numpy as np

from lab.exceptions import ValidationError
from lab.numerics.mapping import Domain, MappingSpec

PLATE_KINDS = {"ball", "inner_ring", "outer_ring", "slab", "cells"}


class Plate:
    """
    A closed plate of a condenser, either a sphere-type level set or an explicit set of grid cells.

    Level-set plates are {x : g(x) ≤ 0} with g(x) = sign·(|P(x) − center| − radius), where P is an optional pullback
    mapping (the inverse of a mapping the plate was pushed through). The solver uses g to place the plate boundary
    between cell centres. Mask plates are unions of closed grid cells.

    :param self.kind: the builder that made the plate
    :param self.mask: boolean array over the domain grid, or None for level-set plates
    """

    __slots__ = "kind", "mask", "center", "radius", "sign", "pullback"

    def __init__(self, kind, mask=None, center=None, radius=None, sign=1.0, pullback: MappingSpec | None = None):
        self.kind = kind
        self.mask = None if mask is None else np.asarray(mask, dtype=bool)
        self.center = None if center is None else np.asarray(center, dtype=float)
        self.radius = None if radius is None else float(radius)
        self.sign = float(sign)
        self.pullback = pullback

        if self.mask is None and (self.center is None or self.radius is None):
            raise ValidationError("a plate needs either a cell mask or a center and radius", "plate")
        if self.radius is not None and not self.radius > 0:
            raise ValidationError(f"plate radius must be positive, got {self.radius}", "plate.radius")

    def __repr__(self):
        if self.is_level_set:
            pulled = f" pulled back by {self.pullback!r}" if self.pullback is not None else ""
            return f"Plate({self.kind}, center={self.center.tolist()}, radius={self.radius}{pulled})"
        return f"Plate({self.kind}, {int(self.mask.sum())} cells)"

    @property
    def is_level_set(self):
        return self.mask is None

    def level_set(self, points):
        """g at the given points; negative inside the plate."""
        points = np.asarray(points, dtype=float)
        if self.pullback is not None:
            points = self.pullback.evaluate(points)
        return self.sign * (np.linalg.norm(points - self.center, axis=-1) - self.radius)

    def rasterize(self, domain: Domain, pad=1):
        """Plate membership and level-set values on the padded grid. Level-set values are None for mask plates."""
        if self.is_level_set:
            values = self.level_set(domain.cell_centers(pad))
            return values <= 0, values

        if self.mask.shape != domain.shape:
            raise ValidationError(f"plate mask has shape {self.mask.shape}, grid has shape {domain.shape}", "plate")
        return np.pad(self.mask, pad, constant_values=False), None

    def with_offset(self, offset):
        """Level-set plate grown (offset > 0) or shrunk (offset < 0) by a distance in the pulled-back frame."""
        return Plate(self.kind, center=self.center, radius=self.radius + self.sign * offset, sign=self.sign,
                     pullback=self.pullback)

    def pulled_back(self, inverse: MappingSpec):
        """The image plate under a mapping whose inverse is given, for level-set plates."""
        if self.pullback is not None:
            raise ValidationError("a plate can only be pushed through one mapping", "plate")
        return Plate(self.kind, center=self.center, radius=self.radius, sign=self.sign, pullback=inverse)

    def to_config(self):
        if self.kind in ("inner_ring", "outer_ring"):
            return {"kind": self.kind}
        if self.is_level_set:
            return {"kind": "ball", "center": self.center.tolist(), "radius": self.radius}
        return {"kind": "cells", "indices": np.argwhere(self.mask).tolist()}

    # Builders

    @classmethod
    def ball(cls, center, radius):
        return cls("ball", center=center, radius=radius)

    @classmethod
    def inner_ring(cls, domain: Domain):
        """The hole of an annulus, {|x − c| ≤ r_inner}."""
        if domain.kind != "annulus":
            raise ValidationError(f"inner_ring needs an annulus domain, got {domain.kind}", "condenser")
        return cls("inner_ring", center=domain.center, radius=domain.r_inner)

    @classmethod
    def outer_ring(cls, domain: Domain):
        """
        The outer boundary of a domain: {|x − c| ≥ R} for balls and annuli, the outermost cell layer for boxes.
        """
        if domain.kind == "box":
            mask = np.zeros(domain.shape, dtype=bool)
            for k in range(domain.dimension):
                mask[(slice(None),) * k + (0,)] = True
                mask[(slice(None),) * k + (-1,)] = True
            return cls("outer_ring", mask=mask)

        return cls("outer_ring", center=domain.center, radius=domain.outer_radius, sign=-1.0)

    @classmethod
    def slab(cls, domain: Domain, axis=0, side="low", cells=1):
        """The first or last `cells` layers of grid cells across an axis."""
        if not 0 <= axis < domain.dimension:
            raise ValidationError(f"slab axis must be in [0, {domain.dimension}), got {axis}", "condenser.axis")
        if side not in ("low", "high"):
            raise ValidationError(f"slab side must be low or high, got {side!r}", "condenser.side")
        if not 1 <= cells < domain.grid:
            raise ValidationError(f"slab thickness must be in [1, {domain.grid}), got {cells}", "condenser.cells")

        mask = np.zeros(domain.shape, dtype=bool)
        layers = slice(0, cells) if side == "low" else slice(domain.grid - cells, domain.grid)
        mask[(slice(None),) * axis + (layers,)] = True
        return cls("slab", mask=mask)

    @classmethod
    def from_cells(cls, domain: Domain, indices):
        indices = np.asarray(indices, dtype=int).reshape(-1, domain.dimension)
        if np.any(indices < 0) or np.any(indices >= domain.grid):
            raise ValidationError("cell indices outside the grid", "condenser.indices")

        mask = np.zeros(domain.shape, dtype=bool)
        mask[tuple(indices.T)] = True
        return cls("cells", mask=mask)

    @classmethod
    def from_config(cls, config: dict, domain: Domain, field: str = "plate"):
        if not isinstance(config, dict):
            raise ValidationError("plate description must be an object", field)

        kind = config.get("kind")
        allowed = {
            "ball": {"center", "radius"},
            "inner_ring": set(),
            "outer_ring": set(),
            "slab": {"axis", "side", "cells"},
            "cells": {"indices"},
        }
        if kind not in PLATE_KINDS:
            raise ValidationError(f"unknown plate kind {kind!r}, expected one of {sorted(PLATE_KINDS)}",
                                  f"{field}.kind")

        unknown = set(config) - allowed[kind] - {"kind"}
        if unknown:
            raise ValidationError(f"unknown keys {sorted(unknown)} for plate kind {kind}", field)

        try:
            builders = {
                "ball": lambda: cls.ball(config["center"], config["radius"]),
                "inner_ring": lambda: cls.inner_ring(domain),
                "outer_ring": lambda: cls.outer_ring(domain),
                "slab": lambda: cls.slab(domain, config.get("axis", 0), config.get("side", "low"),
                                         config.get("cells", 1)),
                "cells": lambda: cls.from_cells(domain, config["indices"]),
            }
            return builders[kind]()
        except KeyError as e:
            raise ValidationError(f"missing required key {e.args[0]!r}", field) from e
