import itertools
import logging
import warnings

import numpy as np
from scipy import ndimage

from lab.exceptions import ResolutionError, ValidationError
from lab.numerics.capacity._plates import Plate
from lab.numerics.mapping import Domain, MappingSpec, inverse_spec

logger = logging.getLogger(__name__)

OUTSIDE, FREE, PLATE0, PLATE1 = 0, 1, 2, 3


class Condenser:
    """
    A condenser (F₀, F₁) in a grid domain together with the exponent p.

    Cells are classified on the grid padded by one ghost layer: plate cells carry the fixed values 0 (F₀) and 1 (F₁),
    free cells are the remaining cells of the domain, everything else is outside. The free region defaults to the cells
    whose centre lies in the domain; image condensers pass an explicit region.

    :param self.region: optional boolean array over the domain grid replacing the domain membership test
    """

    __slots__ = "domain", "F0", "F1", "p", "region"

    def __init__(self, domain: Domain, F0: Plate, F1: Plate, p, region=None):  # noqa: N803
        self.domain = domain
        self.F0 = F0
        self.F1 = F1
        self.p = float(p)
        self.region = None if region is None else np.asarray(region, dtype=bool)

        self.sanity_check()

    def __repr__(self):
        return f"Condenser(p={self.p}, F0={self.F0!r}, F1={self.F1!r}, {self.domain!r})"

    def with_exponent(self, p):
        return Condenser(self.domain, self.F0, self.F1, p, self.region)

    def sanity_check(self):
        self.domain.require_grid_dimension()

        if not self.p > 1 or not np.isfinite(self.p):
            raise ValidationError(f"capacity exponent must lie in (1, ∞), got {self.p}", "condenser.p")

        if self.region is not None and self.region.shape != self.domain.shape:
            raise ValidationError(f"region has shape {self.region.shape}, grid has shape {self.domain.shape}",
                                  "condenser.region")

        for name, plate in (("F0", self.F0), ("F1", self.F1)):
            if plate.center is not None and plate.center.shape != (self.domain.dimension,):
                raise ValidationError(f"plate center must have {self.domain.dimension} coordinates",
                                      f"condenser.{name}.center")

        plate0, plate1 = self.plate_masks()
        inner = (slice(1, -1),) * self.domain.dimension

        if not np.any(plate0[inner]):
            raise ValidationError("F0 has no cell on the grid", "condenser.F0")
        if not np.any(plate1[inner]):
            raise ValidationError("F1 has no cell on the grid", "condenser.F1")

        if np.any(plate0 & plate1):
            raise ValidationError("plates F0 and F1 overlap", "condenser")
        if np.any(ndimage.binary_dilation(plate0) & plate1):
            raise ValidationError("plates F0 and F1 touch; separate them by at least one cell", "condenser")

        for name, mask in (("F0", plate0), ("F1", plate1)):
            _, components = ndimage.label(mask)
            if components > 1:
                warnings.warn(f"plate {name} has {components} connected components", stacklevel=3)

    def plate_masks(self, pad=1):
        plate0, _ = self.F0.rasterize(self.domain, pad)
        plate1, _ = self.F1.rasterize(self.domain, pad)
        return plate0, plate1

    def free_region(self, pad=1):
        if self.region is not None:
            return np.pad(self.region, pad, constant_values=False)
        return self.domain.contains(self.domain.cell_centers(pad))

    def cell_kinds(self, pad=1):
        """Integer cell classes on the padded grid: OUTSIDE, FREE, PLATE0 or PLATE1."""
        plate0, plate1 = self.plate_masks(pad)
        kinds = np.where(self.free_region(pad), FREE, OUTSIDE)
        kinds[plate0] = PLATE0
        kinds[plate1] = PLATE1
        return kinds

    def to_config(self):
        return {"p": self.p, "F0": self.F0.to_config(), "F1": self.F1.to_config()}

    @classmethod
    def from_config(cls, config: dict, domain: Domain, field: str = "condenser"):
        if not isinstance(config, dict):
            raise ValidationError("condenser description must be an object", field)

        unknown = set(config) - {"p", "F0", "F1"}
        if unknown:
            raise ValidationError(f"unknown keys {sorted(unknown)}", field)

        for key in ("p", "F0", "F1"):
            if key not in config:
                raise ValidationError(f"missing required key {key!r}", field)

        F0 = Plate.from_config(config["F0"], domain, f"{field}.F0")  # noqa: N806
        F1 = Plate.from_config(config["F1"], domain, f"{field}.F1")  # noqa: N806
        return cls(domain, F0, F1, config["p"])


def capacity_of_compact(domain: Domain, plate: Plate, p) -> Condenser:
    """The condenser (∂Ω, F) whose capacity is the capacity of the compact set F relative to Ω."""
    return Condenser(domain, Plate.outer_ring(domain), plate, p)


def preimage_membership(mask, source: Domain, preimages):
    """Points whose preimage lies in one of the closed grid cells of a source mask."""
    preimages = np.asarray(preimages, dtype=float)
    lower, _ = source.bounds()
    offset = (preimages - lower) / source.spacing

    # a preimage on a cell face, edge or vertex belongs to every cell sharing it
    with np.errstate(invalid="ignore"):
        nearest = np.rint(offset)
        on_face = np.abs(offset - nearest) < 1e-9
        raw = np.where(on_face, nearest, np.floor(offset))
    finite = np.all(np.isfinite(raw), axis=-1)
    raw = np.where(finite[..., None], raw, 0).astype(int)

    member = np.zeros(preimages.shape[:-1], dtype=bool)
    for corner in itertools.product((0, 1), repeat=source.dimension):
        shift = np.array(corner)
        index = raw - shift
        valid = finite & np.all(on_face | (shift == 0), axis=-1)
        valid &= np.all((index >= 0) & (index < source.grid), axis=-1)
        member[valid] |= mask[tuple(index[valid].T)]

    return member


def image_condenser(condenser: Condenser, spec: MappingSpec, image_domain: Domain) -> Condenser:
    """
    The condenser (φ(F₀), φ(F₁)) in the image domain.

    Level-set plates are pulled back through φ⁻¹. An image cell belongs to a mask plate when the preimage of its centre
    lies in one of the closed source plate cells; if that leaves an image plate empty the source plate is dilated by one
    cell first. The free region is the set of image cells whose centre pulls back into the source domain.
    """
    inverse = inverse_spec(spec)
    source = condenser.domain

    centers = image_domain.cell_centers()
    preimages = inverse.evaluate(centers)
    region = image_domain.contains(centers) & source.contains(preimages, tolerance=1e-9)

    plates = []
    for name, plate in (("F0", condenser.F0), ("F1", condenser.F1)):
        if plate.is_level_set:
            plates.append(plate.pulled_back(inverse))
            continue

        mask = preimage_membership(plate.mask, source, preimages)
        if not np.any(mask):
            logger.info("image of %s misses every cell centre, dilating the source plate", name)
            mask = preimage_membership(ndimage.binary_dilation(plate.mask), source, preimages)
        if not np.any(mask):
            raise ResolutionError(f"image of plate {name} contains no cell of {image_domain!r}; use a finer grid")
        plates.append(Plate(plate.kind, mask=mask))

    try:
        return Condenser(image_domain, plates[0], plates[1], condenser.p, region)
    except ValidationError as e:
        if "overlap" in str(e) or "touch" in str(e):
            raise ResolutionError(f"image plates {str(e).split(': ', 1)[-1]} after rasterization; "
                                  "use a finer grid") from e
        raise


def _reshaped(plate: Plate, domain: Domain, grow: bool):
    if plate.is_level_set:
        step = float(np.max(domain.spacing))
        return plate.with_offset(step if grow else -step)

    mask = ndimage.binary_dilation(plate.mask) if grow else ndimage.binary_erosion(plate.mask, border_value=1)
    if not np.any(mask):
        logger.info("eroding %r leaves no cell, keeping it as is", plate)
        return plate
    return Plate(plate.kind, mask=mask)


def bracket_condensers(condenser: Condenser):
    """
    Condensers with both plates eroded and both plates dilated by one cell.

    Their capacities bracket the rasterization error of the plates: the eroded pair has the smaller capacity.
    """
    domain = condenser.domain
    eroded = Condenser(domain, _reshaped(condenser.F0, domain, False), _reshaped(condenser.F1, domain, False),
                       condenser.p, condenser.region)
    try:
        dilated = Condenser(domain, _reshaped(condenser.F0, domain, True), _reshaped(condenser.F1, domain, True),
                            condenser.p, condenser.region)
    except ValidationError as e:
        raise ResolutionError(f"dilated plates no longer fit the grid ({e}); use a finer grid") from e
    return eroded, dilated
