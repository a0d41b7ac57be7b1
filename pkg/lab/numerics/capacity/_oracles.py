"""Closed-form capacities used as oracles for the solver."""

import math

from lab.exceptions import ValidationError
from lab.numerics import formulas


def analytic_ring_capacity(n: int, p, r, R) -> float:  # noqa: N803
    """
    p-capacity of the spherical condenser between the spheres of radii r < R in ℝⁿ.

    The radial p-harmonic profile gives, with β = (p − n)/(p − 1),

        ω_{n−1} |β|^{p−1} |R^β − r^β|^{1−p}     for p ≠ n
        ω_{n−1} ln(R/r)^{1−n}                   for p = n

    R may be infinite; the capacity of the ball of radius r in ℝⁿ is then positive only for p < n.
    """
    n, p, r, R = int(n), float(p), float(r), float(R)  # noqa: N806
    if n < 2:
        raise ValidationError(f"dimension must be at least 2, got {n}", "n")
    if not p > 1 or math.isinf(p):
        raise ValidationError(f"p must lie in (1, ∞), got {p}", "p")
    if not 0 < r < R:
        raise ValidationError(f"ring radii must satisfy 0 < r < R, got r={r}, R={R}", "r")

    area = formulas.unit_sphere_area(n)

    if p == n:
        if math.isinf(R):
            return 0.0
        return area * math.log(R / r) ** (1 - n)

    beta = (p - n) / (p - 1)
    if math.isinf(R):
        if beta > 0:
            return 0.0
        outer = 0.0
    else:
        outer = R ** beta

    return area * abs(beta) ** (p - 1) * abs(outer - r ** beta) ** (1 - p)


def slab_capacity(width, separation, p) -> float:
    """Capacity of two parallel plates of cross-section `width` at distance `separation`: width·separation^{1−p}."""
    width, separation, p = float(width), float(separation), float(p)
    if not width > 0 or not separation > 0:
        raise ValidationError("slab width and separation must be positive", "slab")
    if not p > 1:
        raise ValidationError(f"p must exceed 1, got {p}", "p")
    return width * separation ** (1 - p)
