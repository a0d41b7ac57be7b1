"""
The numerics sub-package holds everything that computes: mappings and their differentials, distortion
functionals, the capacity solver and the verification checks.

specific maintenance notes:
    - Grid arrays are indexed "ij" (axis k of an array is coordinate k). Sample arrays keep the row-major order of
     the grid they were taken from.
    - Non-finite results are represented by math.inf, never by a float overflow.
"""

TOLERANCES = {
    "operation": 10 ** -12,
    "adjugate": 10 ** -10,
    "closed_form": 10 ** -6,
    "inequality": 5 * 10 ** -2,
    "max_principle": 10 ** -9,
}
FAMILIES = {"identity", "linear", "radial_power", "planar_stretch", "grid_field", "composed"}
DOMAIN_KINDS = {"box", "ball", "annulus"}
GRID_DIMENSIONS = {2, 3}
