"""
Variational p-capacity of condensers on grid domains.
"""

from lab.numerics.capacity._condenser import (FREE, OUTSIDE, PLATE0, PLATE1, Condenser, bracket_condensers,
                                              capacity_of_compact, image_condenser, preimage_membership)
from lab.numerics.capacity._oracles import analytic_ring_capacity, slab_capacity
from lab.numerics.capacity._plates import PLATE_KINDS, Plate
from lab.numerics.capacity._solver import (P_RANGE, CapacityResult, SolverConfig, bracket_capacity,
                                           solve_capacity)

__all__ = [
    "Condenser", "Plate", "PLATE_KINDS", "CapacityResult", "SolverConfig", "P_RANGE", "solve_capacity",
    "bracket_capacity", "bracket_condensers", "capacity_of_compact", "image_condenser", "analytic_ring_capacity",
    "slab_capacity", "preimage_membership", "OUTSIDE", "FREE", "PLATE0", "PLATE1",
]
