"""
Numerical verification of distortion identities and inequalities.
"""

from lab.numerics.verify._checks import (adjugate_identity_check, ball_functional_check, capacity_distortion_check,
                                         capacity_smallness_check, change_of_variables_residual, energy_bounds_check,
                                         identity_tolerance, operator_norm_lower_bound, transfer_identity_residual)
from lab.numerics.verify._test_functions import (FAMILY_KINDS, TestFunction, TestFunctionFamily, default_families,
                                                 family_members)
from lab.numerics.verify._verdict import (FAILED, IDENTITY, INEQUALITY, PASSED, VACUOUS, VerificationVerdict,
                                          exit_status)

__all__ = [
    "TestFunction", "TestFunctionFamily", "FAMILY_KINDS", "default_families", "family_members",
    "VerificationVerdict", "exit_status", "IDENTITY", "INEQUALITY", "PASSED", "FAILED", "VACUOUS",
    "transfer_identity_residual", "change_of_variables_residual", "capacity_distortion_check",
    "capacity_smallness_check", "energy_bounds_check", "operator_norm_lower_bound", "ball_functional_check",
    "adjugate_identity_check", "identity_tolerance",
]
