"""
Sobolev capacity lab.

Numerical toolkit for distortion functionals of Sobolev mappings, Ball-class
membership, variational p-capacities and the inequalities that tie them together.
"""

__version__ = "1.0.0"
