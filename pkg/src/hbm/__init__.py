"""Spectral and variational geometry of origin-symmetric convex bodies.

Bodies are described by support functions on a quadrature grid of the
sphere.  The package provides the Hilbert-Brunn-Minkowski operator -Delta_K
and its even spectrum, mixed volumes, the S_2-isotropic position, the
good-direction inequality, and a variational solver for the even
L^p-Minkowski problem.
"""

__version__ = "0.1.0"

from .body import Body, Discretization, apply_linear, geometric_distance, make_standard, volume
from .spectral import lambda1, lambda1_even, quotient_C
from .affine import isotropize
from .directions import find_good_direction
from .minkowski import TargetMeasure, solve

__all__ = [
    "Body",
    "Discretization",
    "apply_linear",
    "geometric_distance",
    "make_standard",
    "volume",
    "lambda1",
    "lambda1_even",
    "quotient_C",
    "isotropize",
    "find_good_direction",
    "TargetMeasure",
    "solve",
]
