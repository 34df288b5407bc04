"""Numerical laboratory for the Dirichlet Ornstein-Uhlenbeck heat kernel.

Constructs the kernel on bounded convex domains by two independent routes
(dyadic Trotter composition of masked Mehler kernels, and spectral
synthesis from a Dirichlet eigensolve) and verifies, at desk scale,
log-concavity of the weighted kernel, its preservation by the flow,
log-concavity of the first eigenfunction, and the Brunn-Minkowski
inequality for the first eigenvalue.
"""

from .geometry import AxisBox, ConvexPolygon, Interval
from .grid import Grid, GridFunction, build_grid, gaussian_weights, integrate

__all__ = [
    "AxisBox",
    "ConvexPolygon",
    "Interval",
    "Grid",
    "GridFunction",
    "build_grid",
    "gaussian_weights",
    "integrate",
]

__version__ = "0.1.0"
