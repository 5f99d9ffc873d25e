"""Numerical laboratory for mKdV multi-solitons and their stability.

Modules
-------
grid
    Periodic grid and Fourier spectral calculus.
solitons
    Exact 1-, 2- and N-soliton solutions.
hierarchy
    Conserved quantities, their gradients and the action functional.
linops
    Linearized operators, factorization identities and inertia.
hessian
    The finite-dimensional Hessian ``D`` and its signature.
evolve
    Time integration, conservation audits and stability experiments.
cli
    Command-line front end.
"""

from .errors import (
    BlowUpError,
    ConvergenceError,
    DomainError,
    InertiaAmbiguityError,
    MeanToleranceError,
    MkdvLabError,
    NumericalHealthError,
    ValidationError,
)
from .grid import Grid

__version__ = "0.1.0"

__all__ = [
    "Grid",
    "MkdvLabError",
    "ValidationError",
    "DomainError",
    "MeanToleranceError",
    "NumericalHealthError",
    "InertiaAmbiguityError",
    "ConvergenceError",
    "BlowUpError",
    "__version__",
]
