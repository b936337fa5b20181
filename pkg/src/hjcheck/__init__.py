"""Coordinate-level checks of the Hamilton-Jacobi theorem on fibered
almost-Poisson manifolds."""

__version__ = "0.1.0"

from hjcheck.errors import DomainError, HJError, InputError, IntegrationError
from hjcheck.linalg import Subspace
from hjcheck.geometry import FiberedBivector, FiberedChart, ScalarField
from hjcheck.hj import HJVerdict, Section

__all__ = [
    "DomainError",
    "FiberedBivector",
    "FiberedChart",
    "HJError",
    "HJVerdict",
    "InputError",
    "IntegrationError",
    "ScalarField",
    "Section",
    "Subspace",
    "__version__",
]
