"""Numerical Marstrand projection experiments: fractal sets, projection
families on the plane and the Poincare disk, transversality fits and
end-to-end dimension and length sweeps."""

from .errors import (
    DegenerateFitError,
    DegenerateInputError,
    DomainError,
    InfiniteEnergyError,
    MarstrandError,
    PreconditionError,
    ResolutionError,
    SizeError,
    SolverError,
)

__version__ = "0.1.0"

__all__ = [
    "DegenerateFitError",
    "DegenerateInputError",
    "DomainError",
    "InfiniteEnergyError",
    "MarstrandError",
    "PreconditionError",
    "ResolutionError",
    "SizeError",
    "SolverError",
    "__version__",
]
