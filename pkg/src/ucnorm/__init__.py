"""Numerical toolkit for universal commutative operator algebras over
finite-dimensional operator spaces."""

from .errors import (
    ArityError,
    CapacityError,
    CommutativityError,
    DimensionError,
    DomainError,
    DuplicateNodeError,
    InfeasibleError,
    PositivityError,
    UCNormError,
    UnsupportedError,
)

__version__ = "0.1.0"

__all__ = [
    "ArityError",
    "CapacityError",
    "CommutativityError",
    "DimensionError",
    "DomainError",
    "DuplicateNodeError",
    "InfeasibleError",
    "PositivityError",
    "UCNormError",
    "UnsupportedError",
]
