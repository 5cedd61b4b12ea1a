"""Comoving-frame numerics for particles confined by isotropically moving walls."""

from qlab.errors import ConvergenceError, DomainError, PhaseUnwrapError
from qlab.units import NATURAL, Units

__version__ = "0.1.0"

__all__ = [
    "ConvergenceError",
    "DomainError",
    "NATURAL",
    "PhaseUnwrapError",
    "Units",
]
