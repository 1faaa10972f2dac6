"""Second-quantized mode algebra, detectors, density matrices and decoherence models."""

from .errors import DomainError, InvariantViolation, ResourceError
from .fock import (FockState, Ket, ModeId, ModeSet, OpString, OpSum, Statistics, annihilate, apply,
                   anticommutator_check, create, create_ket, inner, number)

__version__ = "0.1.0"

__all__ = [
    "DomainError", "InvariantViolation", "ResourceError",
    "FockState", "Ket", "ModeId", "ModeSet", "OpString", "OpSum", "Statistics",
    "annihilate", "apply", "anticommutator_check", "create", "create_ket", "inner", "number",
    "__version__",
]
