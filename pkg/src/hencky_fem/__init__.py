"""Finite-strain hyperelastic finite elements with energies in principal log stretches."""

from . import fem, materials, solver, tensorlab
from .errors import (
    ConfigError,
    DegenerateElementError,
    EigenConvergenceError,
    FitFailureError,
    HenckyFemError,
    InvalidDeformationError,
    InvertedElementError,
    LockingLimitError,
    NonConvergenceError,
    ParameterError,
    SingularTangentError,
)
from .materials import MaterialParams, PrincipalState

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DegenerateElementError",
    "EigenConvergenceError",
    "FitFailureError",
    "HenckyFemError",
    "InvalidDeformationError",
    "InvertedElementError",
    "LockingLimitError",
    "MaterialParams",
    "NonConvergenceError",
    "ParameterError",
    "PrincipalState",
    "SingularTangentError",
    "fem",
    "materials",
    "solver",
    "tensorlab",
]
