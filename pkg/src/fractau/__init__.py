"""Fractional recursive spectral Tau solver for third-kind Volterra integral equations."""

from .cordial import ConstraintError, DerivedParams, ProblemSpec, RationalExp, check_solvability, derive_params
from .numerics import DomainError, PrecisionConfig, SingularSystemError
from .tau import SolveOptions, TauSolution, UnsolvableProblemError, solve

__all__ = [
    "ConstraintError",
    "DerivedParams",
    "DomainError",
    "PrecisionConfig",
    "ProblemSpec",
    "RationalExp",
    "SingularSystemError",
    "SolveOptions",
    "TauSolution",
    "UnsolvableProblemError",
    "check_solvability",
    "derive_params",
    "solve",
]
__version__ = "0.1.0"
