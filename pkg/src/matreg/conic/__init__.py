"""Semidefinite programs with complex Hermitian data."""

from matreg.conic.model import Affine, ConicProgram, hermitian_basis
from matreg.conic.solver import (
    Backend,
    ConicSolution,
    MalformedProgram,
    RawResult,
    Settings,
    Status,
    feasibility,
    realify,
    register_backend,
    solve,
)

__all__ = [
    "Affine", "ConicProgram", "hermitian_basis", "Backend", "ConicSolution",
    "MalformedProgram", "RawResult", "Settings", "Status", "feasibility", "realify",
    "register_backend", "solve",
]
