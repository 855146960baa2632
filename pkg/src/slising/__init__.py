"""Signed loops, Kac-Ward determinants and Ising observables on embedded graphs."""

from .errors import (
    CapExceededError,
    DomainError,
    EmptyDualError,
    GeometryError,
    IdentityViolation,
    InputError,
    InvalidGraphError,
    InvalidPathError,
    NumericalConsistencyError,
    SlisingError,
)
from .graph import Coordinate, EdgeKind, EdgeWeights, EmbeddedGraph, build_rectangle
from .kac_ward import BETA_CRITICAL, TorusSpec, build_transition_matrix, determinant_evaluation
from .loops import Loop, canonicalize, enumerate_loops, length_sums
from .observables import Backend, Boundary, IsingSpec

__all__ = [
    "BETA_CRITICAL",
    "Backend",
    "Boundary",
    "CapExceededError",
    "Coordinate",
    "DomainError",
    "EdgeKind",
    "EdgeWeights",
    "EmbeddedGraph",
    "EmptyDualError",
    "GeometryError",
    "IdentityViolation",
    "InputError",
    "InvalidGraphError",
    "InvalidPathError",
    "IsingSpec",
    "Loop",
    "NumericalConsistencyError",
    "SlisingError",
    "TorusSpec",
    "build_rectangle",
    "build_transition_matrix",
    "canonicalize",
    "determinant_evaluation",
    "enumerate_loops",
    "length_sums",
]
