"""Exception hierarchy shared by the library and the command-line runner."""

from typing import Any


class SlisingError(Exception):
    """Base class for every error raised by slising."""

    exit_code = 1


class InputError(SlisingError):
    """Invalid user-supplied data (edge ids, subsets, vertices, JSON)."""

    exit_code = 2


class InvalidGraphError(InputError):
    """Graph violates an embedding invariant."""


class InvalidPathError(InputError):
    """A vertex sequence is not a closed non-backtracking path."""


class EmptyDualError(InputError):
    """Weak dual requested for a rectangle of width or height 1."""


class GeometryError(SlisingError):
    """Angle bookkeeping produced an impossible value."""

    exit_code = 2


class DomainError(SlisingError):
    """Computation requested outside the regime where it is certified."""

    exit_code = 2


class NumericalConsistencyError(SlisingError):
    """A determinant that must be real and positive was not."""

    exit_code = 1


class CapExceededError(SlisingError):
    """An enumeration would exceed its configured size cap."""

    exit_code = 3

    def __init__(self, what: str, size: int, cap: int, env_var: str | None = None):
        hint = f" (raise {env_var} to override)" if env_var else ""
        super().__init__(f"{what} is {size}, above the cap of {cap}{hint}")
        self.what = what
        self.size = size
        self.cap = cap


class IdentityViolation(SlisingError):
    """A verified identity failed; ``counterexample`` holds the offending data."""

    exit_code = 1

    def __init__(self, message: str, counterexample: Any = None):
        super().__init__(message)
        self.counterexample = counterexample
