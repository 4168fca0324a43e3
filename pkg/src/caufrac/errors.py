"""Exceptions raised by caufrac.

Everything derives from `CaufracError`. Errors raised from inside pydantic
validators do not derive from `ValueError`, so pydantic lets them
propagate instead of wrapping them in a `ValidationError`.

`InputError` subclasses mean the user supplied something invalid and map to exit
code 1 on the command line. `SolverError` and `IOWriteError` map to exit code 2.
"""

from __future__ import annotations


class CaufracError(Exception):
    """Base class for all caufrac errors.

    Args:
        message: Human readable description
        location: Where the problem was found, e.g. a row key or a CSV line

    """

    exit_code = 2

    def __init__(self, message: str, location: str | None = None):
        super().__init__(message, location)
        self.message = message
        self.location = location

    def __str__(self) -> str:
        if self.location is None:
            return self.message
        return f"{self.message} (at {self.location})"

    def diagnostic(self, file: str | None = None) -> dict[str, str | None]:
        """Machine readable form of the error, as printed by ``caufrac validate``."""
        return {
            "error": self.__class__.__name__,
            "file": file,
            "location": self.location,
            "message": self.message,
        }


class InputError(CaufracError):
    exit_code = 1


class SolverError(CaufracError):
    pass


class IOWriteError(CaufracError):
    pass


# scenario


class CycleError(InputError):
    pass


class EmptyAlphabetError(InputError):
    pass


class UnknownEventError(InputError):
    pass


class DuplicateLabelError(InputError):
    pass


class NotLowersetError(InputError):
    pass


class NotBelowError(InputError):
    pass


class DomainMismatchError(InputError):
    pass


class SizeLimitError(InputError):
    pass


# empirical


class ShapeError(InputError):
    pass


class NormalizationError(InputError):
    pass


class NegativeEntryError(InputError):
    pass


class SchemaError(InputError):
    pass


# linguistics


class MissingCombinationError(InputError):
    pass


class DegenerateError(InputError):
    pass


class UnresolvedPhraseError(InputError):
    pass


class TypeMixError(InputError):
    pass


class CellMismatchError(InputError):
    pass


class MissingMetaError(InputError):
    pass


# stats


class ConstantInputError(InputError):
    pass


class SampleSizeError(InputError):
    pass


class ConfigError(InputError):
    pass


# solver


class InfeasibleError(SolverError):
    pass


class NumericalInstabilityError(SolverError):
    """Float-mode pivoting lost precision; rerun with rational arithmetic."""


class CrossCheckError(SolverError):
    pass
