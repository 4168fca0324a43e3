"""Exact and floating point probability arithmetic.

A model is either fully rational (`fractions.Fraction` entries, exact comparisons)
or fully float (binary floats, comparisons within a tolerance). The mode is picked
when the model is loaded and carried by everything computed from it.
"""

from __future__ import annotations

from collections.abc import Iterable
from enum import Enum
from fractions import Fraction

from caufrac.errors import SchemaError

Number = Fraction | float

DEFAULT_TOLERANCE = 1e-9


class Arithmetic(str, Enum):
    rational = "rational"
    floating = "float"

    def convert(self, value: Number | int) -> Number:
        """Express a value in this arithmetic mode."""
        match self:
            case Arithmetic.rational:
                return Fraction(value)
            case Arithmetic.floating:
                return float(value)

    @property
    def zero(self) -> Number:
        return self.convert(0)

    @property
    def one(self) -> Number:
        return self.convert(1)

    def tolerance(self, tolerance: float = DEFAULT_TOLERANCE) -> Number:
        """Comparison slack: zero for exact arithmetic."""
        return Fraction(0) if self is Arithmetic.rational else tolerance


def mode_of(values: Iterable[Number]) -> Arithmetic:
    """Float as soon as any value is a float, rational otherwise."""
    if any(isinstance(value, float) for value in values):
        return Arithmetic.floating
    return Arithmetic.rational


def parse_probability(value: object, location: str | None = None) -> Number:
    """Parse a probability as it appears in a document.

    Integers and strings ("6/13", "1", "0.25") are read as exact rationals, JSON
    floats stay floats.

    >>> parse_probability("6/13")
    Fraction(6, 13)
    >>> parse_probability(0.5)
    0.5
    """
    match value:
        case bool():
            raise SchemaError(f"Expected a probability, got {value!r}", location)
        case int():
            return Fraction(value)
        case Fraction():
            return value
        case float():
            return value
        case str():
            try:
                return Fraction(value.strip())
            except (ValueError, ZeroDivisionError):
                raise SchemaError(
                    f"Could not parse {value!r} as a probability", location
                ) from None
        case _:
            raise SchemaError(f"Expected a probability, got {value!r}", location)


def format_number(value: Number) -> str | float:
    """Document form of a number: "p/q" strings for rationals, floats unchanged.

    >>> format_number(Fraction(13, 42))
    '13/42'
    >>> format_number(Fraction(1))
    '1'
    """
    if isinstance(value, Fraction):
        return str(value)
    return value


def close(a: Number, b: Number, tolerance: Number) -> bool:
    return abs(a - b) <= tolerance
