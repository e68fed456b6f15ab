"""
Exact rational parsing and canonical formatting.

Every number in the primary computation path is a Fraction. Files carry
rationals as JSON integers, "p/q" strings, or finite decimal strings.
"""

import re
from decimal import Decimal, InvalidOperation
from fractions import Fraction
from typing import Sequence, Tuple, Union

from .errors import FormatError

RationalLike = Union[int, str, Fraction]

_FRACTION_RE = re.compile(r"^\s*(-?\d+)\s*/\s*(\d+)\s*$")
_INTEGER_RE = re.compile(r"^\s*-?\d+\s*$")

ZERO = Fraction(0)
ONE = Fraction(1)


def parse_rational(value: RationalLike) -> Fraction:
    """Parse an integer, a "p/q" string or a finite decimal string exactly."""
    if isinstance(value, bool):
        raise FormatError(f"booleans are not rationals: {value!r}")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        raise FormatError(f"binary floats are not accepted, quote the value: {value!r}")
    if not isinstance(value, str):
        raise FormatError(f"not a rational: {value!r}")

    match = _FRACTION_RE.match(value)
    if match:
        denominator = int(match.group(2))
        if denominator == 0:
            raise FormatError(f"zero denominator in {value!r}")
        return Fraction(int(match.group(1)), denominator)
    if _INTEGER_RE.match(value):
        return Fraction(int(value))
    try:
        decimal = Decimal(value.strip())
    except InvalidOperation as e:
        raise FormatError(f"not a rational: {value!r}") from e
    if not decimal.is_finite():
        raise FormatError(f"not a finite rational: {value!r}")
    return Fraction(decimal)


def format_rational(value: Fraction) -> str:
    """Canonical text: "p/q" in lowest terms with q > 0, or "p" when q == 1."""
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def format_decimal(value: Fraction, digits: int = 12) -> str:
    """Decimal approximation to `digits` significant digits, for plotting only."""
    return f"{float(value):.{digits}g}"


def format_tuple(values: Sequence[Fraction]) -> str:
    return "(" + ", ".join(format_rational(v) for v in values) + ")"


def as_fractions(values: Sequence[RationalLike]) -> Tuple[Fraction, ...]:
    return tuple(parse_rational(v) for v in values)
