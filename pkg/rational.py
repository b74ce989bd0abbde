"""
Exact rational numbers: the only numeric type used for clocks, delays and costs
"""

from __future__ import annotations

import re

try:
    from quicktions import Fraction as Rational
except ImportError:  # pragma: no cover - pure Python fallback
    from fractions import Fraction as Rational

from errors import ParseError

__all__ = ["Rational", "ZERO", "ONE", "Q", "parse_rational", "format_rational", "to_decimal"]

_LITERAL = re.compile(r"^\s*(-?\d+)(?:\s*/\s*(\d+))?\s*$")

ZERO = Rational(0)
ONE = Rational(1)


def Q(numerator, denominator=1) -> Rational:
    """Build a Rational from integers or from another Rational"""
    if isinstance(numerator, float) or isinstance(denominator, float):
        raise TypeError("floats are not accepted; pass integers or a 'p/q' string")
    if isinstance(numerator, str):
        return parse_rational(numerator)
    return Rational(numerator) / Rational(denominator)


def parse_rational(text: str) -> Rational:
    """Parse 'p/q' or 'p' exactly"""
    match = _LITERAL.match(text)
    if match is None:
        raise ParseError(f"not a rational literal: {text!r}")
    numerator, denominator = match.groups()
    if denominator is not None and int(denominator) == 0:
        raise ParseError(f"zero denominator in {text!r}")
    return Rational(int(numerator), int(denominator or 1))


def format_rational(value: Rational) -> str:
    """Render as 'numerator/denominator' (integers keep the '/1')"""
    value = Rational(value)
    return f"{value.numerator}/{value.denominator}"


def to_decimal(value: Rational, digits: int) -> str:
    """Rounded decimal rendering, computed with integers only"""
    value = Rational(value)
    sign = "-" if value < 0 else ""
    value = abs(value)
    scaled = (value.numerator * 10**digits * 2 + value.denominator) // (2 * value.denominator)
    whole, frac = divmod(scaled, 10**digits)
    if digits == 0:
        return f"{sign}{whole}"
    return f"{sign}{whole}.{frac:0{digits}d}"
