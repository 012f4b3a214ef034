"""Rational/float conversions shared across the package."""
from __future__ import annotations

import math
import numbers
from fractions import Fraction

import gmpy2

Number = numbers.Real


def as_rational(x) -> Fraction:
    """Convert ``x`` to a Fraction, reading floats by their shortest repr.

    ``0.1`` becomes ``1/10`` rather than the binary approximation, so that
    configs written in decimal give the exact instance the user typed.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(x, numbers.Integral):
        return Fraction(int(x))
    if isinstance(x, float) or (isinstance(x, numbers.Real) and not isinstance(x, numbers.Rational)):
        xf = float(x)
        if not math.isfinite(xf):
            raise ValueError(f"non-finite value {x!r}")
        return Fraction(repr(xf))
    if isinstance(x, str):
        return Fraction(x.strip())
    if hasattr(x, "numerator") and hasattr(x, "denominator"):
        return Fraction(int(x.numerator), int(x.denominator))
    raise TypeError(f"cannot convert {type(x).__name__} to a rational")


def to_mpq(x: Fraction) -> gmpy2.mpq:
    return gmpy2.mpq(x.numerator, x.denominator)


def from_mpq(q) -> Fraction:
    return Fraction(int(q.numerator), int(q.denominator))


def fmt(x) -> str:
    """Deterministic text rendering: fractions as p/q, floats by repr."""
    if isinstance(x, (Fraction, int)) and not isinstance(x, bool):
        return str(x)
    if x is None:
        return "-"
    xf = float(x)
    return repr(xf + 0.0 if xf == 0 else xf)


def fmt_decimal(x, digits: int = 12) -> str:
    if x is None:
        return "-"
    return f"{float(x):.{digits}g}"
