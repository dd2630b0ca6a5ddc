"""Exact rational helpers shared by the engines and the CLI.

Probabilities and identity residuals travel through the whole pipeline as
:class:`fractions.Fraction`; floats only appear in Monte Carlo summaries.
On the wire (JSON reports, CSV, CLI flags) rationals are "num/den" strings.
"""

from __future__ import annotations

from fractions import Fraction


def parse_fraction(text: str | int | Fraction) -> Fraction:
    """Parse "3/8", "3" or a numeric value into an exact Fraction."""
    if isinstance(text, Fraction):
        return text
    if isinstance(text, int):
        return Fraction(text)
    try:
        return Fraction(str(text).strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"not a rational: {text!r}") from exc


def format_fraction(value: Fraction | int) -> str:
    """Canonical "num/den" string; plain "num" when the denominator is 1."""
    frac = Fraction(value)
    if frac.denominator == 1:
        return str(frac.numerator)
    return f"{frac.numerator}/{frac.denominator}"


def parse_probability(text: str | Fraction) -> Fraction:
    """Parse a percolation parameter and require 0 < p < 1."""
    p = parse_fraction(text)
    if not 0 < p < 1:
        raise ValueError(f"probability must lie strictly between 0 and 1, got {p}")
    return p
