"""Tick-label number formatting and the inverse parser.

Four label styles are supported: plain decimals, comma-grouped decimals,
normalized scientific notation ("7.00e+6"), and unit abbreviations using
K/M/B/T for 10^3/10^6/10^9/10^12.  ``parse_number`` accepts all four plus
the sloppy variants that show up in model output (spaces inside the
exponent, unicode minus, a decorative trailing '%').
"""

from __future__ import annotations

import math
import re
from decimal import Decimal

from .tables import TickFormat

ABBREV_UNITS: tuple[tuple[str, float], ...] = (
    ("T", 1e12),
    ("B", 1e9),
    ("M", 1e6),
    ("K", 1e3),
)

SCIENTIFIC_MANTISSA_DIGITS = 2


class NumberParseError(ValueError):
    """Raised when a token cannot be read as a number in any accepted format."""

    def __init__(self, token: str):
        super().__init__(f"unparseable number: {token!r}")
        self.token = token


def _positional(v: float) -> str:
    """Exact positional decimal for a float, no exponent, no grouping."""
    if v == int(v) and abs(v) < 1e18:
        return str(int(v))
    # Decimal(repr(v)) keeps the shortest round-trip digits; 'f' kills the
    # exponent that repr() would use for very large/small magnitudes.
    return format(Decimal(repr(v)), "f")


def _group_thousands(s: str) -> str:
    sign = "-" if s.startswith("-") else ""
    s = s.lstrip("-")
    int_part, _, frac = s.partition(".")
    grouped = f"{int(int_part):,}" if int_part else "0"
    return sign + grouped + ("." + frac if frac else "")


def _scientific(v: float, digits: int) -> str:
    if v == 0:
        return f"{0:.{digits}f}e+0"
    exp = math.floor(math.log10(abs(v)))
    mantissa = v / 10.0**exp
    # float log10 can land one off at power-of-ten boundaries
    if abs(mantissa) >= 10.0:
        mantissa /= 10.0
        exp += 1
    elif abs(mantissa) < 1.0:
        mantissa *= 10.0
        exp -= 1
    out = f"{mantissa:.{digits}f}"
    if abs(float(out)) >= 10.0:  # rounding pushed e.g. 9.999 to "10.00"
        exp += 1
        mantissa = v / 10.0**exp
        out = f"{mantissa:.{digits}f}"
    sign = "+" if exp >= 0 else "-"
    return f"{out}e{sign}{abs(exp)}"


def _trim_fraction(v: float) -> str:
    """Decimal string keeping at most two significant fraction digits.

    Significant here means digits after the leading zeros of the fraction,
    so 0.075 stays "0.075" rather than collapsing to "0.08"'s neighbour
    "0.07"; trailing zeros are trimmed.
    """
    if v == int(v):
        return str(int(v))
    d = Decimal(repr(v))
    frac = abs(d - int(d))
    leading_zeros = 0
    scaled = frac
    while scaled < Decimal("0.1"):
        scaled *= 10
        leading_zeros += 1
    decimals = leading_zeros + 2
    q = d.quantize(Decimal(1).scaleb(-decimals))
    s = format(q, "f")
    return s.rstrip("0").rstrip(".")


def format_tick(
    v: float, fmt: TickFormat, mantissa_digits: int = SCIENTIFIC_MANTISSA_DIGITS
) -> str:
    """Render *v* as a y-axis tick label in the requested format."""
    if not math.isfinite(v):
        raise ValueError(f"cannot format non-finite value {v!r}")
    if fmt is TickFormat.PLAIN:
        return _positional(v)
    if fmt is TickFormat.COMMA:
        return _group_thousands(_positional(v))
    if fmt is TickFormat.SCIENTIFIC:
        return _scientific(v, mantissa_digits)
    if fmt is TickFormat.ABBREV:
        for suffix, unit in ABBREV_UNITS:
            if unit <= abs(v):
                return _trim_fraction(v / unit) + suffix
        return _trim_fraction(v)
    raise ValueError(f"unsupported format {fmt!r}")


_ABBREV_RE = re.compile(r"^(.*?)[ ]?([kmbtKMBT])$")
_E_NORMALIZE_RE = re.compile(r"\s*[eE]\s*([+\-−]?)\s*")


def parse_number(s: str) -> float:
    """Parse a number token in any of the four tick formats.

    Tolerates grouping commas, scientific notation with spaces around the
    exponent ("7.00e + 6"), case-insensitive K/M/B/T suffixes with an
    optional space, unicode minus, and a trailing '%' (stripped, value kept
    unscaled).  Raises :class:`NumberParseError` otherwise.
    """
    token = s.strip()
    if not token:
        raise NumberParseError(s)
    text = token.replace("−", "-")
    if text.endswith("%"):
        text = text[:-1].strip()
    multiplier = 1.0
    m = _ABBREV_RE.match(text)
    if m:
        for suffix, unit in ABBREV_UNITS:
            if m.group(2).upper() == suffix:
                multiplier = unit
                text = m.group(1)
                break
    text = _E_NORMALIZE_RE.sub(lambda g: "e" + g.group(1).replace("−", "-"), text)
    text = text.replace(",", "")
    try:
        value = float(text)
    except ValueError:
        raise NumberParseError(token) from None
    if not math.isfinite(value):
        raise NumberParseError(token)
    return value * multiplier
