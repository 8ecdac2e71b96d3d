"""Engineering-notation values: ``720n``, ``1.13u``, ``1k``, ``2meg``.

Parsing goes through :class:`decimal.Decimal` so that ``parse_value("180n")``
is the correctly rounded double of 180e-9, and ``format_value`` emits the
shortest decimal that parses back to the identical float.
"""
from __future__ import annotations

import re
from decimal import Decimal

SUFFIXES = {
    "f": -15,
    "p": -12,
    "n": -9,
    "u": -6,
    "m": -3,
    "k": 3,
    "meg": 6,
}
_EXP_TO_SUFFIX = {exp: sfx for sfx, exp in SUFFIXES.items()}
_EXP_TO_SUFFIX[0] = ""

_VALUE_RE = re.compile(
    r"^([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)(meg|[fpnumk])?$",
    re.IGNORECASE,
)


def parse_value(text: str) -> float:
    """Parse a number with an optional SPICE scale suffix (case-insensitive).

    ``M`` is milli, ``MEG`` is mega, as in SPICE.
    """
    m = _VALUE_RE.match(text.strip())
    if m is None:
        raise ValueError(f"not a numeric value: {text!r}")
    mantissa, suffix = m.groups()
    exp = SUFFIXES[suffix.lower()] if suffix else 0
    return float(Decimal(mantissa).scaleb(exp))


def format_value(value: float) -> str:
    """Shortest engineering-suffixed text that round-trips through parse_value."""
    value = float(value)
    if value == 0.0:
        return "0"
    if value != value or value in (float("inf"), float("-inf")):
        raise ValueError(f"cannot format non-finite value {value}")
    dec = Decimal(repr(value))
    exp3 = (dec.adjusted() // 3) * 3
    if exp3 not in _EXP_TO_SUFFIX:
        return repr(value)
    mantissa = dec.scaleb(-exp3).normalize()
    text = format(mantissa, "f")
    return text + _EXP_TO_SUFFIX[exp3]
