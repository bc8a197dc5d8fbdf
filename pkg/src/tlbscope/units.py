"""Byte-size and rate unit helpers.

Sizes are always integer bytes internally.  Human-facing strings use binary
suffixes (``"64GiB"``); throughput is reported in decimal GB/s (1 GB = 1e9 B).
"""

import re

KiB = 1 << 10
MiB = 1 << 20
GiB = 1 << 30
TiB = 1 << 40
GB = 1e9

_SUFFIXES = {"": 1, "B": 1, "KIB": KiB, "MIB": MiB, "GIB": GiB, "TIB": TiB}
_SIZE_RE = re.compile(r"^\s*(\d+)\s*([A-Za-z]*)\s*$")


def parse_size(value):
    """Parse ``"64GiB"``, ``"2MiB"``, ``"4096"`` or an int into bytes."""
    if isinstance(value, bool):
        raise ValueError(f"invalid size: {value!r}")
    if isinstance(value, int):
        if value < 0:
            raise ValueError(f"negative size: {value}")
        return value
    if not isinstance(value, str):
        raise ValueError(f"invalid size: {value!r}")
    m = _SIZE_RE.match(value)
    if m is None:
        raise ValueError(f"invalid size: {value!r}")
    number, suffix = m.groups()
    mult = _SUFFIXES.get(suffix.upper())
    if mult is None:
        raise ValueError(f"unknown size suffix {suffix!r} in {value!r}")
    return int(number) * mult


def parse_size_list(text):
    return [parse_size(part) for part in text.split(",") if part.strip()]


def format_size(nbytes):
    """Largest binary suffix that divides ``nbytes`` exactly."""
    for name, mult in (("TiB", TiB), ("GiB", GiB), ("MiB", MiB), ("KiB", KiB)):
        if nbytes and nbytes % mult == 0:
            return f"{nbytes // mult}{name}"
    return str(nbytes)


def gbps(rate):
    return rate / GB
