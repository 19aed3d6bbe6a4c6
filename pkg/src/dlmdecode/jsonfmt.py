"""JSON helpers with pinned float formatting.

Trace files print floats with 9 significant digits. To keep header
round-trips byte-exact, configuration floats are quantized to the same
precision when configs are built, so a value parsed back from a trace
header reproduces the original computation bit-for-bit.
"""

from __future__ import annotations

import hashlib
import json
from typing import Any


def fmt_float(x: float) -> str:
    return format(x, ".9g")


def quantize(x: float) -> float:
    """Round to the 9-significant-digit grid used by trace serialization."""
    return float(fmt_float(x))


def dumps(obj: Any) -> str:
    """Serialize with dict insertion order preserved and floats at 9
    significant digits. Deterministic for identical inputs."""
    out: list[str] = []
    _write(obj, out)
    return "".join(out)


def _write(obj: Any, out: list[str]) -> None:
    if obj is None:
        out.append("null")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif isinstance(obj, int):
        out.append(repr(obj))
    elif isinstance(obj, float):
        out.append(fmt_float(obj))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, dict):
        out.append("{")
        for n, (key, value) in enumerate(obj.items()):
            if n:
                out.append(",")
            out.append(json.dumps(str(key)))
            out.append(":")
            _write(value, out)
        out.append("}")
    elif isinstance(obj, (list, tuple)):
        out.append("[")
        for n, value in enumerate(obj):
            if n:
                out.append(",")
            _write(value, out)
        out.append("]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def canonical_dumps(obj: Any) -> str:
    """Key-sorted compact JSON used for digests (floats at full precision)."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def sha256_hex(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()
