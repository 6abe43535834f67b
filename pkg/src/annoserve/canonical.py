"""Canonical JSON and timestamp helpers.

Every artifact this package writes (COCO files, NDJSON log lines, HTTP
bodies) goes through ``canonical_dumps`` so identical data always yields
identical bytes:

- compact separators, no trailing whitespace, UTF-8 without escaping,
- integers emitted without a decimal point, reals via shortest
  round-trip repr, NaN/Infinity rejected,
- record types build their key order explicitly before serialization;
  open maps (attributes, info, unknown extras) are sorted by key here.
"""

from __future__ import annotations

import json
from datetime import datetime, timezone
from typing import Any


def canonical_dumps(value: Any) -> str:
    """Serialize to the canonical compact JSON text form."""
    return json.dumps(value, ensure_ascii=False, allow_nan=False, separators=(",", ":"))


def canonical_bytes(value: Any) -> bytes:
    return canonical_dumps(value).encode("utf-8")


def sort_map(value: dict) -> dict:
    """Recursively order every dict by key; used for open maps and extras."""
    if isinstance(value, dict):
        return {k: sort_map(value[k]) for k in sorted(value)}
    if isinstance(value, (list, tuple)):
        return [sort_map(v) for v in value]
    return value


def rfc3339_now() -> str:
    """Current UTC time as an RFC 3339 string with a Z suffix."""
    return datetime.now(timezone.utc).isoformat(timespec="microseconds").replace("+00:00", "Z")


def parse_rfc3339(value: str) -> datetime:
    """Parse an RFC 3339 timestamp; raises ValueError unless it is UTC."""
    if not isinstance(value, str) or not value:
        raise ValueError(f"not a timestamp string: {value!r}")
    text = value[:-1] + "+00:00" if value.endswith(("Z", "z")) else value
    parsed = datetime.fromisoformat(text)
    if parsed.tzinfo is None or parsed.utcoffset() != timezone.utc.utcoffset(None):
        raise ValueError(f"timestamp must be UTC: {value!r}")
    return parsed
