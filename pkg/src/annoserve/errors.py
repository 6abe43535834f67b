"""Shared exception types and the violation record used by all validators."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Violation:
    """One broken invariant, machine-readable code plus human message.

    severity "error" fails validation; "warning" is advisory only
    (e.g. self-intersecting polygons are kept but flagged).
    """

    code: str
    message: str
    severity: str = "error"

    def to_json(self) -> dict:
        return {"code": self.code, "message": self.message, "severity": self.severity}


def errors_only(violations: list[Violation]) -> list[Violation]:
    return [v for v in violations if v.severity == "error"]


class ValidationError(ValueError):
    """Raised when a value fails its invariants; carries every violation found."""

    def __init__(self, violations: list[Violation]):
        self.violations = list(violations)
        super().__init__("; ".join(v.message for v in self.violations) or "validation failed")


class DatasetParseError(ValueError):
    """Malformed JSON input; byte_offset points at the first offending byte."""

    def __init__(self, message: str, byte_offset: int):
        self.byte_offset = byte_offset
        super().__init__(f"{message} (byte offset {byte_offset})")


class SchemaError(ValueError):
    """Structurally valid JSON that does not match the expected document shape."""

    def __init__(self, message: str, key: str | None = None):
        self.key = key
        super().__init__(message)


class MergeConflictError(ValueError):
    """Two datasets disagree on the identity of a shared category name."""


class DegeneratePolygonError(ValueError):
    """Polygon with fewer than three vertices."""


class PolygonEncodingError(ValueError):
    """Flattened polygon list with odd length or fewer than six numbers."""


class InvalidImageError(ValueError):
    """Blob payload is not a PNG with positive dimensions."""


class IntegrityError(RuntimeError):
    """Stored data is internally inconsistent (corrupt log line, missing blob)."""


class NotFoundError(KeyError):
    """Referenced entity (image hash) is not present in the store."""

    def __str__(self) -> str:  # KeyError quotes its repr by default
        return self.args[0] if self.args else "not found"


class ConfigError(ValueError):
    """Server or category configuration rejected at load time."""
