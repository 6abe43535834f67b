"""Polygon math: shoelace area, bounding boxes, size classes, validity checks.

Coordinates are real-valued pixels in captured-image space; high-DPI
captures legitimately produce fractional click positions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, NamedTuple, Sequence

from .errors import DegeneratePolygonError, PolygonEncodingError, Violation

# Polygons below one square pixel cannot depict an object; they are
# almost always accidental double-clicks.
MIN_AREA = 1.0

# Instance size classes split at 32x32 and 96x96 square pixels of
# segmentation area; the middle bin is closed on both ends.
SMALL_MAX_EXCLUSIVE = 32.0 * 32.0
LARGE_MIN_EXCLUSIVE = 96.0 * 96.0


class Point(NamedTuple):
    x: float
    y: float


@dataclass(frozen=True)
class Polygon:
    """Closed polygon given as an ordered vertex ring (first vertex not repeated)."""

    vertices: tuple[Point, ...]

    @classmethod
    def from_pairs(cls, pairs: Iterable[Sequence[float]]) -> "Polygon":
        return cls(tuple(Point(float(x), float(y)) for x, y in pairs))

    def to_pairs(self) -> list[list[float]]:
        return [[p.x, p.y] for p in self.vertices]


class AreaClass(str, Enum):
    SMALL = "small"
    MEDIUM = "medium"
    LARGE = "large"


def signed_area(p: Polygon) -> float:
    """Shoelace sum / 2 with cyclic indices; sign encodes winding order."""
    verts = p.vertices
    if len(verts) < 3:
        raise DegeneratePolygonError(f"polygon needs at least 3 vertices, got {len(verts)}")
    total = 0.0
    for i, (x0, y0) in enumerate(verts):
        x1, y1 = verts[(i + 1) % len(verts)]
        total += x0 * y1 - x1 * y0
    return total / 2.0


def polygon_area(p: Polygon) -> float:
    """Absolute shoelace area in square pixels.

    Self-intersecting rings are accepted; lobes of opposite winding
    cancel, which QC review is expected to catch.
    """
    return abs(signed_area(p))


def polygon_bbox(p: Polygon) -> list[float]:
    """Minimal axis-aligned [x, y, width, height] containing every vertex."""
    verts = p.vertices
    if len(verts) < 3:
        raise DegeneratePolygonError(f"polygon needs at least 3 vertices, got {len(verts)}")
    xs = [v.x for v in verts]
    ys = [v.y for v in verts]
    return [min(xs), min(ys), max(xs) - min(xs), max(ys) - min(ys)]


def classify_area(area: float) -> AreaClass:
    """Bin a segmentation area into small / medium / large."""
    if math.isnan(area) or area < 0:
        raise ValueError(f"area must be non-negative, got {area}")
    if area < SMALL_MAX_EXCLUSIVE:
        return AreaClass.SMALL
    if area <= LARGE_MIN_EXCLUSIVE:
        return AreaClass.MEDIUM
    return AreaClass.LARGE


def flatten(p: Polygon) -> list[float]:
    """Interleave vertices into the flat [x1,y1,...,xk,yk] encoding."""
    if len(p.vertices) < 3:
        raise PolygonEncodingError(f"polygon needs at least 3 vertices, got {len(p.vertices)}")
    out: list[float] = []
    for v in p.vertices:
        out.append(v.x)
        out.append(v.y)
    return out


def unflatten(values: Sequence[float]) -> Polygon:
    """Inverse of flatten; rejects odd-length or sub-triangle input."""
    if len(values) % 2 != 0 or len(values) < 6:
        raise PolygonEncodingError(
            f"flattened polygon needs an even length of at least 6, got {len(values)}"
        )
    pairs = [(float(values[i]), float(values[i + 1])) for i in range(0, len(values), 2)]
    return Polygon.from_pairs(pairs)


def validate_polygon(
    vertices: Sequence[Sequence[float]], image_w: float, image_h: float
) -> list[Violation]:
    """Check one drawn polygon against the capture it belongs to.

    Returns one violation per problem; self-intersection is reported as
    a warning (the drawing surface cannot prevent it, and rejecting the
    submission would lose annotator work).
    """
    violations: list[Violation] = []
    points = [Point(float(x), float(y)) for x, y in vertices]

    if len(points) < 3:
        violations.append(
            Violation("polygon-too-few-vertices", f"polygon has {len(points)} vertices, need at least 3")
        )
        return violations

    for i, pt in enumerate(points):
        nxt = points[(i + 1) % len(points)]
        if pt == nxt:
            violations.append(
                Violation("polygon-duplicate-vertex", f"consecutive duplicate vertex at index {i}")
            )
    for i, pt in enumerate(points):
        if not (math.isfinite(pt.x) and math.isfinite(pt.y)):
            violations.append(Violation("vertex-not-finite", f"vertex {i} is not finite"))
            return violations
        if not (0.0 <= pt.x <= image_w and 0.0 <= pt.y <= image_h):
            violations.append(
                Violation(
                    "vertex-out-of-bounds",
                    f"vertex {i} at ({pt.x}, {pt.y}) outside image {image_w}x{image_h}",
                )
            )

    area = polygon_area(Polygon(tuple(points)))
    if area < MIN_AREA:
        violations.append(
            Violation("area-below-minimum", f"polygon area {area} is below the minimum {MIN_AREA}")
        )
    if _self_intersects(points):
        violations.append(
            Violation("polygon-self-intersects", "polygon edges cross each other", severity="warning")
        )
    return violations


def _orient(a: Point, b: Point, c: Point) -> float:
    return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)


def _segments_cross(a: Point, b: Point, c: Point, d: Point) -> bool:
    d1 = _orient(c, d, a)
    d2 = _orient(c, d, b)
    d3 = _orient(a, b, c)
    d4 = _orient(a, b, d)
    return ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)) and d1 != 0 and d2 != 0 and d3 != 0 and d4 != 0


def _self_intersects(points: list[Point]) -> bool:
    # O(n^2) over non-adjacent edge pairs; annotation rings are tiny.
    n = len(points)
    edges = [(points[i], points[(i + 1) % n]) for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            if j == i + 1 or (i == 0 and j == n - 1):
                continue
            if _segments_cross(*edges[i], *edges[j]):
                return True
    return False
