"""Point/box distance math shared by rewards and evaluation.

Coordinates are pixels with the origin at the top-left, x to the right and
y downward. Boxes are closed rectangles: a point lying exactly on an edge
is inside.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

# inradius at or below this is treated as a point/line target
DEGENERATE_EPS = 1e-6


@dataclass(frozen=True)
class Point:
    u: float
    v: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.u) and math.isfinite(self.v)):
            raise ValueError(f"point coordinates must be finite: ({self.u}, {self.v})")

    def to_list(self) -> list[float]:
        return [self.u, self.v]


@dataclass(frozen=True)
class BoundingBox:
    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self) -> None:
        for name in ("x1", "y1", "x2", "y2"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"box coordinate {name} must be finite")
        if self.x1 > self.x2 or self.y1 > self.y2:
            raise ValueError(
                f"box corners out of order: [{self.x1}, {self.y1}, {self.x2}, {self.y2}]"
            )

    @classmethod
    def from_list(cls, values: Sequence[float]) -> "BoundingBox":
        if len(values) != 4:
            raise ValueError(f"box needs 4 values, got {len(values)}")
        return cls(*(float(x) for x in values))

    def to_list(self) -> list[float]:
        return [self.x1, self.y1, self.x2, self.y2]

    @property
    def width(self) -> float:
        return self.x2 - self.x1

    @property
    def height(self) -> float:
        return self.y2 - self.y1

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def center(self) -> Point:
        return Point((self.x1 + self.x2) / 2.0, (self.y1 + self.y2) / 2.0)

    @property
    def inradius(self) -> float:
        return min(self.width, self.height) / 2.0

    def within(self, image_w: float, image_h: float) -> bool:
        return self.x1 >= 0 and self.y1 >= 0 and self.x2 <= image_w and self.y2 <= image_h


@dataclass(frozen=True)
class DistanceProfile:
    """Every distance quantity for one prediction against one target box."""

    unsigned_dist: float
    closest_point: Point
    signed_dist: float
    max_dist: float
    d_norm: float


def point_in_box(p: Point, b: BoundingBox, inclusive: bool = True) -> bool:
    if inclusive:
        return b.x1 <= p.u <= b.x2 and b.y1 <= p.v <= b.y2
    return b.x1 < p.u < b.x2 and b.y1 < p.v < b.y2


def unsigned_distance(p: Point, b: BoundingBox) -> tuple[float, Point]:
    """Euclidean distance from ``p`` to the nearest point of ``b``, and that point."""
    cu = min(max(p.u, b.x1), b.x2)
    cv = min(max(p.v, b.y1), b.y2)
    return math.hypot(p.u - cu, p.v - cv), Point(cu, cv)


def signed_distance(p: Point, b: BoundingBox) -> float:
    """Distance to the nearest edge when inside (>= 0), minus the box distance outside."""
    if point_in_box(p, b):
        return min(p.u - b.x1, b.x2 - p.u, p.v - b.y1, b.y2 - p.v)
    d, _ = unsigned_distance(p, b)
    return -d


def max_distance(b: BoundingBox, image_w: float, image_h: float) -> float:
    """Largest distance to ``b`` attainable from any point of the image.

    Distance to a box is convex, so its maximum over the image rectangle sits
    at one of the four corners.
    """
    if not b.within(image_w, image_h):
        raise ValueError(
            f"box {b.to_list()} exceeds image bounds {image_w}x{image_h}"
        )
    corners = (
        Point(0.0, 0.0),
        Point(float(image_w), 0.0),
        Point(0.0, float(image_h)),
        Point(float(image_w), float(image_h)),
    )
    return max(unsigned_distance(c, b)[0] for c in corners)


def normalized_distance(p: Point, b: BoundingBox, image_w: float, image_h: float) -> float:
    if point_in_box(p, b):
        r = b.inradius
        if r <= DEGENERATE_EPS:
            return 1.0
        return min(signed_distance(p, b) / r, 1.0)
    md = max_distance(b, image_w, image_h)
    d, _ = unsigned_distance(p, b)
    if md <= 0.0:
        # box covers the whole image, so p is off-image
        return -1.0
    dn = -d / md
    if dn == 0.0:
        # misses must stay strictly negative even when the ratio underflows
        dn = -math.ulp(0.0)
    return max(dn, -1.0)


def distance_profile(p: Point, b: BoundingBox, image_w: float, image_h: float) -> DistanceProfile:
    d, closest = unsigned_distance(p, b)
    return DistanceProfile(
        unsigned_dist=d,
        closest_point=closest,
        signed_dist=signed_distance(p, b),
        max_dist=max_distance(b, image_w, image_h),
        d_norm=normalized_distance(p, b, image_w, image_h),
    )
