"""3D primitives and exact segment-versus-prism clipping.

Obstacles are convex footprints extruded along z. A segment is clipped
against the two z slabs and then against each footprint edge's half-plane
(Cyrus-Beck), which yields the parametric interval spent inside the body.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple, Optional, Sequence

import numpy as np
from numba import njit

#: Intervals shorter than this (meters) count as grazing and are dropped.
GRAZING_EPS = 1e-9


class InvalidGeometryError(ValueError):
    """Raised for prisms that violate the convex/CCW/positive-height rules."""


class Vec3(NamedTuple):
    x: float
    y: float
    z: float


class Segment(NamedTuple):
    a: Vec3
    b: Vec3

    @property
    def length(self) -> float:
        return distance(self.a, self.b)


@dataclass(frozen=True)
class Intersection:
    obstacle_id: int
    entry_t: float
    exit_t: float
    chord_length: float


def distance(a: Sequence[float], b: Sequence[float]) -> float:
    """Euclidean distance between two points."""
    return math.sqrt((b[0] - a[0]) ** 2 + (b[1] - a[1]) ** 2 + (b[2] - a[2]) ** 2)


def _validate_footprint(pts: np.ndarray) -> None:
    k = len(pts)
    if k < 3:
        raise InvalidGeometryError(f"footprint needs at least 3 vertices, got {k}")
    if not np.all(np.isfinite(pts)):
        raise InvalidGeometryError("footprint has non-finite coordinates")
    for i in range(k):
        p, q = pts[i], pts[(i + 1) % k]
        if p[0] == q[0] and p[1] == q[1]:
            raise InvalidGeometryError(f"repeated footprint vertex at index {i}")
        ex, ey = q[0] - p[0], q[1] - p[1]
        # every vertex off this edge must lie strictly to its left
        for j in range(k):
            if j == i or j == (i + 1) % k:
                continue
            cross = ex * (pts[j][1] - p[1]) - ey * (pts[j][0] - p[0])
            if cross <= 0.0:
                raise InvalidGeometryError(
                    "footprint must be strictly convex and counter-clockwise"
                )


@dataclass(frozen=True)
class Prism:
    """Convex CCW footprint extruded from ``base_z`` to ``base_z + height``."""

    footprint: tuple[tuple[float, float], ...]
    base_z: float
    height: float

    def __post_init__(self) -> None:
        fp = tuple((float(x), float(y)) for x, y in self.footprint)
        object.__setattr__(self, "footprint", fp)
        if not (math.isfinite(self.height) and self.height > 0.0):
            raise InvalidGeometryError(f"prism height must be > 0, got {self.height}")
        if not math.isfinite(self.base_z):
            raise InvalidGeometryError("prism base_z must be finite")
        _validate_footprint(np.asarray(fp, dtype=np.float64))

    @classmethod
    def box(cls, min_corner: Sequence[float], size: Sequence[float]) -> "Prism":
        """Axis-aligned cuboid from its min corner and (dx, dy, dz) extents."""
        x, y, z = (float(v) for v in min_corner)
        dx, dy, dz = (float(v) for v in size)
        if dx <= 0 or dy <= 0:
            raise InvalidGeometryError(f"cuboid size must be positive, got {tuple(size)}")
        fp = ((x, y), (x + dx, y), (x + dx, y + dy), (x, y + dy))
        return cls(fp, z, dz)

    @property
    def top_z(self) -> float:
        return self.base_z + self.height

    @cached_property
    def halfplanes(self) -> np.ndarray:
        """(k, 3) rows ``(nx, ny, c)``: a point is inside iff ``nx*x + ny*y <= c``."""
        return footprint_halfplanes(self.footprint)

    def bounds(self) -> tuple[float, float, float, float, float, float]:
        xs = [p[0] for p in self.footprint]
        ys = [p[1] for p in self.footprint]
        return min(xs), min(ys), self.base_z, max(xs), max(ys), self.top_z


def footprint_halfplanes(footprint: Sequence[Sequence[float]]) -> np.ndarray:
    pts = np.asarray(footprint, dtype=np.float64)
    nxt = np.roll(pts, -1, axis=0)
    edge = nxt - pts
    # outward normal of a CCW edge is the edge rotated clockwise
    normals = np.column_stack([edge[:, 1], -edge[:, 0]])
    c = np.einsum("ij,ij->i", normals, pts)
    out = np.column_stack([normals, c])
    out.setflags(write=False)
    return out


@njit(nogil=True, cache=True)
def clip_segment(ax, ay, az, bx, by, bz, hp, nedges, z0, z1):
    """Parametric interval of segment a->b inside one prism.

    ``hp`` holds ``(nx, ny, c)`` rows, only the first ``nedges`` are used.
    Returns ``(t_in, t_out)``; an empty interval has ``t_in >= t_out``.
    """
    dx = bx - ax
    dy = by - ay
    dz = bz - az
    t0 = 0.0
    t1 = 1.0
    if dz == 0.0:
        if az < z0 or az > z1:
            return 1.0, 0.0
    else:
        ta = (z0 - az) / dz
        tb = (z1 - az) / dz
        if ta > tb:
            ta, tb = tb, ta
        if ta > t0:
            t0 = ta
        if tb < t1:
            t1 = tb
        if t0 >= t1:
            return 1.0, 0.0
    for k in range(nedges):
        nx = hp[k, 0]
        ny = hp[k, 1]
        num = hp[k, 2] - (nx * ax + ny * ay)
        den = nx * dx + ny * dy
        if den == 0.0:
            if num < 0.0:
                return 1.0, 0.0
        elif den > 0.0:
            t = num / den
            if t < t1:
                t1 = t
        else:
            t = num / den
            if t > t0:
                t0 = t
        if t0 >= t1:
            return 1.0, 0.0
    return t0, t1


def segment_prism_intersection(
    seg: Segment, prism: Prism, obstacle_id: int = 0
) -> Optional[Intersection]:
    """Chord of ``seg`` through ``prism``, or None when the overlap is empty or grazing."""
    a, b = seg
    hp = prism.halfplanes
    t0, t1 = clip_segment(
        float(a[0]), float(a[1]), float(a[2]),
        float(b[0]), float(b[1]), float(b[2]),
        hp, hp.shape[0], prism.base_z, prism.top_z,
    )
    if t0 >= t1:
        return None
    chord = distance(a, b) * (t1 - t0)
    if chord < GRAZING_EPS:
        return None
    return Intersection(obstacle_id, t0, t1, chord)
