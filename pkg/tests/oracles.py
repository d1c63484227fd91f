"""Reference computations that share no code path with the package kernels."""

from __future__ import annotations

import math

import numpy as np

C = 299_792_458.0


def box_parameter_range(a, b, lo, hi):
    """Segment parameter interval inside an axis-aligned box (plain slab test)."""
    t0, t1 = 0.0, 1.0
    for axis in range(3):
        d = b[axis] - a[axis]
        if d == 0:
            if not lo[axis] <= a[axis] <= hi[axis]:
                return None
            continue
        ta, tb = (lo[axis] - a[axis]) / d, (hi[axis] - a[axis]) / d
        t0, t1 = max(t0, min(ta, tb)), min(t1, max(ta, tb))
    return (t0, t1) if t1 > t0 else None


def inside_prism(points, footprint, z0, z1):
    """Vectorised point membership for a convex CCW footprint."""
    fp = np.asarray(footprint, dtype=float)
    inside = (points[:, 2] >= z0) & (points[:, 2] <= z1)
    for i in range(len(fp)):
        p, q = fp[i], fp[(i + 1) % len(fp)]
        cross = (q[0] - p[0]) * (points[:, 1] - p[1]) - (q[1] - p[1]) * (points[:, 0] - p[0])
        inside &= cross >= 0
    return inside


def monte_carlo_chord(a, b, footprint, z0, z1, samples, rng):
    """Chord length by jittered point sampling along the segment.

    Sampling is restricted to the stretch inside the prism's bounding box so
    the resolution is spent where the body is. Returns ``(chord, max_error)``.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    fp = np.asarray(footprint, dtype=float)
    lo = (fp[:, 0].min(), fp[:, 1].min(), z0)
    hi = (fp[:, 0].max(), fp[:, 1].max(), z1)
    span = box_parameter_range(a, b, lo, hi)
    length = float(np.linalg.norm(b - a))
    if span is None:
        return 0.0, 0.0
    t0, t1 = span
    step = (t1 - t0) / samples
    t = t0 + (np.arange(samples) + rng.random(samples)) * step
    pts = a + t[:, None] * (b - a)
    hits = int(np.count_nonzero(inside_prism(pts, fp, z0, z1)))
    return hits * step * length, 2.0 * step * length


def brute_force_hits(env, a, b):
    """Obstacle ids crossed by a->b, one geometry call per obstacle."""
    from v2xprop.geometry import Segment, segment_prism_intersection

    seg = Segment(tuple(a), tuple(b))
    return [ob.id for ob in env.obstacles
            if segment_prism_intersection(seg, ob.prism, ob.id) is not None]


def friis_reference_db(freq_hz, d0=1.0):
    return 20 * math.log10(4 * math.pi * d0 * freq_hz / C)


def log_distance_db(d, freq_hz, exponent, d0=1.0):
    return friis_reference_db(freq_hz, d0) + 10 * exponent * math.log10(max(d, d0) / d0)


def random_convex_footprint(rng, k=None):
    """CCW convex polygon: sorted angles on a circle under a det>0 affine map."""
    k = k or int(rng.integers(3, 9))
    while True:
        ang = np.sort(rng.uniform(0, 2 * np.pi, k))
        gaps = np.diff(np.append(ang, ang[0] + 2 * np.pi))
        if gaps.min() > 0.15 and gaps.max() < np.pi - 0.05:
            break
    pts = np.column_stack([np.cos(ang), np.sin(ang)])
    m = np.array([[rng.uniform(5, 60), rng.uniform(-10, 10)], [0.0, rng.uniform(5, 60)]])
    rot = rng.uniform(0, 2 * np.pi)
    r = np.array([[np.cos(rot), -np.sin(rot)], [np.sin(rot), np.cos(rot)]])
    out = pts @ (r @ m).T + rng.uniform(-100, 100, 2)
    return [tuple(map(float, p)) for p in out]
