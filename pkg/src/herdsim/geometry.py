"""Planar geometry primitives shared by the dynamics, selection and metrics code.

Angles live in the principal interval (-pi, pi]; angular sectors are half-open
intervals (lo, lo + width] so that a partition of the circle assigns every
angle to exactly one sector.  All lengths are in arbitrary units (a.u.).
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from ._jit import njit

TWO_PI = 2.0 * math.pi


class Polar(NamedTuple):
    """Polar coordinates: ``radius >= 0`` and ``angle`` in (-pi, pi].

    The degenerate point (radius 0) carries angle 0 by convention.
    """

    radius: float
    angle: float


@njit(cache=True, nogil=True)
def wrap_angle(a: float) -> float:
    """Wrap a finite angle into the principal interval (-pi, pi].

    Idempotent: values already inside the interval are returned unchanged,
    bit for bit.
    """
    if -math.pi < a <= math.pi:
        return a
    w = a % TWO_PI  # in [0, 2*pi)
    if w > math.pi:
        w -= TWO_PI
    return w


@njit(cache=True, nogil=True)
def sector_contains(angle: float, lo: float, width: float) -> bool:
    """True iff ``angle`` lies in the half-open circular sector (lo, lo + width].

    ``width`` must be in (0, 2*pi]; a width of exactly 2*pi contains every
    angle.  Membership is evaluated modulo 2*pi, so the sector may straddle
    the principal-interval boundary.
    """
    if width >= TWO_PI:
        return True
    d = (angle - lo) % TWO_PI
    return 0.0 < d <= width


@njit(cache=True, nogil=True)
def _hull_area(pts: np.ndarray) -> float:
    """Convex-hull area of an (n, 2) float64 array via monotone chain + shoelace."""
    n = pts.shape[0]
    if n < 3:
        return 0.0
    order = np.arange(n)
    # Insertion sort by (x, y); n stays small in every caller.
    for i in range(1, n):
        j = i
        while j > 0:
            a = order[j - 1]
            b = order[j]
            if pts[a, 0] > pts[b, 0] or (
                pts[a, 0] == pts[b, 0] and pts[a, 1] > pts[b, 1]
            ):
                order[j - 1] = b
                order[j] = a
                j -= 1
            else:
                break
    hull = np.empty((2 * n + 1, 2))
    k = 0
    for idx in range(n):
        px = pts[order[idx], 0]
        py = pts[order[idx], 1]
        while k >= 2 and (
            (hull[k - 1, 0] - hull[k - 2, 0]) * (py - hull[k - 2, 1])
            - (hull[k - 1, 1] - hull[k - 2, 1]) * (px - hull[k - 2, 0])
        ) <= 0.0:
            k -= 1
        hull[k, 0] = px
        hull[k, 1] = py
        k += 1
    lower = k + 1
    for idx in range(n - 2, -1, -1):
        px = pts[order[idx], 0]
        py = pts[order[idx], 1]
        while k >= lower and (
            (hull[k - 1, 0] - hull[k - 2, 0]) * (py - hull[k - 2, 1])
            - (hull[k - 1, 1] - hull[k - 2, 1]) * (px - hull[k - 2, 0])
        ) <= 0.0:
            k -= 1
        hull[k, 0] = px
        hull[k, 1] = py
        k += 1
    # hull[0 : k-1] is the hull boundary counter-clockwise, hull[k-1] == hull[0].
    area = 0.0
    for i in range(k - 1):
        area += hull[i, 0] * hull[i + 1, 1] - hull[i + 1, 0] * hull[i, 1]
    return 0.5 * abs(area)


def convex_hull_area(points) -> float:
    """Area of the convex hull of a set of planar points.

    Duplicate and collinear inputs are fine; fewer than 3 distinct
    non-collinear points (including the empty set) give area 0.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.size == 0:
        return 0.0
    pts = np.ascontiguousarray(pts.reshape(-1, 2))
    return float(_hull_area(pts))


def to_polar(p, origin=(0.0, 0.0)) -> Polar:
    """Polar coordinates of point ``p`` about ``origin``.

    ``p == origin`` is degenerate and maps to ``Polar(0.0, 0.0)``.
    """
    dx = float(p[0]) - float(origin[0])
    dy = float(p[1]) - float(origin[1])
    radius = math.hypot(dx, dy)
    if radius == 0.0:
        return Polar(0.0, 0.0)
    angle = math.atan2(dy, dx)
    if angle <= -math.pi:  # atan2 can yield -pi for dy == -0.0
        angle = math.pi
    return Polar(radius, angle)


def to_cartesian(polar: Polar, origin=(0.0, 0.0)) -> np.ndarray:
    """Cartesian point for polar coordinates about ``origin``."""
    r, a = polar
    return np.array(
        [origin[0] + r * math.cos(a), origin[1] + r * math.sin(a)], dtype=np.float64
    )
