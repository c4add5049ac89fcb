"""Capsule primitives and exact segment-segment distance."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_EPS = 1e-12


@dataclass(frozen=True)
class Capsule:
    """Line segment swept by a sphere.

    ``config_id`` ties a stored capsule back to the roadmap node whose
    configuration produced it.
    """

    start: np.ndarray
    end: np.ndarray
    radius: float
    config_id: int = -1

    def __post_init__(self):
        object.__setattr__(self, "start", np.asarray(self.start, dtype=float))
        object.__setattr__(self, "end", np.asarray(self.end, dtype=float))
        if self.radius <= 0.0:
            raise ValueError("capsule radius must be positive")


def segment_distance(p1, p2, q1, q2) -> float:
    """Minimum distance between segments [p1, p2] and [q1, q2].

    Degenerate (point) segments are allowed. Clamped closest-point solve on
    the two parameters, following the classic segment-segment recipe.
    """
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    q1 = np.asarray(q1, dtype=float)
    q2 = np.asarray(q2, dtype=float)
    u = p2 - p1
    v = q2 - q1
    w = p1 - q1
    a = float(u @ u)
    b = float(u @ v)
    c = float(v @ v)
    d = float(u @ w)
    e = float(v @ w)
    den = a * c - b * b

    sn, sd = 0.0, den
    tn, td = 0.0, den
    if den < _EPS:
        sn, sd = 0.0, 1.0
        tn, td = e, c
    else:
        sn = b * e - c * d
        tn = a * e - b * d
        if sn < 0.0:
            sn = 0.0
            tn, td = e, c
        elif sn > sd:
            sn = sd
            tn, td = e + b, c

    if tn < 0.0:
        tn = 0.0
        if -d < 0.0:
            sn = 0.0
        elif -d > a:
            sn = sd
        else:
            sn, sd = -d, a
    elif tn > td:
        tn = td
        if -d + b < 0.0:
            sn = 0.0
        elif -d + b > a:
            sn = sd
        else:
            sn, sd = -d + b, a

    s = 0.0 if sd < _EPS else sn / sd
    t = 0.0 if td < _EPS else tn / td
    diff = w + s * u - t * v
    return float(np.linalg.norm(diff))


def capsule_distance(c1: Capsule, c2: Capsule) -> float:
    """Surface distance of two capsules (0 when they overlap)."""
    d = segment_distance(c1.start, c1.end, c2.start, c2.end)
    return max(0.0, d - c1.radius - c2.radius)


def capsules_intersect(c1: Capsule, c2: Capsule) -> bool:
    return segment_distance(c1.start, c1.end, c2.start, c2.end) \
        <= c1.radius + c2.radius
