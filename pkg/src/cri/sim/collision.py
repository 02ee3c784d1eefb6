"""Oriented-box overlap via the separating axis test."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# touching boxes count as overlapping; absorbs rounding in the projections
TOUCH_TOL = 1e-9


@dataclass(frozen=True)
class Box:
    x: float
    y: float
    heading: float
    half_length: float
    half_width: float

    def axes(self) -> tuple[tuple[float, float], tuple[float, float]]:
        c, s = math.cos(self.heading), math.sin(self.heading)
        return (c, s), (-s, c)

    def corners(self) -> np.ndarray:
        (ux, uy), (vx, vy) = self.axes()
        hl, hw = self.half_length, self.half_width
        return np.array(
            [
                (self.x + ux * hl + vx * hw, self.y + uy * hl + vy * hw),
                (self.x - ux * hl + vx * hw, self.y - uy * hl + vy * hw),
                (self.x - ux * hl - vx * hw, self.y - uy * hl - vy * hw),
                (self.x + ux * hl - vx * hw, self.y + uy * hl - vy * hw),
            ]
        )


def _radius(box: Box, ax: float, ay: float) -> float:
    (ux, uy), (vx, vy) = box.axes()
    return box.half_length * abs(ux * ax + uy * ay) + box.half_width * abs(vx * ax + vy * ay)


def separation(a: Box, b: Box) -> float:
    """Largest gap between the projections over the four candidate axes.

    Positive means the boxes are apart by at least that much along some
    axis; zero or negative means overlap (minus the penetration depth).
    """
    dx, dy = b.x - a.x, b.y - a.y
    best = -math.inf
    for ax, ay in (*a.axes(), *b.axes()):
        gap = abs(dx * ax + dy * ay) - _radius(a, ax, ay) - _radius(b, ax, ay)
        if gap > best:
            best = gap
    return best


def boxes_overlap(a: Box, b: Box) -> bool:
    return separation(a, b) <= TOUCH_TOL
