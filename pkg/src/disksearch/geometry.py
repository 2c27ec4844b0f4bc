"""Planar points, regular n-gon vertices and unit-speed parametrizations."""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class PlanarPoint:
    x: float
    y: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite coordinates ({self.x}, {self.y})")

    def __sub__(self, other: PlanarPoint) -> PlanarPoint:
        return PlanarPoint(self.x - other.x, self.y - other.y)

    def __add__(self, other: PlanarPoint) -> PlanarPoint:
        return PlanarPoint(self.x + other.x, self.y + other.y)

    def scaled(self, k: float) -> PlanarPoint:
        return PlanarPoint(k * self.x, k * self.y)

    def norm(self) -> float:
        return math.hypot(self.x, self.y)

    def dist(self, other: PlanarPoint) -> float:
        return math.hypot(self.x - other.x, self.y - other.y)

    def as_tuple(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True)
class NgonVertex:
    index: int
    n: int

    def __post_init__(self) -> None:
        _check_order(self.n)
        _check_index(self.index, self.n)

    def position(self) -> PlanarPoint:
        return vertex_position(self.index, self.n)


def _check_order(n: int) -> None:
    if n < 3:
        raise ValueError(f"gon order must be >= 3, got {n}")


def _check_index(i: int, n: int) -> None:
    if not 0 <= i < n:
        raise ValueError(f"vertex index {i} out of range for n={n}")


def vertex_position(i: int, n: int) -> PlanarPoint:
    """The i-th vertex (cos 2iπ/n, sin 2iπ/n) of the regular n-gon."""
    _check_order(n)
    _check_index(i, n)
    return circle_point(2.0 * math.pi * i / n)


def chord_steps(i: int, j: int, n: int) -> int:
    """Number of polygon sides separating vertices i and j (the shorter way round)."""
    _check_index(i, n)
    _check_index(j, n)
    k = abs(i - j)
    return min(k, n - k)


def chord_length(i: int, j: int, n: int) -> float:
    """Euclidean distance between vertices i and j, as 2 sin(πk/n)."""
    k = chord_steps(i, j, n)
    if k == 0:
        return 0.0
    return 2.0 * math.sin(math.pi * k / n)


def circle_point(t: float) -> PlanarPoint:
    return PlanarPoint(math.cos(t), math.sin(t))


def segment_point(t: float, a: PlanarPoint, b: PlanarPoint) -> PlanarPoint:
    """Position after time t of a unit-speed walk from a towards b."""
    length = a.dist(b)
    if length == 0.0:
        if t != 0.0:
            raise ValueError("degenerate segment admits only t = 0")
        return a
    if t < 0.0 or t > length:
        raise ValueError(f"t={t} outside [0, {length}]")
    return a + (b - a).scaled(t / length)
