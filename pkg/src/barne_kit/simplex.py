"""Integer points of the Byzantine-rational simplex and distances between them."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import MismatchedPointsError

INFINITY = "infinity"
TWO_STAR = "two_star"
NORMS = (INFINITY, TWO_STAR)


@dataclass(frozen=True)
class SimplexPoint:
    """A population split of n agents into f Byzantine and g rational; h = n - f - g."""

    f: int
    g: int
    n: int

    def __post_init__(self):
        if self.n < 0:
            raise ValueError(f"population size must be non-negative, got n={self.n}")
        if self.f < 0 or self.g < 0:
            raise ValueError(f"counts must be non-negative, got f={self.f}, g={self.g}")
        if self.f + self.g > self.n:
            raise ValueError(f"f + g = {self.f + self.g} exceeds n = {self.n}")

    @property
    def h(self) -> int:
        return self.n - self.f - self.g


def norm_distance(a: SimplexPoint, b: SimplexPoint, which: str = INFINITY) -> float:
    """Distance between two points of the same simplex.

    The infinity norm is max(|df|, |dg|).  The two-star norm embeds the points
    back into three dimensions via h = n - f - g and rescales the Euclidean
    norm by 1/sqrt(2) so that any single agent changing type moves the
    population by exactly distance 1.
    """
    if a.n != b.n:
        raise MismatchedPointsError(f"points live in different simplexes: n={a.n} vs n={b.n}")
    df = a.f - b.f
    dg = a.g - b.g
    if which == INFINITY:
        return float(max(abs(df), abs(dg)))
    if which == TWO_STAR:
        return math.sqrt((df * df + dg * dg + (df + dg) ** 2) / 2.0)
    raise ValueError(f"unknown norm {which!r}, expected one of {NORMS}")


def lattice_ball(center: SimplexPoint, delta: float, which: str = INFINITY):
    """Integer simplex points within distance delta of ``center``.

    Points outside the simplex (negative counts or f + g > n) are not part of
    the lattice and are skipped rather than reported.
    """
    n = center.n
    for f in range(n + 1):
        for g in range(n - f + 1):
            point = SimplexPoint(f, g, n)
            if norm_distance(center, point, which) <= delta:
                yield point
