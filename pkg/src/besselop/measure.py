"""Geometry of the half-line with the power measure x^r dx."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import DomainError, UsageError


def _finite_positive(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise DomainError(f"{name} must be finite, got {value!r}")
    if value <= 0:
        raise UsageError(f"{name} must be positive, got {value!r}")
    return value


@dataclass(frozen=True)
class BesselSpace:
    """The half-line (0, inf) with measure x^r dx; n = r + 1 is the
    homogeneous dimension that drives every exponent."""

    r: float

    def __post_init__(self):
        object.__setattr__(self, "r", _finite_positive("r", self.r))

    @property
    def n(self) -> float:
        return self.r + 1.0


@dataclass(frozen=True)
class Interval:
    """Centered interval; the realized set is (max(0, c - a), c + a)."""

    center: float
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", _finite_positive("center", self.center))
        object.__setattr__(self, "radius", _finite_positive("radius", self.radius))

    @property
    def lower(self) -> float:
        return max(0.0, self.center - self.radius)

    @property
    def upper(self) -> float:
        return self.center + self.radius

    def scaled(self, factor: float) -> "Interval":
        return Interval(self.center, self.radius * factor)

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        return (x > self.lower) & (x < self.upper) & (x > 0)


def measure_of_segment(space: BesselSpace, lo: float, hi: float) -> float:
    """mu((lo, hi)) in closed form, with the segment clipped to the half-line."""
    lo = max(0.0, float(lo))
    hi = max(lo, float(hi))
    n = space.n
    return (hi**n - lo**n) / n


def ball_volume(space: BesselSpace, interval: Interval) -> float:
    return measure_of_segment(space, interval.lower, interval.upper)


def doubling_constant(space: BesselSpace, samples: Iterable[Interval]) -> float:
    """Largest observed mu(2I)/mu(I) over the sample intervals."""
    samples = list(samples)
    if not samples:
        raise UsageError("doubling_constant needs at least one interval")
    return max(ball_volume(space, I.scaled(2.0)) / ball_volume(space, I) for I in samples)


@dataclass(frozen=True)
class Annulus:
    """Points of the open segment ``outer`` that are not in the open segment
    ``hole`` (no hole for the innermost piece)."""

    outer: tuple[float, float]
    hole: tuple[float, float] | None = None

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x > self.outer[0]) & (x < self.outer[1]) & (x > 0)
        if self.hole is not None:
            inside &= ~((x > self.hole[0]) & (x < self.hole[1]))
        return inside

    def measure(self, space: BesselSpace) -> float:
        total = measure_of_segment(space, *self.outer)
        if self.hole is not None:
            total -= measure_of_segment(space, *self.hole)
        return total


def dyadic_annulus(interval: Interval, j: int) -> Annulus:
    """S_0 = I and S_j = 2^j I minus 2^{j-1} I for j >= 1."""
    if j < 0 or int(j) != j:
        raise UsageError(f"annulus index must be a nonnegative integer, got {j!r}")
    j = int(j)
    big = interval.scaled(2.0**j)
    if j == 0:
        return Annulus((big.lower, big.upper))
    small = interval.scaled(2.0 ** (j - 1))
    return Annulus((big.lower, big.upper), (small.lower, small.upper))
