"""Moebius primitives and sampling grids on the half-planes and the real line."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import EmptyGrid, PoleAtMinusI, PoleAtOne

EXCLUSION_RADIUS = 1e-3

DEFAULT_X = (-3.0, -2.0, -1.0, -0.5, 0.5, 1.0, 2.0, 3.0)
DEFAULT_Y = (0.01, 0.1, 1.0, 10.0)


def blaschke_b(z: complex) -> complex:
    """The Blaschke factor ``(z - i)/(z + i)``."""
    z = complex(z)
    if z == -1j:
        raise PoleAtMinusI("b has a pole at z = -i")
    return (z - 1j) / (z + 1j)


def blaschke_b_inverse(w: complex) -> complex:
    """Inverse of :func:`blaschke_b`, mapping the disk back to the upper half-plane."""
    w = complex(w)
    if w == 1:
        raise PoleAtOne("b^{-1} has a pole at w = 1")
    return 1j * (1 + w) / (1 - w)


@dataclass(frozen=True)
class Exclusions:
    """Points and real intervals to keep away from.

    A point is dropped from a grid when it lies within ``radius`` of an
    excluded point, or is real (or within ``radius`` of the real axis for
    boundary grids) inside an excluded interval.
    """

    points: tuple = ()
    intervals: tuple = ()
    radius: float = EXCLUSION_RADIUS

    def excludes(self, z: complex) -> bool:
        for p in self.points:
            if abs(z - p) < self.radius:
                return True
        for lo, hi in self.intervals:
            if abs(z.imag) < self.radius and lo - self.radius <= z.real <= hi + self.radius:
                return True
        return False

    def merged(self, other: "Exclusions") -> "Exclusions":
        return Exclusions(
            tuple(self.points) + tuple(other.points),
            tuple(self.intervals) + tuple(other.intervals),
            max(self.radius, other.radius),
        )


@dataclass(frozen=True)
class GridSpec:
    """Declarative description of a sampling grid.

    Parameters
    ----------
    region : {"upper", "lower", "both", "boundary"}
    x_values : explicit abscissae; if omitted, ``x_range`` and ``x_step`` (or
        ``count`` for boundary grids) generate equispaced values.
    y_values : ordinates for half-plane grids (positive numbers).
    exclusions : zones removed after generation.
    """

    region: str = "both"
    x_values: tuple | None = None
    x_range: tuple | None = None
    x_step: float | None = None
    count: int | None = None
    y_values: tuple = DEFAULT_Y
    exclusions: Exclusions = field(default_factory=Exclusions)
    label: str = ""


@dataclass(frozen=True)
class PointGrid:
    points: tuple
    label: str = ""

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def upper(self) -> "PointGrid":
        return PointGrid(tuple(p for p in self.points if p.imag > 0), self.label + "+")

    def lower(self) -> "PointGrid":
        return PointGrid(tuple(p for p in self.points if p.imag < 0), self.label + "-")


def _abscissae(spec: GridSpec) -> list[float]:
    if spec.x_values is not None:
        return [float(x) for x in spec.x_values]
    if spec.x_range is None:
        return list(DEFAULT_X)
    lo, hi = (float(v) for v in spec.x_range)
    if spec.x_step is not None:
        m = int(np.floor((hi - lo) / spec.x_step + 1e-9))
        return [lo + k * spec.x_step for k in range(m + 1)]
    count = spec.count or 100
    if count == 1:
        return [0.5 * (lo + hi)]
    return list(np.linspace(lo, hi, count))


def make_grid(spec: GridSpec) -> PointGrid:
    xs = _abscissae(spec)
    if spec.region == "boundary":
        pts = [complex(x, 0.0) for x in xs]
    else:
        signs = {"upper": (1,), "lower": (-1,), "both": (1, -1)}.get(spec.region)
        if signs is None:
            raise ValueError(f"unknown grid region {spec.region!r}")
        if any(y <= 0 for y in spec.y_values):
            raise ValueError("y values must be positive")
        pts = [complex(x, s * y) for s in signs for y in spec.y_values for x in xs]
    kept = tuple(p for p in pts if not spec.exclusions.excludes(p))
    if not kept:
        raise EmptyGrid("every grid point was excluded")
    return PointGrid(kept, spec.label or spec.region)


def default_grid(exclusions: Exclusions | None = None) -> PointGrid:
    """The 64-point two-sided verification grid, minus ``exclusions``."""
    return make_grid(GridSpec(region="both", x_values=DEFAULT_X, exclusions=exclusions or Exclusions(), label="default"))


def boundary_grid(lo: float, hi: float, count: int, exclusions: Exclusions | None = None) -> PointGrid:
    return make_grid(GridSpec(region="boundary", x_range=(lo, hi), count=count,
                              exclusions=exclusions or Exclusions(), label="boundary"))


def radial_sequence(x0, depth: int) -> list[complex]:
    """Approach sequence toward a boundary point.

    ``x0`` real gives ``x0 + i 2^-m`` in the upper half-plane; ``x0 = "disk"``
    gives the radii ``1 - 2^-m`` toward the disk boundary point 1.
    """
    if depth < 1:
        raise ValueError("depth must be positive")
    ms = range(1, depth + 1)
    if isinstance(x0, str):
        if x0 != "disk":
            raise ValueError(f"unknown target {x0!r}")
        return [complex(1.0 - 2.0 ** -m) for m in ms]
    return [complex(float(x0), 2.0 ** -m) for m in ms]


def pairs(points: Sequence[complex], same_half: bool | None = None):
    """All ordered pairs (lam, z) of grid points, optionally filtered by half-plane."""
    for lam in points:
        for z in points:
            if same_half is True and (lam.imag > 0) != (z.imag > 0):
                continue
            yield lam, z
