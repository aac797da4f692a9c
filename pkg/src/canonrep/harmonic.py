"""Harmonic measure on the unit disk and piecewise-constant boundary data.

A representation node becomes boundary data on the circle by the angle
change theta = 2*pi*x: each cell turns into an arc carrying the cell's
value.  The harmonic extension of that data at an interior point is the
expectation of the boundary value at the Brownian exit point, so an
arc's harmonic measure is the exit probability through it.

The measure of an arc seen from z is computed conformally: the Mobius
map w -> (w - z) / (1 - conj(z) w) sends z to the origin and the arc to
another arc whose normalized length is the answer.  From the origin the
measure of an arc is exactly its length over 2*pi, and exit sampling
inverts the same map, so sampling needs no rejection anywhere.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import TooCloseToBoundary
from .representation import CellRepresentation, locate_node
from .process import ValuePath

TAU = 2.0 * math.pi

DEFAULT_BOUNDARY_EPS = 1e-6


@dataclass(frozen=True, eq=False)
class Arc:
    """Arc [lo, hi) of the circle, angles in radians, carrying a value."""

    lo: float
    hi: float
    value: np.ndarray


@dataclass(frozen=True, eq=False)
class ArcFunction:
    """Piecewise-constant boundary data tiling [0, 2*pi)."""

    arcs: tuple[Arc, ...]
    dimension: int

    def value_at(self, theta: float) -> np.ndarray:
        theta = theta % TAU
        for arc in self.arcs:
            if arc.lo <= theta < arc.hi:
                return arc.value
        return self.arcs[-1].value  # theta in the closing rounding gap


def arc_function(rep: CellRepresentation, prefix: ValuePath) -> ArcFunction:
    """Boundary data of the node reached by a realizable value prefix."""
    node = locate_node(rep, prefix)
    arcs = tuple(
        Arc(
            TAU * float(cell.interval.lo),
            TAU * float(cell.interval.hi),
            np.array([float(c) for c in cell.value]),
        )
        for cell in node.cells
    )
    return ArcFunction(arcs, rep.dimension)


def _as_complex(z) -> complex:
    if isinstance(z, complex):
        return z
    if isinstance(z, (tuple, list, np.ndarray)):
        return complex(z[0], z[1])
    return complex(z)


def _boundary_angle(z: complex, theta: float) -> float:
    w = cmath.exp(1j * theta)
    return cmath.phase((w - z) / (1.0 - z.conjugate() * w))


def harmonic_measure(z, arc, boundary_eps: float = DEFAULT_BOUNDARY_EPS) -> float:
    """Probability that Brownian motion from z exits through the arc.

    ``arc`` is an Arc or an (angle_lo, angle_hi) pair with
    0 <= hi - lo <= 2*pi.  From the center the result is exactly the arc
    length over 2*pi.
    """
    if isinstance(arc, Arc):
        lo, hi = arc.lo, arc.hi
    else:
        lo, hi = arc
    if hi < lo:
        raise ValueError(f"arc has hi {hi} < lo {lo}")
    span = hi - lo
    if span > TAU:
        raise ValueError(f"arc span {span} exceeds the full circle")
    z = _as_complex(z)
    r = abs(z)
    if r >= 1.0 - boundary_eps:
        raise TooCloseToBoundary(f"|z| = {r} within {boundary_eps} of the circle")
    if span == TAU:
        return 1.0
    if r == 0.0:
        return span / TAU
    delta = (_boundary_angle(z, hi) - _boundary_angle(z, lo)) % TAU
    return delta / TAU


def harmonic_extension(
    af: ArcFunction, z, boundary_eps: float = DEFAULT_BOUNDARY_EPS
) -> np.ndarray:
    """Harmonic extension of the boundary data at an interior point."""
    out = np.zeros(af.dimension)
    for arc in af.arcs:
        out += arc.value * harmonic_measure(z, arc, boundary_eps)
    return out


def exit_angle(z, u: float) -> float:
    """Exit angle with uniform driver u in [0, 1): closed-form inverse CDF.

    Pushes the uniform angle 2*pi*u through the inverse Mobius map, so
    the distribution over any arc equals its harmonic measure from z.
    """
    z = _as_complex(z)
    w = cmath.exp(1j * TAU * u)
    t = (w + z) / (1.0 + z.conjugate() * w)
    return cmath.phase(t) % TAU


def sample_exit(z, rng: np.random.Generator) -> float:
    """Draw one Brownian exit angle from z (exact, no path simulation)."""
    return exit_angle(z, float(rng.random()))
