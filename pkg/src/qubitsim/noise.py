"""Time-correlated noise.

A noise realization is fixed by its value at one reference time (the first
measurement time); every other value follows by rotation, so nothing is
stored as a function of continuous time.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from qubitsim.geometry import (
    Rotation,
    SeededRng,
    UnitVec3,
    points_from_uniforms,
    rotate,
    rotation_from_axis_angle,
)

Evolution = Callable[[float], Rotation]


@dataclass(frozen=True)
class NoisePair:
    """The two independent noise vectors ``(x_+1, x_-1)`` at the reference time."""

    y_plus: UnitVec3
    y_minus: UnitVec3

    def member(self, r: int) -> UnitVec3:
        return self.y_plus if r > 0 else self.y_minus

    @classmethod
    def from_uniforms(cls, u) -> NoisePair:
        """Build from one row of four uniforms, the layout the kernels use."""
        p = points_from_uniforms([u[0], u[2]], [u[1], u[3]])
        return cls(UnitVec3.from_array(p[0]), UnitVec3.from_array(p[1]))


def sample_noise_pair(rng: SeededRng) -> NoisePair:
    return NoisePair.from_uniforms(rng.uniforms(4))


def sample_noise_pairs(rng: SeededRng, size: int) -> tuple[np.ndarray, np.ndarray]:
    """Batch form: two ``(size, 3)`` arrays of independent sphere points."""
    u = rng.uniforms((size, 4))
    return points_from_uniforms(u[:, 0], u[:, 1]), points_from_uniforms(u[:, 2], u[:, 3])


def propagate(pair: NoisePair, rot: Rotation) -> NoisePair:
    return NoisePair(rotate(rot, pair.y_plus), rotate(rot, pair.y_minus))


@dataclass(frozen=True)
class RabiEvolution:
    """Uniform rotation about ``axis`` at angular rate ``omega``.

    Calling it with ``t`` returns ``R(t_ref, t)``.
    """

    axis: UnitVec3
    omega: float
    t_ref: float = 0.0

    def __call__(self, t: float) -> Rotation:
        return rotation_from_axis_angle(self.axis, self.omega * (t - self.t_ref))


def geodesic_evolution(rot: Rotation, t0: float = 0.0, t1: float = 1.0) -> RabiEvolution:
    """Constant-rate evolution reaching ``rot`` at ``t1`` from identity at ``t0``."""
    if t1 <= t0:
        raise ValueError("geodesic_evolution needs t1 > t0")
    axis, angle = rot.axis_angle()
    return RabiEvolution(axis, angle / (t1 - t0), t0)


@dataclass(frozen=True)
class NoiseTrace:
    times: tuple[float, ...]
    xi_plus: tuple[float, ...]
    xi_minus: tuple[float, ...]

    def xi(self, r: int) -> tuple[float, ...]:
        return self.xi_plus if r > 0 else self.xi_minus


def _check_grid(grid: Sequence[float]) -> list[float]:
    grid = [float(t) for t in grid]
    if not grid:
        raise ValueError("time grid is empty")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("time grid must be strictly increasing")
    return grid


def trace_projections(pair: NoisePair, evolution: Evolution, n: UnitVec3, grid: Sequence[float]) -> NoiseTrace:
    """Sample ``xi_r(t) = n . (R(t_ref, t) y_r)`` on ``grid`` (presentation only)."""
    grid = _check_grid(grid)
    xp, xm = [], []
    for t in grid:
        moved = propagate(pair, evolution(t))
        xp.append(n.dot(moved.y_plus))
        xm.append(n.dot(moved.y_minus))
    return NoiseTrace(tuple(grid), tuple(xp), tuple(xm))


TRACE_COLUMNS = ("time", "xi_plus", "xi_minus", "s", "r")


def trace_to_csv(rows, out=None) -> str:
    """Write ``(time, xi_plus, xi_minus, s, r)`` rows as CSV; returns the text."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_COLUMNS)
    for row in rows:
        w.writerow([repr(float(row[0])), repr(float(row[1])), repr(float(row[2])), int(row[3]), int(row[4])])
    text = buf.getvalue()
    if out is not None:
        out.write(text)
    return text
