"""Closed-form probabilities and the quadrature check of the KS reduction."""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from qubitsim.geometry import UnitVec3

DOT_TOL = 1e-9


def _dot(a: UnitVec3, b: UnitVec3) -> float:
    c = a.dot(b)
    if abs(c) > 1.0 + DOT_TOL:
        raise ValueError(f"dot product {c} of unit vectors outside [-1, 1]")
    return min(1.0, max(-1.0, c))


def pq(s0: int, s1: int, n: UnitVec3, v: UnitVec3) -> float:
    """Quantum probability of outcome ``s1`` after ``s0``: ``(1 + s1 s0 n.v) / 2``."""
    return 0.5 * (1.0 + s1 * s0 * _dot(n, v))


def pe(s0: int, s1: int, v0: UnitVec3, v1: UnitVec3) -> float:
    """Joint outcome distribution of the entangled pair: ``(1 + s0 s1 v0.v1) / 4``."""
    return 0.25 * (1.0 + s0 * s1 * _dot(v0, v1))


def rho_ks(x: UnitVec3, w: UnitVec3) -> float:
    """Kochen-Specker density of state ``w`` at ``x`` on the sphere."""
    c = w.dot(x)
    return c / math.pi if c > 0.0 else 0.0


def rho_ks_array(x: np.ndarray, w: np.ndarray) -> np.ndarray:
    c = np.asarray(x) @ np.asarray(w)
    return np.where(c > 0.0, c / math.pi, 0.0)


def _frame(pole: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Two unit vectors completing ``pole`` to a right-handed orthonormal frame."""
    helper = np.array([1.0, 0.0, 0.0]) if abs(pole[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = np.cross(pole, helper)
    e1 /= np.linalg.norm(e1)
    return e1, np.cross(pole, e1)


def sphere_quadrature(
    f: Callable[[np.ndarray], np.ndarray],
    pole=(0.0, 0.0, 1.0),
    n_polar: int = 256,
    n_azimuth: int = 4096,
    cos_range: tuple[float, float] = (-1.0, 1.0),
) -> float:
    """Integrate ``f`` over the unit sphere (area element ``d^2x``).

    Gauss-Legendre in the cosine of the angle from ``pole`` (restricted to
    ``cos_range``) times the periodic trapezoid rule in azimuth.  ``f`` takes an
    ``(M, 3)`` array of points and returns ``M`` values.
    """
    pole = np.asarray(pole, dtype=float)
    pole = pole / np.linalg.norm(pole)
    e1, e2 = _frame(pole)
    nodes, weights = np.polynomial.legendre.leggauss(n_polar)
    lo, hi = cos_range
    c = 0.5 * (hi - lo) * nodes + 0.5 * (hi + lo)
    wc = 0.5 * (hi - lo) * weights
    beta = (np.arange(n_azimuth) + 0.5) * (2.0 * math.pi / n_azimuth)
    s = np.sqrt(1.0 - c * c)
    pts = (
        c[:, None, None] * pole
        + (s[:, None] * np.cos(beta))[:, :, None] * e1
        + (s[:, None] * np.sin(beta))[:, :, None] * e2
    )
    vals = np.asarray(f(pts.reshape(-1, 3)), dtype=float).reshape(n_polar, n_azimuth)
    return float(np.sum(wc[:, None] * vals) * (2.0 * math.pi / n_azimuth))


def ks_transition_integral(
    s0: int,
    s1: int,
    n: UnitVec3,
    v: UnitVec3,
    n_polar: int = 256,
    n_azimuth: int = 4096,
) -> float:
    """Quadrature of ``int d^2x theta(s0 n.x) rho_ks(x; s1 v)``.

    Integrates over the hemisphere around ``s1 v`` where the KS density is
    supported; the result should reproduce :func:`pq`.
    """
    w = s1 * v.as_array()
    na = s0 * n.as_array()

    def integrand(x):
        return np.where(x @ na >= 0.0, 1.0, 0.0) * rho_ks_array(x, w)

    return sphere_quadrature(integrand, w, n_polar, n_azimuth, cos_range=(0.0, 1.0))
