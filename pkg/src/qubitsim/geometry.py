"""Bloch-sphere primitives: unit vectors, rotations, seeded random streams."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

NORM_TOL = 1e-9


class GeometryError(ValueError):
    pass


def sign(a: float) -> int:
    """Sign with the repository-wide tie rule ``sign(0) = +1``."""
    return 1 if a >= 0.0 else -1


@dataclass(frozen=True)
class UnitVec3:
    x: float
    y: float
    z: float

    def __post_init__(self):
        for name in ("x", "y", "z"):
            object.__setattr__(self, name, float(getattr(self, name)))
        norm2 = self.x * self.x + self.y * self.y + self.z * self.z
        if abs(math.sqrt(norm2) - 1.0) > NORM_TOL:
            raise GeometryError(f"not a unit vector: ({self.x}, {self.y}, {self.z}), norm {math.sqrt(norm2)}")

    @classmethod
    def from_array(cls, a) -> UnitVec3:
        a = np.asarray(a, dtype=float)
        return cls(float(a[0]), float(a[1]), float(a[2]))

    @classmethod
    def normalized(cls, a) -> UnitVec3:
        a = np.asarray(a, dtype=float)
        norm = float(np.linalg.norm(a))
        if norm == 0.0:
            raise GeometryError("cannot normalize the zero vector")
        return cls.from_array(a / norm)

    @classmethod
    def from_spherical(cls, theta: float, phi: float) -> UnitVec3:
        """Polar angle ``theta`` from +z, azimuth ``phi`` from +x."""
        st = math.sin(theta)
        return cls(st * math.cos(phi), st * math.sin(phi), math.cos(theta))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    def dot(self, other: UnitVec3) -> float:
        return self.x * other.x + self.y * other.y + self.z * other.z

    def __neg__(self) -> UnitVec3:
        return UnitVec3(-self.x, -self.y, -self.z)


X_AXIS = UnitVec3(1.0, 0.0, 0.0)
Y_AXIS = UnitVec3(0.0, 1.0, 0.0)
Z_AXIS = UnitVec3(0.0, 0.0, 1.0)


@dataclass(frozen=True, eq=False)
class Rotation:
    """An SO(3) element stored as an explicit 3x3 matrix."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.shape != (3, 3):
            raise GeometryError(f"rotation matrix must be 3x3, got {m.shape}")
        if not np.allclose(m @ m.T, np.eye(3), rtol=0.0, atol=NORM_TOL):
            raise GeometryError("rotation matrix is not orthogonal")
        if abs(np.linalg.det(m) - 1.0) > NORM_TOL:
            raise GeometryError("rotation matrix has determinant != +1")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def __eq__(self, other):
        if not isinstance(other, Rotation):
            return NotImplemented
        return bool(np.array_equal(self.matrix, other.matrix))

    def __hash__(self):
        return hash(self.matrix.tobytes())

    @classmethod
    def identity(cls) -> Rotation:
        return cls(np.eye(3))

    @property
    def T(self) -> Rotation:
        return Rotation(self.matrix.T)

    def __matmul__(self, other: Rotation) -> Rotation:
        return compose(self, other)

    def axis_angle(self) -> tuple[UnitVec3, float]:
        """Return ``(axis, angle)`` with angle in [0, pi]."""
        m = self.matrix
        cos_a = min(1.0, max(-1.0, (np.trace(m) - 1.0) / 2.0))
        angle = math.acos(cos_a)
        if angle < 1e-12:
            return Z_AXIS, 0.0
        if math.pi - angle < 1e-6:
            # near a half-turn: the axis is the dominant column of (M + I) / 2
            b = (m + np.eye(3)) / 2.0
            k = int(np.argmax(np.diag(b)))
            return UnitVec3.normalized(b[:, k]), angle
        axis = np.array([m[2, 1] - m[1, 2], m[0, 2] - m[2, 0], m[1, 0] - m[0, 1]])
        return UnitVec3.normalized(axis), angle


def rotation_from_axis_angle(axis: UnitVec3, angle: float) -> Rotation:
    """Rodrigues rotation by ``angle`` radians about ``axis`` (right-handed)."""
    if not isinstance(axis, UnitVec3):
        a = np.asarray(axis, dtype=float)
        if abs(float(np.linalg.norm(a)) - 1.0) > NORM_TOL:
            raise GeometryError("rotation axis must be a unit vector")
        axis = UnitVec3.from_array(a)
    k = axis.as_array()
    kx = np.array([[0.0, -k[2], k[1]], [k[2], 0.0, -k[0]], [-k[1], k[0], 0.0]])
    m = np.eye(3) + math.sin(angle) * kx + (1.0 - math.cos(angle)) * (kx @ kx)
    return Rotation(m)


def compose(a: Rotation, b: Rotation) -> Rotation:
    """``compose(a, b)`` applies ``b`` first, then ``a``."""
    return Rotation(a.matrix @ b.matrix)


def rotate(rot: Rotation, x: UnitVec3) -> UnitVec3:
    m = rot.matrix
    return UnitVec3(
        m[0, 0] * x.x + m[0, 1] * x.y + m[0, 2] * x.z,
        m[1, 0] * x.x + m[1, 1] * x.y + m[1, 2] * x.z,
        m[2, 0] * x.x + m[2, 1] * x.y + m[2, 2] * x.z,
    )


def rabi_rotation(theta: float, axis: UnitVec3 = X_AXIS) -> Rotation:
    """Rotation by ``theta`` about ``axis``; with the default axis and the
    z measurement axis this is a Rabi evolution with ``n.v = cos(theta)``."""
    return rotation_from_axis_angle(axis, theta)


def planar_axis(angle: float) -> UnitVec3:
    """Unit vector in the x-z plane at ``angle`` from +z."""
    return UnitVec3(math.sin(angle), 0.0, math.cos(angle))


@dataclass(frozen=True)
class SeededRng:
    """A reproducible random stream keyed by ``(seed, stream)``.

    Backed by the counter-based Philox generator.  ``split(i)`` derives a
    child stream; distinct paths give disjoint, independent sequences, so
    parallel workers can each own one.
    """

    seed: int
    stream: int | tuple[int, ...] = 0
    _generator: np.random.Generator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        path = self.path
        if any(not 0 <= p < 2**64 for p in path):
            raise ValueError(f"stream ids must be 64-bit unsigned integers, got {self.stream}")
        object.__setattr__(self, "_generator", np.random.Generator(self.bit_generator()))

    @property
    def path(self) -> tuple[int, ...]:
        return self.stream if isinstance(self.stream, tuple) else (self.stream,)

    @property
    def key(self) -> np.ndarray:
        ss = np.random.SeedSequence(self.seed, spawn_key=self.path)
        return ss.generate_state(2, np.uint64)

    def bit_generator(self, counter: int = 0) -> np.random.Philox:
        """A fresh Philox positioned ``counter`` blocks (4 doubles each) in."""
        bg = np.random.Philox(key=self.key)
        if counter:
            bg = bg.advance(counter)
        return bg

    @property
    def generator(self) -> np.random.Generator:
        return self._generator

    def split(self, i: int) -> SeededRng:
        return SeededRng(self.seed, self.path + (i,))

    def uniforms(self, size) -> np.ndarray:
        return self._generator.random(size)


def points_from_uniforms(u0, u1) -> np.ndarray:
    """Map uniforms to sphere points: ``z = 2u0 - 1``, azimuth ``2 pi u1``.

    Exactly uniform on the sphere (Archimedes), one draw pair per point.
    """
    u0 = np.asarray(u0, dtype=float)
    u1 = np.asarray(u1, dtype=float)
    z = 2.0 * u0 - 1.0
    rho = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    phi = 2.0 * math.pi * u1
    return np.stack([rho * np.cos(phi), rho * np.sin(phi), z], axis=-1)


def sample_uniform_sphere(rng: SeededRng) -> UnitVec3:
    u0, u1 = rng.uniforms(2)
    return UnitVec3.from_array(points_from_uniforms(u0, u1))


def sample_uniform_sphere_batch(rng: SeededRng, size: int) -> np.ndarray:
    u = rng.uniforms((size, 2))
    return points_from_uniforms(u[:, 0], u[:, 1])
