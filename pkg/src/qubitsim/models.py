"""The two classical stochastic qubit models.

Model 1 keeps a single bit ``s`` that flips whenever ``n . x(t)`` changes
sign; measurements do not disturb it.  Model 2 adds a second bit ``r``,
reset by each measurement to the index of the noise vector with the larger
squared projection on ``n``; ``s`` then follows the sign changes of
``n . x_r(t)``.  Model 2 reproduces the quantum transition probability
exactly, Model 1 gives the triangle law ``1 - arccos(s1 s0 n.v) / pi``.

Transitions use the endpoint rule: the parity of the sign changes between
two times is the sign product of the projections at those times.  The
grid-based tracer exists only to draw trajectories.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

from qubitsim import _core
from qubitsim.analytic import pq
from qubitsim.geometry import (
    Rotation,
    SeededRng,
    UnitVec3,
    rotate,
    sample_uniform_sphere,
    sign,
)
from qubitsim.noise import (
    Evolution,
    NoisePair,
    geodesic_evolution,
    sample_noise_pair,
    trace_projections,
)
from qubitsim.stats import BinomialCount, Estimate, sigma_distance

CHUNK = 1 << 18
MODELS = ("model1", "model2")


def _check_bit(b: int, name: str) -> int:
    if b not in (1, -1):
        raise ValueError(f"{name} must be +1 or -1, got {b!r}")
    return b


@dataclass(frozen=True)
class QubitClassicalState:
    s: int
    r: int | None = None

    def __post_init__(self):
        _check_bit(self.s, "s")
        if self.r is not None:
            _check_bit(self.r, "r")


@dataclass(frozen=True)
class TransitionConfig:
    n: UnitVec3
    R: Rotation
    s0: int = 1
    samples: int = 1_000_000
    seed: int = 0

    def __post_init__(self):
        _check_bit(self.s0, "s0")
        if self.samples < 1:
            raise ValueError(f"samples must be >= 1, got {self.samples}")

    @property
    def v(self) -> UnitVec3:
        return rotate(self.R, self.n)

    def as_dict(self):
        return {
            "n": [self.n.x, self.n.y, self.n.z],
            "R": self.R.matrix.tolist(),
            "s0": self.s0,
            "samples": self.samples,
            "seed": self.seed,
        }


# -- Model 1 ---------------------------------------------------------------


def model1_outcome(x: UnitVec3, n: UnitVec3, R: Rotation, s0: int) -> int:
    """Deterministic Model 1 outcome for the noise value ``x`` at t0."""
    return s0 * sign(n.dot(x)) * sign(n.dot(rotate(R, x)))


def model1_transition(cfg: TransitionConfig, rng: SeededRng) -> int:
    return model1_outcome(sample_uniform_sphere(rng), cfg.n, cfg.R, cfg.s0)


def _clamped_dot(n: UnitVec3, v: UnitVec3) -> float:
    c = n.dot(v)
    if abs(c) > 1.0 + 1e-9:
        raise ValueError(f"|n.v| = {abs(c)} exceeds 1")
    return min(1.0, max(-1.0, c))


def model1_prob(s0: int, s1: int, n: UnitVec3, v: UnitVec3) -> float:
    """Triangle law ``1 - arccos(s1 s0 n.v) / pi``."""
    c = _clamped_dot(n, v)
    return 1.0 - math.acos(s1 * s0 * c) / math.pi


# -- Model 2 ---------------------------------------------------------------


def measure_update_r(pair: NoisePair, n: UnitVec3) -> int:
    """The invasive update: ``sign[(x_1 . n)^2 - (x_-1 . n)^2]``."""
    a = n.dot(pair.y_plus)
    b = n.dot(pair.y_minus)
    return sign(a * a - b * b)


def measure(state: QubitClassicalState, pair: NoisePair, n: UnitVec3) -> tuple[int, QubitClassicalState]:
    """Measure ``s``; returns the outcome and the post-measurement state.

    ``s`` is revealed unchanged; only ``r`` is rewritten.
    """
    return state.s, QubitClassicalState(state.s, measure_update_r(pair, n))


def model2_outcome(pair: NoisePair, n: UnitVec3, R: Rotation, s0: int) -> tuple[int, int]:
    """Deterministic Model 2 outcome ``(s1, r0)`` for noise fixed at t0."""
    r0 = measure_update_r(pair, n)
    y = pair.member(r0)
    return s0 * sign(n.dot(y)) * sign(n.dot(rotate(R, y))), r0


def model2_transition(cfg: TransitionConfig, rng: SeededRng) -> tuple[int, int]:
    return model2_outcome(sample_noise_pair(rng), cfg.n, cfg.R, cfg.s0)


# -- batch simulation ------------------------------------------------------


@dataclass(frozen=True)
class TransitionResult:
    model: str
    config: TransitionConfig
    stay: BinomialCount
    r_plus: BinomialCount | None = None

    @property
    def samples(self) -> int:
        return self.stay.trials

    def prob(self, s1: int) -> Estimate:
        """Empirical ``P(s1 | s0)``."""
        _check_bit(s1, "s1")
        count = self.stay if s1 == self.config.s0 else BinomialCount(self.stay.trials - self.stay.successes, self.stay.trials)
        return count.estimate()

    def oracle(self, s1: int) -> float:
        c = self.config
        if self.model == "model1":
            return model1_prob(c.s0, s1, c.n, c.v)
        return pq(c.s0, s1, c.n, c.v)

    def record(self, s1: int | None = None) -> dict:
        s1 = self.config.s0 if s1 is None else s1
        est = self.prob(s1)
        oracle = self.oracle(s1)
        return {
            "model": self.model,
            "config": self.config.as_dict(),
            "s1": s1,
            "empirical_p": est.mean,
            "oracle_p": oracle,
            "stderr": est.stderr,
            "sigma_distance": sigma_distance(est, oracle),
            "samples": self.samples,
            "seed": self.config.seed,
        }


def chunk_sizes(total: int, chunk: int = CHUNK) -> list[int]:
    full, rest = divmod(total, chunk)
    return [chunk] * full + ([rest] if rest else [])


def run_chunks(fn, total: int, workers: int = 1, chunk: int = CHUNK):
    """Apply ``fn(index, size)`` to every chunk and return the results in order.

    Chunk boundaries depend only on ``total`` and ``chunk``, so the outcome is
    independent of ``workers``.
    """
    jobs = list(enumerate(chunk_sizes(total, chunk)))
    if workers <= 1 or len(jobs) <= 1:
        return [fn(i, size) for i, size in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda job: fn(*job), jobs))


def simulate_transition(
    model: str,
    cfg: TransitionConfig,
    stream: int = 0,
    workers: int = 1,
    backend: str | None = None,
) -> TransitionResult:
    """Monte Carlo estimate of the two-measurement transition for ``model``.

    Each chunk ``i`` draws from ``SeededRng(cfg.seed, (stream, i))``.
    """
    if model not in MODELS:
        raise ValueError(f"unknown model {model!r}; expected one of {MODELS}")
    k = _core.get_backend(backend) if backend else _core.kernels
    n = cfg.n.as_array()
    w = cfg.R.matrix.T @ n
    rng = SeededRng(cfg.seed, stream)

    if model == "model1":

        def job(i, size):
            return k.model1_stay_count(rng.split(i).uniforms((size, 2)), n, w), 0

    else:

        def job(i, size):
            return k.model2_counts(rng.split(i).uniforms((size, 4)), n, w)

    parts = run_chunks(job, cfg.samples, workers)
    stay = sum(p[0] for p in parts)
    r_plus = sum(p[1] for p in parts)
    return TransitionResult(
        model,
        cfg,
        BinomialCount(stay, cfg.samples),
        BinomialCount(r_plus, cfg.samples) if model == "model2" else None,
    )


# -- trajectories ----------------------------------------------------------


@dataclass(frozen=True)
class TrajectoryPoint:
    time: float
    s: int
    r: int
    xi_plus: float
    xi_minus: float

    def row(self):
        return (self.time, self.xi_plus, self.xi_minus, self.s, self.r)


def trace_trajectory(
    cfg: TransitionConfig,
    grid: Sequence[float],
    rng: SeededRng,
    evolution: Evolution | None = None,
    pair: NoisePair | None = None,
) -> list[TrajectoryPoint]:
    """Model 2 trajectory on a time grid starting at the first measurement.

    ``r`` is set once at ``grid[0]``; ``s`` flips between consecutive grid
    points exactly when ``xi_r`` changes sign across them.  An even number of
    crossings inside one step is invisible at this resolution.

    ``evolution`` maps ``t`` to ``R(grid[0], t)`` and ``pair`` is the noise at
    ``grid[0]``.  The default evolution is the constant-rate rotation reaching
    ``cfg.R`` at ``grid[-1]``.
    """
    grid = [float(t) for t in grid]
    if len(grid) >= 2 and any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("time grid must be strictly increasing")
    if evolution is None:
        if len(grid) < 2:
            raise ValueError("default evolution needs at least two grid points")
        evolution = geodesic_evolution(cfg.R, grid[0], grid[-1])
    if pair is None:
        pair = sample_noise_pair(rng)
    trace = trace_projections(pair, evolution, cfg.n, grid)

    r0 = measure_update_r(pair, cfg.n)
    xi_r = trace.xi(r0)
    s = cfg.s0
    points = [TrajectoryPoint(grid[0], s, r0, trace.xi_plus[0], trace.xi_minus[0])]
    for k in range(1, len(grid)):
        if sign(xi_r[k]) != sign(xi_r[k - 1]):
            s = -s
        points.append(TrajectoryPoint(grid[k], s, r0, trace.xi_plus[k], trace.xi_minus[k]))
    return points
