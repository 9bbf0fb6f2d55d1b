"""Bell-pair simulation with shared noise plus one communicated bit.

Bob and Alice share the noise pair ``y = (y_1, y_-1)``.  Bob picks
``r = sign[(v0.y_1)^2 - (v0.y_-1)^2]``, outputs ``s0 = sign(v0.y_r)`` and
sends ``r``; Alice outputs ``s1 = sign(v1.y_r)``.  The joint statistics are
``P(s0, s1) = (1 + s0 s1 v0.v1) / 4``.

The full variant keeps the extra bit ``s`` and the free axis ``n`` of the
qubit model it was derived from; it has the same joint statistics.

Shared randomness is a seed.  Round ``k`` reads the four uniforms of Philox
block ``k`` on stream ``SHARED_STREAM``, so any party can regenerate the
noise of any round without replaying earlier ones.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from qubitsim import _core
from qubitsim.analytic import pe
from qubitsim.geometry import Z_AXIS, SeededRng, UnitVec3, sign
from qubitsim.models import CHUNK, chunk_sizes
from qubitsim.noise import NoisePair
from qubitsim.stats import BinomialCount, Estimate, sign_mean_estimate

SHARED_STREAM = 0
BOB_COIN_STREAM = 1
VARIANTS = ("reduced", "full")
OUTCOMES = (1, -1)


@dataclass(frozen=True)
class SharedVariable:
    pair: NoisePair

    def member(self, r: int) -> UnitVec3:
        return self.pair.member(r)


@dataclass(frozen=True)
class BobMessage:
    r: int
    s: int | None = None

    @property
    def bits(self) -> int:
        return 1 if self.s is None else 2


def shared_uniforms(seed: int, start: int, count: int) -> np.ndarray:
    """Uniforms for rounds ``start .. start+count-1``, one row of four per round."""
    gen = np.random.Generator(SeededRng(seed, SHARED_STREAM).bit_generator(start))
    return gen.random((count, 4))


def shared_variable(seed: int, round_index: int) -> SharedVariable:
    return SharedVariable(NoisePair.from_uniforms(shared_uniforms(seed, round_index, 1)[0]))


def bob_coins(seed: int, start: int, count: int) -> np.ndarray:
    """Bob's private fair coins for the full variant, as int8 +-1."""
    gen = np.random.Generator(SeededRng(seed, BOB_COIN_STREAM).bit_generator(start))
    u = gen.random((count, 4))[:, 0]
    return np.where(u < 0.5, 1, -1).astype(np.int8)


def _bob_r(y: SharedVariable, v0: UnitVec3) -> int:
    p = v0.dot(y.pair.y_plus)
    m = v0.dot(y.pair.y_minus)
    return sign(p * p - m * m)


def bob_reduced(y: SharedVariable, v0: UnitVec3) -> tuple[int, int]:
    """Return ``(s0, r)``; deterministic given the shared noise."""
    r = _bob_r(y, v0)
    return sign(v0.dot(y.member(r))), r


def alice_reduced(y: SharedVariable, r: int, v1: UnitVec3) -> int:
    return sign(v1.dot(y.member(r)))


def bob_full(y: SharedVariable, v0: UnitVec3, rng: SeededRng, n: UnitVec3 = Z_AXIS) -> tuple[int, int, int]:
    """Return ``(s0, s, r)``: ``s0`` is a fair coin, ``s`` the unique value
    with ``(s0 v0.y_r)(s n.y_r) >= 0``."""
    r = _bob_r(y, v0)
    s0 = 1 if rng.uniforms(1)[0] < 0.5 else -1
    yr = y.member(r)
    return s0, s0 * sign(v0.dot(yr)) * sign(n.dot(yr)), r


def alice_full(y: SharedVariable, s: int, r: int, v1: UnitVec3, n: UnitVec3 = Z_AXIS) -> int:
    yr = y.member(r)
    return s * sign(n.dot(yr)) * sign(v1.dot(yr))


def _cell_index(b: int) -> int:
    return 0 if b > 0 else 1


@dataclass(frozen=True)
class ProtocolResult:
    variant: str
    v0: UnitVec3
    v1: UnitVec3
    seed: int
    r: np.ndarray
    s0: np.ndarray
    s1: np.ndarray

    @property
    def rounds(self) -> int:
        return int(self.s0.size)

    @property
    def counts(self) -> np.ndarray:
        """2x2 joint counts indexed ``[s0, s1]`` with +1 first."""
        idx = (self.s0 < 0).astype(np.int64) * 2 + (self.s1 < 0)
        return np.bincount(idx, minlength=4).reshape(2, 2)

    def cell(self, s0: int, s1: int) -> BinomialCount:
        return BinomialCount(int(self.counts[_cell_index(s0), _cell_index(s1)]), self.rounds)

    def correlator(self) -> Estimate:
        return sign_mean_estimate(int(np.sum(self.s0.astype(np.int64) * self.s1)), self.rounds)

    def alice_marginal(self) -> BinomialCount:
        return BinomialCount(int(np.count_nonzero(self.s1 > 0)), self.rounds)

    def triples(self) -> list[tuple[int, int, int]]:
        return list(zip(self.r.tolist(), self.s0.tolist(), self.s1.tolist()))

    def record(self) -> dict:
        cells = []
        for a in OUTCOMES:
            for b in OUTCOMES:
                c = self.cell(a, b)
                cells.append({"s0": a, "s1": b, "count": c.successes, "oracle_p": pe(a, b, self.v0, self.v1)})
        return {
            "variant": self.variant,
            "v0": [self.v0.x, self.v0.y, self.v0.z],
            "v1": [self.v1.x, self.v1.y, self.v1.z],
            "rounds": self.rounds,
            "seed": self.seed,
            "cells": cells,
        }

    def round_log_lines(self):
        """JSON lines ``{round, v0, v1, r, s0, s1}``."""
        v0 = [self.v0.x, self.v0.y, self.v0.z]
        v1 = [self.v1.x, self.v1.y, self.v1.z]
        for k, (r, a, b) in enumerate(self.triples()):
            yield json.dumps({"round": k, "v0": v0, "v1": v1, "r": r, "s0": a, "s1": b})


def run_protocol(
    variant: str,
    v0: UnitVec3,
    v1: UnitVec3,
    rounds: int,
    seed: int,
    n: UnitVec3 = Z_AXIS,
    backend: str | None = None,
) -> ProtocolResult:
    """Run ``rounds`` independent rounds in-process and keep every outcome."""
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    if rounds < 0:
        raise ValueError("rounds must be >= 0")
    k = _core.get_backend(backend) if backend else _core.kernels
    a0, a1, an = v0.as_array(), v1.as_array(), n.as_array()
    rs, s0s, s1s = [], [], []
    start = 0
    for size in chunk_sizes(rounds, CHUNK):
        u = shared_uniforms(seed, start, size)
        if variant == "reduced":
            r, s0 = k.bob_reduced_batch(u, a0)
            s1 = k.alice_reduced_batch(u, r, a1)
        else:
            s0 = bob_coins(seed, start, size)
            s, r = k.bob_full_batch(u, s0, a0, an)
            s1 = k.alice_full_batch(u, s, r, a1, an)
        rs.append(r)
        s0s.append(s0)
        s1s.append(s1)
        start += size
    cat = lambda parts: np.concatenate(parts) if parts else np.empty(0, dtype=np.int8)  # noqa: E731
    return ProtocolResult(variant, v0, v1, seed, cat(rs), cat(s0s), cat(s1s))
