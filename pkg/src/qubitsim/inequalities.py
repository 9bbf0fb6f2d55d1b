"""Leggett-Garg and CHSH evaluators.

Two-time correlators come from pairwise two-measurement experiments on the
maximally mixed preparation (``s0 = +-1`` with probability 1/2 each), never
from three measurements in one run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from qubitsim.analytic import pe, pq
from qubitsim.bell import run_protocol
from qubitsim.geometry import X_AXIS, Rotation, UnitVec3, planar_axis, rotate, rotation_from_axis_angle
from qubitsim.models import TransitionConfig, model1_prob, simulate_transition
from qubitsim.stats import Estimate, combine, sign_mean_estimate

CORRELATOR_MODELS = ("model1", "model2", "quantum")


@dataclass(frozen=True)
class CorrelatorEstimate:
    mean: float
    stderr: float
    samples: int

    def __post_init__(self):
        if self.stderr < 0.0:
            raise ValueError("stderr must be non-negative")
        if abs(self.mean) > 1.0 + 4.0 * self.stderr + 1e-12:
            raise ValueError(f"correlator {self.mean} outside [-1, 1]")

    @property
    def estimate(self) -> Estimate:
        return Estimate(self.mean, self.stderr, self.samples)


def correlator_oracle(model: str, n: UnitVec3, v: UnitVec3) -> float:
    """``sum_{s0,s1} s0 s1 P(s1|s0) / 2`` from the closed-form transition law."""
    if model in ("quantum", "model2"):
        prob = pq
    elif model == "model1":
        prob = model1_prob
    else:
        raise ValueError(f"unknown model {model!r}; expected one of {CORRELATOR_MODELS}")
    return sum(0.5 * s0 * s1 * prob(s0, s1, n, v) for s0 in (1, -1) for s1 in (1, -1))


def two_time_correlator(
    model: str,
    n: UnitVec3,
    R: Rotation,
    samples: int = 1_000_000,
    seed: int = 0,
    stream: int = 0,
    workers: int = 1,
) -> CorrelatorEstimate:
    """``C = <s0 s1>`` for one pairwise experiment.

    ``"quantum"`` is evaluated exactly (zero stderr).  For the stochastic
    models ``s1 = s0 * flip`` with the flip independent of ``s0``, so
    ``s0 s1`` is the flip sign and sampling ``s0`` is unnecessary.
    """
    if model == "quantum":
        return CorrelatorEstimate(correlator_oracle("quantum", n, rotate(R, n)), 0.0, samples)
    if model not in ("model1", "model2"):
        raise ValueError(f"unknown model {model!r}; expected one of {CORRELATOR_MODELS}")
    res = simulate_transition(model, TransitionConfig(n, R, 1, samples, seed), stream=stream, workers=workers)
    total = 2 * res.stay.successes - res.stay.trials
    est = sign_mean_estimate(total, samples)
    return CorrelatorEstimate(est.mean, est.stderr, samples)


@dataclass(frozen=True)
class K3Result:
    value: float
    stderr: float
    correlators: tuple[CorrelatorEstimate, CorrelatorEstimate, CorrelatorEstimate]

    @property
    def estimate(self) -> Estimate:
        return Estimate(self.value, self.stderr, self.correlators[0].samples)


def lg_k3(
    model: str,
    n: UnitVec3,
    theta: float,
    samples: int = 1_000_000,
    seed: int = 0,
    axis: UnitVec3 = X_AXIS,
    workers: int = 1,
) -> K3Result:
    """``K3 = C(t0,t1) + C(t1,t2) - C(t0,t2)`` for equal rotations ``theta``.

    The three correlators come from independent streams 0, 1, 2 of ``seed``.
    A measurement-noninvasive theory obeys ``K3 <= 1``.
    """
    if not 0.0 <= theta <= math.pi + 1e-12:
        raise ValueError(f"theta must lie in [0, pi], got {theta}")
    step = rotation_from_axis_angle(axis, theta)
    c01 = two_time_correlator(model, n, step, samples, seed, stream=0, workers=workers)
    c12 = two_time_correlator(model, n, step, samples, seed, stream=1, workers=workers)
    c02 = two_time_correlator(model, n, step @ step, samples, seed, stream=2, workers=workers)
    k = combine([(1.0, c01.estimate), (1.0, c12.estimate), (-1.0, c02.estimate)])
    return K3Result(k.mean, k.stderr, (c01, c12, c02))


def lg_k3_oracle(model: str, theta: float) -> float:
    """Closed-form ``K3`` for a rotation perpendicular to the measurement axis."""
    if model in ("quantum", "model2"):
        return 2.0 * math.cos(theta) - math.cos(2.0 * theta)
    if model == "model1":
        c = lambda a: 1.0 - 2.0 * math.acos(max(-1.0, min(1.0, math.cos(a)))) / math.pi  # noqa: E731
        return 2.0 * c(theta) - c(2.0 * theta)
    raise ValueError(f"unknown model {model!r}")


def chsh(e_ab: Estimate, e_abp: Estimate, e_apb: Estimate, e_apbp: Estimate) -> Estimate:
    """``S = E(a,b) + E(a,b') + E(a',b) - E(a',b')``; local bound 2."""
    return combine([(1.0, e_ab), (1.0, e_abp), (1.0, e_apb), (-1.0, e_apbp)])


# Planar angles reaching 2*sqrt(2) for the sign pattern used by chsh():
# E = cos(a - b) gives S = 4 cos(pi/4).
OPTIMAL_CHSH_ANGLES = {"a": 0.0, "a_prime": math.pi / 2, "b": math.pi / 4, "b_prime": -math.pi / 4}


def pe_correlator(v0: UnitVec3, v1: UnitVec3) -> float:
    return sum(s0 * s1 * pe(s0, s1, v0, v1) for s0 in (1, -1) for s1 in (1, -1))


def derive_seed(seed: int, index: int) -> int:
    """Independent 64-bit child seed number ``index`` of ``seed``."""
    return int(np.random.SeedSequence(seed, spawn_key=(index,)).generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class ChshResult:
    s: Estimate
    oracle: float
    correlators: dict


def protocol_chsh(
    variant: str = "reduced",
    rounds: int = 1_000_000,
    seed: int = 0,
    angles: dict | None = None,
) -> ChshResult:
    """CHSH value of the one-bit protocol at planar measurement angles.

    Each of the four setting pairs runs on its own derived seed, so the four
    correlators are independent.
    """
    angles = dict(OPTIMAL_CHSH_ANGLES if angles is None else angles)
    pairs = {"ab": ("a", "b"), "ab'": ("a", "b_prime"), "a'b": ("a_prime", "b"), "a'b'": ("a_prime", "b_prime")}
    est, oracle = {}, {}
    for i, (label, (key0, key1)) in enumerate(pairs.items()):
        v0, v1 = planar_axis(angles[key0]), planar_axis(angles[key1])
        res = run_protocol(variant, v0, v1, rounds, derive_seed(seed, i))
        est[label] = res.correlator()
        oracle[label] = pe_correlator(v0, v1)
    s = chsh(est["ab"], est["ab'"], est["a'b"], est["a'b'"])
    s_oracle = oracle["ab"] + oracle["ab'"] + oracle["a'b"] - oracle["a'b'"]
    return ChshResult(s, s_oracle, {k: v.as_dict() for k, v in est.items()})
