"""Monte Carlo estimates and the acceptance comparisons built on them."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats as _sps

DEFAULT_SIGMA = 4.0


@dataclass(frozen=True)
class Estimate:
    mean: float
    stderr: float
    samples: int

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError("an estimate needs at least one sample")
        if not self.stderr >= 0.0:
            raise ValueError(f"stderr must be non-negative, got {self.stderr}")

    def as_dict(self):
        return {"mean": self.mean, "stderr": self.stderr, "samples": self.samples}


@dataclass(frozen=True)
class BinomialCount:
    """Mergeable (successes, trials) counter."""

    successes: int
    trials: int

    def __add__(self, other: BinomialCount) -> BinomialCount:
        return BinomialCount(self.successes + other.successes, self.trials + other.trials)

    def estimate(self) -> Estimate:
        return binomial_estimate(self.successes, self.trials)


def binomial_estimate(successes: int, trials: int) -> Estimate:
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    if not 0 <= successes <= trials:
        raise ValueError(f"successes must lie in [0, {trials}], got {successes}")
    p = successes / trials
    return Estimate(p, math.sqrt(p * (1.0 - p) / trials), trials)


def sign_mean_estimate(total: int, samples: int) -> Estimate:
    """Estimate of E[z] for a +-1 variable whose outcomes sum to ``total``."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    m = total / samples
    return Estimate(m, math.sqrt(max(0.0, 1.0 - m * m) / samples), samples)


def sigma_distance(est: Estimate, oracle: float) -> float:
    """``|mean - oracle| / stderr``; 0 or +inf when the stderr is zero."""
    diff = abs(est.mean - oracle)
    if est.stderr > 0.0:
        return diff / est.stderr
    return 0.0 if diff == 0.0 else math.inf


def within(est: Estimate, oracle: float, sigmas: float = DEFAULT_SIGMA) -> bool:
    return sigma_distance(est, oracle) <= sigmas


def combine(terms: list[tuple[float, Estimate]]) -> Estimate:
    """Linear combination of independent estimates, errors in quadrature."""
    mean = sum(c * e.mean for c, e in terms)
    var = sum((c * e.stderr) ** 2 for c, e in terms)
    return Estimate(mean, math.sqrt(var), min(e.samples for _, e in terms))


@dataclass(frozen=True)
class KSResult:
    statistic: float
    critical: float
    passed: bool
    pvalue: float


def ks_uniformity(samples, a: float = -1.0, b: float = 1.0) -> KSResult:
    """One-sample Kolmogorov-Smirnov test against uniform on [a, b].

    Passes iff the statistic is below the asymptotic 1% critical value
    ``1.63 / sqrt(N)``.
    """
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("ks_uniformity needs at least one sample")
    res = _sps.kstest(x, _sps.uniform(loc=a, scale=b - a).cdf)
    stat = float(res.statistic)
    critical = 1.63 / math.sqrt(x.size)
    return KSResult(stat, critical, stat < critical, float(res.pvalue))


def octant_chisquare(points) -> float:
    """p-value of a chi-square test that points fall evenly in the 8 octants."""
    p = np.asarray(points)
    idx = (p[:, 0] >= 0) * 4 + (p[:, 1] >= 0) * 2 + (p[:, 2] >= 0)
    counts = np.bincount(idx.astype(int), minlength=8)
    return float(_sps.chisquare(counts).pvalue)
