"""One-sample Kolmogorov-Smirnov test and empirical power."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import optimize

from onestep.randcore import SeedStream

SERIES_TERMS = 100


@dataclass(frozen=True)
class KsResult:
    statistic: float
    p_value: float
    n: int
    reject_at: dict = field(default_factory=dict)


@dataclass(frozen=True)
class PowerEstimate:
    power: float
    se: float
    reps: int


def ks_statistic(sample, cdf: Callable) -> float:
    """Sup distance between the empirical cdf of ``sample`` and ``cdf``."""
    x = np.sort(np.asarray(sample, dtype=np.float64).ravel(), kind="stable")
    n = x.size
    if n == 0:
        raise ValueError("K-S statistic of an empty sample")
    f = np.asarray(cdf(x), dtype=np.float64)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - f), np.max(f - (i - 1) / n)))


def kolmogorov_sf(x: float) -> float:
    """P(K > x) for the Kolmogorov distribution.

    Uses the alternating series with 100 terms; below x = 1 the equivalent
    theta-function form is summed instead since it converges there much faster.
    """
    if x <= 0:
        return 1.0
    if x < 1.0:
        s = sum(math.exp(-((2 * j - 1) ** 2) * math.pi ** 2 / (8.0 * x * x)) for j in range(1, SERIES_TERMS + 1))
        return min(1.0, max(0.0, 1.0 - math.sqrt(2.0 * math.pi) / x * s))
    s = sum((-1) ** (j - 1) * math.exp(-2.0 * j * j * x * x) for j in range(1, SERIES_TERMS + 1))
    return min(1.0, max(0.0, 2.0 * s))


def ks_pvalue(statistic: float, n: int) -> float:
    return kolmogorov_sf(math.sqrt(n) * statistic)


def ks_critical(alpha: float, n: int) -> float:
    """Smallest D with asymptotic p-value alpha."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must be in (0, 1)")
    x = optimize.brentq(lambda v: kolmogorov_sf(v) - alpha, 1e-3, 10.0, xtol=1e-14)
    return x / math.sqrt(n)


def ks_test(sample, cdf: Callable, alpha=0.05) -> KsResult:
    """K-S test of ``sample`` against ``cdf``; ``alpha`` may be one level or several."""
    alphas = (alpha,) if np.isscalar(alpha) else tuple(alpha)
    for a in alphas:
        if not 0 < a < 1:
            raise ValueError(f"alpha must be in (0, 1), got {a}")
    d = ks_statistic(sample, cdf)
    n = np.asarray(sample).size
    p = ks_pvalue(d, n)
    return KsResult(statistic=d, p_value=p, n=n, reject_at={float(a): p < a for a in alphas})


def empirical_power(generator: Callable[[SeedStream], np.ndarray], cdf: Callable, alpha: float,
                    reps: int, stream: SeedStream) -> PowerEstimate:
    """Rejection rate of the K-S test over ``reps`` generated samples.

    Replicate ``r`` receives ``stream.child(r)``.
    """
    if reps < 1:
        raise ValueError("reps must be >= 1")
    rejected = sum(ks_test(generator(stream.child(r)), cdf, alpha).reject_at[float(alpha)] for r in range(reps))
    return power_estimate(rejected, reps)


def power_estimate(rejected: int, reps: int) -> PowerEstimate:
    p = rejected / reps
    return PowerEstimate(power=p, se=math.sqrt(p * (1.0 - p) / reps), reps=reps)
