"""Differential-privacy mechanisms.

Adjacent datasets differ in one record (Hamming adjacency). Noise is drawn by
inverse transform from a :class:`~onestep.randcore.SeedStream`, so every
mechanism is a deterministic function of its input and stream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from onestep import dists, models
from onestep.randcore import SeedStream

MECHANISMS = ("laplace", "tulap")


@dataclass(frozen=True)
class PrivacySpec:
    """Privacy budget and calibration for one release.

    Attributes:
        epsilon: privacy-loss budget, > 0.
        sensitivity: l1 sensitivity of the released statistic (Laplace only).
        mechanism: ``"laplace"`` or ``"tulap"``.
    """

    epsilon: float
    sensitivity: float = math.nan
    mechanism: str = "laplace"

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")
        if self.mechanism not in MECHANISMS:
            raise ValueError(f"unknown mechanism {self.mechanism!r}; expected one of {MECHANISMS}")


def laplace_mechanism(t, spec: PrivacySpec, stream: SeedStream) -> np.ndarray:
    """Release ``t + L`` with ``L`` i.i.d. Laplace(0, sensitivity / epsilon)."""
    if spec.mechanism != "laplace":
        raise ValueError("laplace_mechanism needs a Laplace PrivacySpec")
    if not (math.isfinite(spec.sensitivity) and spec.sensitivity > 0):
        raise ValueError(f"Laplace sensitivity must be finite and > 0, got {spec.sensitivity}")
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))
    noise = dists.Laplace(0.0, spec.sensitivity / spec.epsilon).quantile(stream.uniforms(t.size))
    return t + np.reshape(noise, t.shape)


def tulap_mechanism(count, epsilon: float, stream: SeedStream) -> float:
    """Release ``count + N`` with N ~ Tulap(0, exp(-epsilon), 0)."""
    u1, u2, u3 = stream.uniforms(3)
    return float(count) + float(dists.tulap_from_uniforms(u1, u2, u3, epsilon))


def beta_threshold(n: int) -> float:
    """Clamping threshold ``min(1/2, 10 / (log(n) sqrt(n)))``."""
    if n < 2:
        raise ValueError(f"beta_threshold needs n >= 2, got {n}")
    return min(0.5, 10.0 / (math.log(n) * math.sqrt(n)))


def beta_sensitivity(n: int, t: float | None = None) -> float:
    """Joint l1 sensitivity of the mean-log statistics of data clamped to [t, 1 - t].

    Changing one record moves each mean by at most |log t - log(1-t)| / n.
    """
    if t is None:
        t = beta_threshold(n)
    return 2.0 / n * abs(math.log(t) - math.log1p(-t))


def clamped_beta_stats(data, t: float):
    """Means of log x and log(1 - x) after clamping x to [t, 1 - t]."""
    x = np.clip(np.asarray(data, dtype=np.float64), t, 1.0 - t)
    return float(np.mean(np.log(x))), float(np.mean(np.log1p(-x)))


def dp_beta_estimate(data, epsilon: float, stream: SeedStream) -> np.ndarray:
    """epsilon-DP Beta estimate from privatized sufficient statistics.

    The data are clamped to [t, 1 - t], both mean-log statistics get Laplace
    noise calibrated to their joint sensitivity, and the Beta likelihood in the
    noisy statistics is maximized over alpha, beta >= 1. Everything after the
    noise step is post-processing.

    Raises:
        ValueError: data outside (0, 1) or fewer than two observations.
        EstimationError: the threshold is 1/2 (very small n), the noisy
            statistics admit no finite maximizer, or Newton fails.
    """
    x = np.asarray(data, dtype=np.float64).ravel()
    n = x.size
    if n < 2:
        raise ValueError("dp_beta_estimate needs at least two observations")
    if np.any(~(x > 0)) or np.any(~(x < 1)):
        raise ValueError("Beta data must lie strictly inside (0, 1)")
    t = beta_threshold(n)
    if t == 0.5:
        raise models.EstimationError(f"n={n} is too small: the clamping threshold is 1/2, so the "
                                     "clamped data carry no information")
    spec = PrivacySpec(epsilon=epsilon, sensitivity=beta_sensitivity(n, t))
    s1, s2 = laplace_mechanism(clamped_beta_stats(x, t), spec, stream)
    return models.beta_mle_from_stats(float(s1), float(s2), lower=models.BetaModel.lower)
