"""Private two-sample proportion test from Tulap-noised counts.

Only ``x_tilde = sum(X) + N1`` and ``y_tilde = sum(Y) + N2`` are observed. We
test H0: theta_X = theta_Y against H1: theta_X <= theta_Y with statistic
``y_tilde``. The one-step test draws its reference distribution from
one-step synthetic copies of ``(x_tilde, y_tilde)`` calibrated to the pooled
null estimate; the bootstrap test draws ``Binom(m, theta_hat) + Tulap``
directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from onestep import dists, goftest, kernels
from onestep.models import TulapTwoSample
from onestep.randcore import SeedStream, uniform_block

METHODS = ("one-step", "bootstrap")
MIN_REPS = 100
DEFAULT_REPS = 1000


@dataclass(frozen=True)
class DpTwoPropProblem:
    x_tilde: float
    y_tilde: float
    n: int
    m: int
    epsilon: float

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise ValueError("sample sizes must be >= 1")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be > 0")

    @property
    def model(self) -> TulapTwoSample:
        return TulapTwoSample(self.n, self.m, self.epsilon)

    @property
    def theta_hat(self) -> float:
        return float(self.model.estimate(np.array([self.x_tilde, self.y_tilde]))[0])


@dataclass(frozen=True)
class TestOutcome:
    """Monte Carlo p-value.

    Attributes:
        p_value: add-one upper-tail p-value in (0, 1].
        replicates_used: number of reference draws.
        method: ``"one-step"`` or ``"bootstrap"``.
        theta_hat: pooled null estimate the reference is calibrated to.
        degenerate: True when ``theta_hat`` was clamped to 0 or 1.
    """

    p_value: float
    replicates_used: int
    method: str
    theta_hat: float
    degenerate: bool


def upper_tail_pvalue(reference, observed: float) -> float:
    """(1 + #{reference >= observed}) / (len(reference) + 1)."""
    reference = np.asarray(reference, dtype=np.float64)
    return (1.0 + np.count_nonzero(reference >= observed)) / (reference.size + 1.0)


def onestep_reference(prob: DpTwoPropProblem, reps: int, stream: SeedStream) -> np.ndarray:
    """Treatment-arm values of ``reps`` one-step synthetic copies, shape (reps,).

    Row ``r`` equals ``synth.one_step(prob.model, theta_hat, 1, stream)`` run
    for the r-th time on the same stream; the replicates are computed together.
    """
    model = prob.model
    theta_hat = prob.theta_hat
    block = uniform_block(stream, reps, model.uniforms_per_obs)
    z = model.sample_batch(theta_hat, block)
    theta_star = np.clip(2.0 * theta_hat - model.estimate_batch(z), 0.0, 1.0)
    return model.sample_batch(theta_star, block)[:, 1]


def bootstrap_reference(prob: DpTwoPropProblem, reps: int, stream: SeedStream) -> np.ndarray:
    """``reps`` draws of Binom(m, theta_hat) + Tulap, using the one-step block layout."""
    model = prob.model
    block = uniform_block(stream, reps, model.uniforms_per_obs)
    return model.sample_batch(prob.theta_hat, block)[:, 1]


def _check_reps(reps):
    if reps < MIN_REPS:
        raise ValueError(f"need at least {MIN_REPS} Monte Carlo replicates, got {reps}")


def _outcome(prob, reference, method):
    theta_hat = prob.theta_hat
    return TestOutcome(
        p_value=upper_tail_pvalue(reference, prob.y_tilde),
        replicates_used=reference.size,
        method=method,
        theta_hat=theta_hat,
        degenerate=theta_hat in (0.0, 1.0),
    )


def dp2prop_onestep_pvalue(prob: DpTwoPropProblem, reps: int, stream: SeedStream) -> TestOutcome:
    _check_reps(reps)
    return _outcome(prob, onestep_reference(prob, reps, stream), "one-step")


def dp2prop_bootstrap_pvalue(prob: DpTwoPropProblem, reps: int, stream: SeedStream) -> TestOutcome:
    _check_reps(reps)
    return _outcome(prob, bootstrap_reference(prob, reps, stream), "bootstrap")


def simulate_problem(n: int, m: int, theta_x: float, theta_y: float, epsilon: float,
                     stream: SeedStream) -> DpTwoPropProblem:
    """Draw private data and release its Tulap-noised counts."""
    u = stream.uniforms(8)
    x = kernels.binomial_quantile(n, theta_x, u[0]) + dists.tulap_from_uniforms(u[1], u[2], u[3], epsilon)
    y = kernels.binomial_quantile(m, theta_y, u[4]) + dists.tulap_from_uniforms(u[5], u[6], u[7], epsilon)
    return DpTwoPropProblem(float(x), float(y), n, m, epsilon)


@dataclass(frozen=True)
class PvalueStudy:
    """Outer-replicate p-values for both methods at one (theta_x, theta_y)."""

    theta_x: float
    theta_y: float
    onestep: np.ndarray
    bootstrap: np.ndarray
    degenerate: int

    def power(self, alpha: float = 0.05):
        """Rejection rates ``(one-step, bootstrap)`` at level alpha, with standard errors."""
        out = []
        for p in (self.onestep, self.bootstrap):
            rate = float(np.mean(p <= alpha))
            out.append((rate, math.sqrt(rate * (1.0 - rate) / p.size)))
        return tuple(out)


def ecdf_sup_distance(p_values) -> float:
    """Sup distance between the empirical cdf of ``p_values`` and the Uniform(0, 1) cdf."""
    return goftest.ks_statistic(p_values, lambda x: np.clip(x, 0.0, 1.0))
