"""One-step synthetic data and the parametric-bootstrap baseline.

The one-step sampler draws one block of seeds, samples ``Z`` at the released
estimate, re-estimates, and samples ``Y`` from the same seeds at the corrected
parameter ``theta* = Proj(2 theta_hat_x - theta_hat_z)``. Because both samples
share their seeds, the estimator evaluated on ``Y`` matches ``theta_hat_x`` up
to ``o_p(n^-1/2)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from onestep import models
from onestep.models import EstimationError, Model
from onestep.randcore import SeedStream, uniform_block

logger = logging.getLogger(__name__)

# path component for the single retry after a failed estimate on Z
RETRY_KEY = 1


@dataclass
class SyntheticResult:
    """Audit record of one run of the one-step sampler.

    Attributes:
        data: the released synthetic sample ``Y``.
        theta_hat_x: the estimate the sample is calibrated to.
        theta_hat_z: estimate on the intermediate sample ``Z``.
        theta_star: projected one-step parameter used to draw ``Y``.
        theta_hat_y: estimate recomputed on ``Y``.
        projected: True when projection changed any coordinate.
        retried: True when ``Z`` had to be redrawn from the retry stream.
    """

    data: np.ndarray
    theta_hat_x: np.ndarray
    theta_hat_z: np.ndarray
    theta_star: np.ndarray
    theta_hat_y: np.ndarray
    projected: bool
    retried: bool = False
    block: np.ndarray = field(default=None, repr=False)


def one_step_block(model: Model, theta_hat_x, block) -> SyntheticResult:
    """One-step synthesis driven by an explicit seed block."""
    theta_hat_x = model.check_theta(theta_hat_x)
    block = model.check_block(block)
    z = model.sample(theta_hat_x, block)
    theta_hat_z = model.estimate(z)
    raw = 2.0 * theta_hat_x - theta_hat_z
    theta_star = model.project(raw)
    y = model.sample(theta_star, block)
    return SyntheticResult(
        data=y,
        theta_hat_x=theta_hat_x,
        theta_hat_z=theta_hat_z,
        theta_star=theta_star,
        theta_hat_y=model.estimate(y),
        projected=bool(np.any(theta_star != raw)),
        block=block,
    )


def one_step(model: Model, theta_hat_x, n: int, stream: SeedStream) -> SyntheticResult:
    """Draw an ``n``-observation one-step synthetic sample.

    If estimation on the intermediate sample fails, the seeds are redrawn once
    from ``stream.child(RETRY_KEY)`` before the error is raised.

    Raises:
        EstimationError: both attempts failed to estimate on ``Z``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    theta_hat_x = model.check_theta(theta_hat_x)
    block = uniform_block(stream, n, model.uniforms_per_obs)
    try:
        return one_step_block(model, theta_hat_x, block)
    except EstimationError as first:
        retry_stream = stream.child(RETRY_KEY)
        logger.warning("estimation on Z failed (%s); retrying with stream path %s", first, retry_stream.path)
        block = uniform_block(retry_stream, n, model.uniforms_per_obs)
        try:
            result = one_step_block(model, theta_hat_x, block)
        except EstimationError as second:
            raise EstimationError(
                f"one-step synthesis for {model.name} failed twice (n={n}, stream path {stream.path}): {second}",
                last_iterate=second.last_iterate, grad_norm=second.grad_norm) from second
        result.retried = True
        return result


def parametric_bootstrap(model: Model, theta_hat_x, n: int, stream: SeedStream) -> np.ndarray:
    """Plain sample of size ``n`` from the fitted model."""
    if n < 1:
        raise ValueError("n must be >= 1")
    block = uniform_block(stream, n, model.uniforms_per_obs)
    return models.sample_from_seeds(model, theta_hat_x, block)
