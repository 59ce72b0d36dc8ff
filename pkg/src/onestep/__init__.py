"""One-step synthetic data for parametric models.

Given an efficient estimate ``theta_hat_x`` of a parametric model, the
one-step sampler produces a synthetic sample whose own estimate matches
``theta_hat_x`` up to ``o_p(n^-1/2)``. The package also ships the
parametric-bootstrap baseline, differential-privacy mechanisms, a private
two-sample proportion test and an MCMC timing baseline.
"""

__version__ = "0.1.0"

from onestep.kernels import BACKEND
from onestep.models import DomainError, EstimationError, UnsupportedModelError
from onestep.randcore import SeedStream, derive_stream, uniform_block
from onestep.synth import SyntheticResult, one_step, parametric_bootstrap

__all__ = [
    "BACKEND",
    "DomainError",
    "EstimationError",
    "SeedStream",
    "SyntheticResult",
    "UnsupportedModelError",
    "derive_stream",
    "one_step",
    "parametric_bootstrap",
    "uniform_block",
]
