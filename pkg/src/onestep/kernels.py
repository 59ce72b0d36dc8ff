"""Backend selection for the hot kernels.

The compiled extension ``onestep._kernels`` is used when it was built;
otherwise the numpy fallback ``onestep._kernels_py`` is loaded. Setting the
environment variable ``ONESTEP_PURE_PYTHON=1`` forces the fallback.
"""

import os

from onestep import _kernels_py as python_backend

compiled_backend = None
if os.environ.get("ONESTEP_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from onestep import _kernels as compiled_backend
    except ImportError:  # extension not built
        compiled_backend = None

_impl = compiled_backend if compiled_backend is not None else python_backend

BACKEND = _impl.BACKEND
normal_quantile = _impl.normal_quantile
reg_inc_beta = _impl.reg_inc_beta
beta_quantile = _impl.beta_quantile
binomial_quantile = _impl.binomial_quantile
mcmc_sweep_naive = _impl.mcmc_sweep_naive
mcmc_sweep_incremental = _impl.mcmc_sweep_incremental
