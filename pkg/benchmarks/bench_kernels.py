"""Compare the compiled kernels with the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--size N] [--repeats R]

Prints one line per kernel with the median seconds per call for each backend
and the speedup of the compiled one.
"""

import argparse
import timeit

import numpy as np

from onestep import kernels
from onestep.mcmcbench import McmcState, simulate_regression
from onestep.randcore import SeedStream, uniform_block


def cases(size):
    u = SeedStream(1).uniforms(size)
    u_small = u[: max(1, size // 20)]
    y, design = simulate_regression(256, SeedStream(2))
    state = McmcState.start(y, design)
    block = uniform_block(SeedStream(3), y.size, 2)
    steps = 0.1 * kernels.normal_quantile(block[:, 0])
    log_u = np.log(block[:, 1])

    def naive(backend):
        return lambda: backend.mcmc_sweep_naive(state.y.copy(), state.design, state.beta_hat, state.penalty,
                                                steps, log_u)

    def incremental(backend):
        return lambda: backend.mcmc_sweep_incremental(state.y.copy(), state.residual.copy(), state.gradient.copy(),
                                                      state.design, state.penalty, steps, log_u)

    return {
        f"normal_quantile (n={size})": lambda b: lambda: b.normal_quantile(u),
        f"reg_inc_beta (n={size})": lambda b: lambda: b.reg_inc_beta(5.0, 3.0, u),
        f"beta_quantile (n={u_small.size})": lambda b: lambda: b.beta_quantile(5.0, 3.0, u_small),
        f"binomial_quantile (n={u_small.size})": lambda b: lambda: b.binomial_quantile(200, 0.3, u_small),
        "mcmc_sweep_naive (n=256)": naive,
        "mcmc_sweep_incremental (n=256)": incremental,
    }


def median_seconds(fn, repeats):
    timer = timeit.Timer(fn)
    number, _ = timer.autorange()
    return float(np.median(timer.repeat(repeat=repeats, number=number))) / number


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--size", type=int, default=100_000, help="vector length for elementwise kernels")
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args(argv)
    if kernels.compiled_backend is None:
        parser.error("compiled extension not built; run `python setup.py build_ext --inplace`")
    print(f"{'kernel':36s} {'python [s]':>12s} {'compiled [s]':>13s} {'speedup':>8s}")
    for name, make in cases(args.size).items():
        slow = median_seconds(make(kernels.python_backend), args.repeats)
        fast = median_seconds(make(kernels.compiled_backend), args.repeats)
        print(f"{name:36s} {slow:12.3e} {fast:13.3e} {slow / fast:7.1f}x")


if __name__ == "__main__":
    main()
