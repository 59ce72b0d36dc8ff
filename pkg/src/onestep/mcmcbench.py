"""Metropolis baseline for conditional sampling in linear regression.

The target for the response ``y`` given the design ``Z`` and the observed
least-squares fit ``beta_hat`` is

    log f(y) = -1/2 ||y - Z beta_hat||^2 - ||Z^T (y - Z beta_hat)||^2 / (2 sigma^2 d)

up to a constant. The Hessian of the Gaussian log-likelihood is ``-Z^T Z``,
which does not depend on ``y``, so its determinant factor drops out.

The sampler updates one coordinate at a time with Gaussian proposals. The
naive sweep re-evaluates the full log-density after every proposal (O(n d)
per update, O(n^2 d) per sweep); the incremental sweep keeps the residual and
``Z^T r`` cached and needs O(d) per update. Both accept exactly the same
proposals given the same seeds, up to rounding.
"""

from __future__ import annotations

import math
import timeit
from dataclasses import dataclass

import numpy as np

from onestep import kernels, synth
from onestep.models import LinearRegression
from onestep.randcore import SeedStream, uniform_block

MODES = ("naive", "incremental")
TRUE_BETA = 0.2
DIM = 5


@dataclass
class McmcState:
    """Chain state for the conditional regression sampler.

    Attributes:
        y: current response vector (updated in place).
        beta_hat: observed estimate the chain conditions on.
        design: n x d design matrix.
        sigma: score-noise scale; the penalty weight is 1 / (2 sigma^2 d).
        residual: cached ``y - Z beta_hat``.
        gradient: cached ``Z^T residual``.
        acceptance_count: accepted proposals so far.
        proposals: proposals made so far.
    """

    y: np.ndarray
    beta_hat: np.ndarray
    design: np.ndarray
    sigma: float
    residual: np.ndarray
    gradient: np.ndarray
    acceptance_count: int = 0
    proposals: int = 0

    @classmethod
    def start(cls, y, design, sigma: float | None = None, beta_hat=None) -> "McmcState":
        """Chain started at the observed ``y``, conditioning on its least-squares fit.

        ``sigma`` defaults to 1/n.
        """
        design = np.ascontiguousarray(design, dtype=np.float64)
        y = np.array(y, dtype=np.float64)
        if beta_hat is None:
            beta_hat = np.linalg.lstsq(design, y, rcond=None)[0]
        beta_hat = np.ascontiguousarray(beta_hat, dtype=np.float64)
        if sigma is None:
            sigma = 1.0 / y.size
        if not sigma > 0:
            raise ValueError("sigma must be > 0")
        residual = y - design @ beta_hat
        return cls(y, beta_hat, design, float(sigma), residual, design.T @ residual)

    @property
    def penalty(self) -> float:
        return 1.0 / (2.0 * self.sigma ** 2 * self.design.shape[1])

    @property
    def acceptance_rate(self) -> float:
        return self.acceptance_count / self.proposals if self.proposals else math.nan

    def refresh(self) -> None:
        """Recompute the cached residual and gradient from ``y``."""
        self.residual = self.y - self.design @ self.beta_hat
        self.gradient = self.design.T @ self.residual


def conditional_logdensity(state: McmcState) -> float:
    """Target log-density at ``state.y``, evaluated from scratch."""
    r = state.y - state.design @ state.beta_hat
    g = state.design.T @ r
    return float(-0.5 * (r @ r) - state.penalty * (g @ g))


def mcmc_sweep(state: McmcState, step_sd: float, mode: str, stream: SeedStream) -> McmcState:
    """One round of ``n`` single-coordinate Metropolis updates, in index order.

    Each update consumes two uniforms: one for the proposal increment
    ``step_sd * Phi^-1(u)`` and one for the accept test.
    """
    if not step_sd > 0:
        raise ValueError("step_sd must be > 0")
    n = state.y.size
    u = uniform_block(stream, n, 2)
    steps = step_sd * kernels.normal_quantile(u[:, 0])
    log_u = np.log(u[:, 1])
    if mode == "naive":
        accepted = kernels.mcmc_sweep_naive(state.y, state.design, state.beta_hat, state.penalty, steps, log_u)
        state.refresh()
    elif mode == "incremental":
        accepted = kernels.mcmc_sweep_incremental(state.y, state.residual, state.gradient, state.design,
                                                  state.penalty, steps, log_u)
    else:
        raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
    state.acceptance_count += int(accepted)
    state.proposals += n
    return state


def run_chain(state: McmcState, sweeps: int, step_sd: float, stream: SeedStream,
              mode: str = "incremental") -> McmcState:
    for _ in range(sweeps):
        mcmc_sweep(state, step_sd, mode, stream)
    return state


def tune_step(state: McmcState, stream: SeedStream, target=(0.10, 0.20), pilot_sweeps: int = 50,
              max_rounds: int = 40) -> float:
    """Step size whose pilot acceptance rate lands inside ``target``.

    Pilot chains run on copies of ``state``; the step is adjusted by bisection
    in log scale.
    """
    lo, hi = 1e-6, 10.0
    step = 0.1
    for round_ in range(max_rounds):
        pilot = McmcState.start(state.y, state.design, state.sigma, state.beta_hat)
        run_chain(pilot, pilot_sweeps, step, stream.child(round_))
        rate = pilot.acceptance_rate
        if target[0] <= rate <= target[1]:
            return step
        if rate < target[0]:
            hi = step
        else:
            lo = step
        step = math.sqrt(lo * hi)
    return step


def simulate_regression(n: int, stream: SeedStream, d: int = DIM, beta: float = TRUE_BETA):
    """``(y, Z)`` with rows of Z i.i.d. N(0, I_d) and y ~ N(Z beta, 1)."""
    block = uniform_block(stream, n, d + 1)
    design = np.ascontiguousarray(kernels.normal_quantile(block[:, :d]))
    y = design @ np.full(d, beta) + kernels.normal_quantile(block[:, d])
    return y, design


@dataclass(frozen=True)
class BenchRow:
    n: int
    seconds_per_mcmc_round: float
    seconds_per_onestep: float
    acceptance_rate: float


@dataclass(frozen=True)
class BenchResult:
    rows: list
    mcmc_slope: float
    onestep_slope: float


def loglog_slope(ns, seconds) -> float:
    """Least-squares slope of log(seconds) on log(n)."""
    return float(np.polyfit(np.log(np.asarray(ns, dtype=np.float64)),
                            np.log(np.asarray(seconds, dtype=np.float64)), 1)[0])


def median_seconds(fn, repeats: int = 5) -> float:
    """Median wall time per call of ``fn`` after one warmup call.

    The number of calls per timed repetition is raised until a repetition
    lasts at least 0.2 s, which keeps fast calls well above clock resolution.
    """
    fn()
    timer = timeit.Timer(fn)
    number, _ = timer.autorange()
    return float(np.median(timer.repeat(repeat=max(repeats, 5), number=number))) / number


def run_benchmark(n_grid, sweeps: int, onestep_reps: int, stream: SeedStream, step_sd: float = 0.1,
                  mode: str = "naive", repeats: int = 5) -> BenchResult:
    """Time one MCMC round and one one-step draw at each n.

    A timed MCMC call runs ``sweeps`` rounds; a timed one-step call runs
    ``onestep_reps`` draws. Both are reported per round / per draw.
    """
    n_grid = [int(n) for n in n_grid]
    if not n_grid or n_grid != sorted(n_grid):
        raise ValueError("n_grid must be nonempty and ascending")
    rows = []
    for n in n_grid:
        y, design = simulate_regression(n, stream.child(n, 0))
        state = McmcState.start(y, design)
        chain_stream = stream.child(n, 1)
        mcmc_time = median_seconds(lambda: run_chain(state, sweeps, step_sd, chain_stream, mode), repeats)
        model = LinearRegression(design)
        beta_hat = state.beta_hat
        synth_stream = stream.child(n, 2)

        def draw():
            for _ in range(onestep_reps):
                synth.one_step(model, beta_hat, n, synth_stream)

        onestep_time = median_seconds(draw, repeats)
        rows.append(BenchRow(n, mcmc_time / sweeps, onestep_time / onestep_reps, state.acceptance_rate))
    ns = [r.n for r in rows]
    mcmc_slope = loglog_slope(ns, [r.seconds_per_mcmc_round for r in rows]) if len(rows) > 1 else math.nan
    one_slope = loglog_slope(ns, [r.seconds_per_onestep for r in rows]) if len(rows) > 1 else math.nan
    return BenchResult(rows, mcmc_slope, one_slope)
