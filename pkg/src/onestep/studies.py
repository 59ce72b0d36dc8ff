"""Simulation studies behind the experiment runner.

Every study takes a master :class:`SeedStream` and derives one child stream
per (grid point, replicate), so results do not depend on how replicates are
scheduled across workers.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache, partial

import numpy as np

from onestep import dptest, goftest, mcmcbench, models, privacy, synth
from onestep.randcore import SeedStream

BURR_TRUTH = np.array([2.0, 4.0])
BETA_TRUTH = np.array([5.0, 3.0])


@dataclass
class ResultTable:
    """Rectangular result with ``#`` metadata, written as CSV."""

    headers: list
    rows: list
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        for row in self.rows:
            if len(row) != len(self.headers):
                raise ValueError(f"row {row} does not match headers {self.headers}")

    def to_csv(self) -> str:
        buf = io.StringIO()
        for key, value in self.metadata.items():
            buf.write(f"# {key}: {value}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.headers)
        for row in self.rows:
            writer.writerow([_fmt(v) for v in row])
        return buf.getvalue()

    def column(self, name):
        j = self.headers.index(name)
        return [row[j] for row in self.rows]


def _fmt(value):
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, np.integer):
        return str(int(value))
    return value


def replicate_map(fn, count: int, threads: int = 1) -> list:
    """``[fn(0), ..., fn(count - 1)]``, optionally across worker processes."""
    if threads <= 1:
        return [fn(r) for r in range(count)]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(count), chunksize=max(1, count // (4 * threads))))


def mean_and_se(values):
    values = np.asarray(values, dtype=np.float64)
    se = float(values.std(ddof=1) / math.sqrt(values.size)) if values.size > 1 else math.nan
    return float(values.mean()), se


# ---------------------------------------------------------------- Burr K-S

def _burr_replicate(r, n, alpha, seed, path):
    stream = SeedStream(seed, path + (r,))
    model = models.BurrModel()
    cdf = model.reference_cdf(BURR_TRUTH)
    x = synth.parametric_bootstrap(model, BURR_TRUTH, n, stream.child(0))
    theta_hat_x = model.estimate(x)
    result = synth.one_step(model, theta_hat_x, n, stream.child(1))
    # the intermediate Z of the one-step draw is a parametric-bootstrap sample
    z = model.sample(theta_hat_x, result.block)
    return tuple(goftest.ks_test(s, cdf, alpha).p_value < alpha for s in (x, z, result.data))


def burr_ks(n_grid, reps: int, alpha: float, stream: SeedStream, threads: int = 1) -> ResultTable:
    """K-S rejection rates against Burr(2, 4) for true, bootstrap and one-step samples."""
    rows = []
    for n in n_grid:
        fn = partial(_burr_replicate, n=n, alpha=alpha, seed=stream.master_seed, path=stream.path + (n,))
        rejections = np.array(replicate_map(fn, reps, threads))
        for label, column in zip(("X", "Z", "Y"), rejections.T):
            est = goftest.power_estimate(int(column.sum()), reps)
            rows.append([n, label, est.power, est.se])
    return ResultTable(["n", "sample", "power", "se"], rows)


# ---------------------------------------------------------------- log-linear

@lru_cache(maxsize=1)
def seatbelt_truth():
    """Coefficients and cell probabilities fitted to the seatbelt table."""
    model = models.LogLinear()
    probs, coef = model.fit(models.load_seatbelt())
    return coef, probs


def _loglinear_replicate(r, n, seed, path):
    stream = SeedStream(seed, path + (r,))
    model = models.LogLinear()
    theta0, p0 = seatbelt_truth()
    x = synth.parametric_bootstrap(model, theta0, n, stream.child(0))
    res = synth.one_step(model, model.estimate(x), n, stream.child(1))
    return tuple(float(np.sum((model.probabilities(t) - p0) ** 2))
                 for t in (res.theta_hat_x, res.theta_hat_z, res.theta_hat_y))


def loglinear(n_grid, reps: int, stream: SeedStream, threads: int = 1) -> ResultTable:
    """Mean squared l2 error of fitted cell probabilities for X, Z and Y estimates."""
    rows = []
    for n in n_grid:
        fn = partial(_loglinear_replicate, n=n, seed=stream.master_seed, path=stream.path + (n,))
        errors = np.array(replicate_map(fn, reps, threads))
        for label, column in zip(("X", "Z", "Y"), errors.T):
            rows.append([n, label, *mean_and_se(column)])
    return ResultTable(["n", "estimator", "mse", "se"], rows)


# ---------------------------------------------------------------- DP beta

def _beta_replicate(r, n, epsilon, seed, path):
    stream = SeedStream(seed, path + (r,))
    model = models.BetaModel()
    x = synth.parametric_bootstrap(model, BETA_TRUTH, n, stream.child(0))
    theta_mle = model.estimate(x)
    theta_dp = privacy.dp_beta_estimate(x, epsilon, stream.child(1))
    res = synth.one_step(model, theta_dp, n, stream.child(2))
    return tuple(float(np.sum((t - BETA_TRUTH) ** 2))
                 for t in (theta_mle, theta_dp, res.theta_hat_z, res.theta_hat_y))


def beta_dp(n_grid, reps: int, epsilon: float, stream: SeedStream, threads: int = 1) -> ResultTable:
    """Mean squared error of the MLE, the DP estimate, and the Z and Y estimates for Beta(5, 3)."""
    rows = []
    for n in n_grid:
        fn = partial(_beta_replicate, n=n, epsilon=epsilon, seed=stream.master_seed, path=stream.path + (n,))
        errors = np.array(replicate_map(fn, reps, threads))
        for label, column in zip(("X", "DP", "Z", "Y"), errors.T):
            rows.append([n, label, *mean_and_se(column)])
    return ResultTable(["n", "estimator", "mse", "se"], rows)


def loglog_slopes(table: ResultTable, group: str, value: str = "mse") -> dict:
    """Least-squares slope of log(value) on log(n) for each ``group`` label."""
    out = {}
    for label in dict.fromkeys(table.column(group)):
        pts = [(row[0], row[table.headers.index(value)]) for row in table.rows
               if row[table.headers.index(group)] == label]
        ns, vs = zip(*pts)
        out[label] = mcmcbench.loglog_slope(ns, vs) if len(set(ns)) > 1 else math.nan
    return out


# ---------------------------------------------------------------- DP two-sample test

def _dp2prop_replicate(r, n, m, theta_x, theta_y, epsilon, reps, seed, path):
    stream = SeedStream(seed, path + (r,))
    prob = dptest.simulate_problem(n, m, theta_x, theta_y, epsilon, stream.child(0))
    one = dptest.dp2prop_onestep_pvalue(prob, reps, stream.child(1))
    boot = dptest.dp2prop_bootstrap_pvalue(prob, reps, stream.child(2))
    return one.p_value, boot.p_value, one.degenerate


def dp2prop_pvalues(n, m, theta_x, theta_y, epsilon, outer, reps, stream, threads=1):
    fn = partial(_dp2prop_replicate, n=n, m=m, theta_x=theta_x, theta_y=theta_y, epsilon=epsilon,
                 reps=reps, seed=stream.master_seed, path=stream.path)
    out = np.array(replicate_map(fn, outer, threads))
    return dptest.PvalueStudy(theta_x, theta_y, out[:, 0], out[:, 1], int(out[:, 2].sum()))


def dp2prop_null(n, m, theta_x, epsilon, outer, reps, stream, threads=1, grid_points=100) -> ResultTable:
    """Empirical cdf of null p-values for both tests on a grid of levels."""
    study = dp2prop_pvalues(n, m, theta_x, theta_x, epsilon, outer, reps, stream, threads)
    rows = []
    for level in np.arange(1, grid_points + 1) / grid_points:
        rows.append([float(level), float(np.mean(study.onestep <= level)), float(np.mean(study.bootstrap <= level))])
    table = ResultTable(["level", "ecdf_onestep", "ecdf_bootstrap"], rows)
    table.metadata["sup_distance_onestep"] = repr(dptest.ecdf_sup_distance(study.onestep))
    table.metadata["sup_distance_bootstrap"] = repr(dptest.ecdf_sup_distance(study.bootstrap))
    table.metadata["degenerate_estimates"] = study.degenerate
    return table, study


def dp2prop_power(n, m, theta_x, theta_y_grid, epsilon, alpha, outer, reps, stream, threads=1) -> ResultTable:
    """Power of both tests at level alpha along a grid of treatment proportions."""
    rows = []
    for j, theta_y in enumerate(theta_y_grid):
        study = dp2prop_pvalues(n, m, theta_x, theta_y, epsilon, outer, reps, stream.child(j), threads)
        (p1, se1), (p2, se2) = study.power(alpha)
        rows.append([float(theta_y), p1, se1, p2, se2])
    return ResultTable(["theta_y", "power_onestep", "se_onestep", "power_bootstrap", "se_bootstrap"], rows)


# ---------------------------------------------------------------- benchmark

def bench_mcmc(n_grid, sweeps, onestep_reps, step_sd, stream) -> ResultTable:
    result = mcmcbench.run_benchmark(n_grid, sweeps, onestep_reps, stream, step_sd=step_sd)
    rows = [[r.n, r.seconds_per_mcmc_round, r.seconds_per_onestep, r.acceptance_rate] for r in result.rows]
    table = ResultTable(["n", "mcmc_round_seconds", "onestep_seconds", "acceptance_rate"], rows)
    table.metadata["mcmc_loglog_slope"] = repr(result.mcmc_slope)
    table.metadata["onestep_loglog_slope"] = repr(result.onestep_slope)
    return table
