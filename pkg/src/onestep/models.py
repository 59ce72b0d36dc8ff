"""Parametric models: seeded samplers, efficient estimators, parameter boxes.

A model turns a block of uniforms (one row per observation, a fixed number of
columns per observation) into a dataset at any parameter value, so the same
seeds can be replayed at two different parameters. Parameter spaces are boxes
and projection onto them is a coordinate-wise clamp.

Datasets are numpy arrays whose layout is model specific:

* scalar models: 1-d array of ``n`` observations
* :class:`LinearRegression`: 1-d response vector (the design is fixed context)
* :class:`LogLinear`: length-16 vector of cell counts summing to ``n``
* :class:`TulapTwoSample`: the pair ``(x_tilde, y_tilde)``
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from importlib import resources

import numpy as np
from scipy import linalg, special

from onestep import dists, kernels


class DomainError(ValueError):
    """Parameter outside the model's parameter box."""


class UnsupportedModelError(NotImplementedError):
    pass


class EstimationError(RuntimeError):
    """An iterative estimator failed to converge.

    Attributes:
        last_iterate: parameter value at the last iteration, if any.
        grad_norm: norm of the (projected) gradient there, if known.
    """

    def __init__(self, message, last_iterate=None, grad_norm=None):
        super().__init__(message)
        self.last_iterate = None if last_iterate is None else np.asarray(last_iterate, dtype=float)
        self.grad_norm = grad_norm


class Model:
    """Base class for a parametric family with a seeded sampler."""

    name = "model"
    uniforms_per_obs = 1
    scalar = False

    # parameter box; subclasses set arrays as class or instance attributes
    lower: np.ndarray
    upper: np.ndarray

    @property
    def param_dim(self) -> int:
        return len(self.lower)

    def __repr__(self):
        return f"{type(self).__name__}()"

    def check_theta(self, theta) -> np.ndarray:
        theta = np.atleast_1d(np.asarray(theta, dtype=np.float64))
        if theta.shape != (self.param_dim,):
            raise ValueError(f"{self.name}: expected {self.param_dim} parameters, got shape {theta.shape}")
        if not (np.isfinite(theta).all() and (theta >= self.lower).all() and (theta <= self.upper).all()):
            raise DomainError(f"{self.name}: parameter {theta} outside box [{self.lower}, {self.upper}]")
        return theta

    def check_block(self, block) -> np.ndarray:
        block = np.asarray(block, dtype=np.float64)
        if block.ndim != 2 or block.shape[1] != self.uniforms_per_obs or block.shape[0] < 1:
            raise ValueError(f"{self.name}: seed block must be (n, {self.uniforms_per_obs}), got {block.shape}")
        return block

    def project(self, theta) -> np.ndarray:
        return np.clip(np.atleast_1d(np.asarray(theta, dtype=np.float64)), self.lower, self.upper)

    def sample(self, theta: np.ndarray, block: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def estimate(self, data) -> np.ndarray:
        raise NotImplementedError

    def reference_cdf(self, theta):
        raise UnsupportedModelError(f"{self.name} is not a scalar-valued model")

    def n_obs(self, data) -> int:
        return len(data)


def sample_from_seeds(model: Model, theta, block) -> np.ndarray:
    """Dataset drawn from ``model`` at ``theta`` using the given seed block."""
    theta = model.check_theta(theta)
    block = model.check_block(block)
    return model.sample(theta, block)


def estimate(model: Model, data) -> np.ndarray:
    return model.estimate(data)


def project(model: Model, theta) -> np.ndarray:
    return model.project(theta)


def reference_cdf(model: Model, theta):
    return model.reference_cdf(model.check_theta(theta))


class NormalLocation(Model):
    """N(mu, 1) with the sample mean as estimator."""

    name = "normal"
    scalar = True
    lower = np.array([-np.inf])
    upper = np.array([np.inf])

    def sample(self, theta, block):
        return theta[0] + kernels.normal_quantile(block[:, 0])

    def estimate(self, data):
        data = np.asarray(data, dtype=np.float64)
        if data.size == 0:
            raise ValueError("empty dataset")
        return np.array([data.mean()])

    def reference_cdf(self, theta):
        mu = float(self.check_theta(theta)[0])
        return dists.Normal(mu, 1.0).cdf


class BernoulliUniform(Model):
    """X = W + U with W ~ Bernoulli(theta), U ~ Uniform(0, 1), two seeds per draw.

    The fractional part of every draw is its second seed, whatever theta is.
    """

    name = "bernoulli-uniform"
    scalar = True
    uniforms_per_obs = 2
    lower = np.array([0.0])
    upper = np.array([1.0])

    def sample(self, theta, block):
        return (block[:, 0] > 1.0 - theta[0]).astype(np.float64) + block[:, 1]

    def estimate(self, data):
        data = np.asarray(data, dtype=np.float64)
        if data.size == 0:
            raise ValueError("empty dataset")
        return np.array([min(max(data.mean() - 0.5, 0.0), 1.0)])

    def reference_cdf(self, theta):
        p = float(self.check_theta(theta)[0])

        def cdf(x):
            x = np.asarray(x, dtype=np.float64)
            return (1.0 - p) * np.clip(x, 0.0, 1.0) + p * np.clip(x - 1.0, 0.0, 1.0)

        return cdf


# ---------------------------------------------------------------- Burr XII

BURR_FLOOR = 1e-8
BURR_C_BRACKET = (1e-3, 1e3)


def burr_loglik(theta, x) -> float:
    c, k = theta
    return float(np.sum(dists.BurrXII(c, k).log_pdf(np.asarray(x, dtype=np.float64))))


def burr_score(theta, x) -> np.ndarray:
    """Gradient of the Burr log-likelihood in (c, k)."""
    c, k = theta
    logx = np.log(np.asarray(x, dtype=np.float64))
    n = logx.size
    s = c * logx
    w = special.expit(s)
    dc = n / c + logx.sum() - (k + 1.0) * np.sum(logx * w)
    dk = n / k - np.sum(np.logaddexp(0.0, s))
    return np.array([dc, dk])


def burr_mle(x, max_iter=200) -> np.ndarray:
    """Burr XII MLE by a profile search in c.

    For fixed c the likelihood in k is maximized at n / sum(log(1 + x^c)).
    The profile score in c is solved with Newton steps kept inside a bracket
    that starts at [1e-3, 1e3]; steps leaving it are replaced by geometric
    bisection.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.size == 0 or np.any(~(x > 0)) or not np.all(np.isfinite(x)):
        raise ValueError("Burr data must be finite and strictly positive")
    logx = np.log(x)
    n = logx.size
    sum_log = logx.sum()

    def profile(c):
        s = c * logx
        a0 = np.logaddexp(0.0, s).sum()
        w = special.expit(s)
        a1 = np.sum(logx * w)
        a2 = np.sum(logx * logx * w * (1.0 - w))
        score = n / c - n * a1 / a0 + sum_log - a1
        slope = -n / (c * c) - n * (a2 * a0 - a1 * a1) / (a0 * a0) - a2
        return score, slope, a0

    lo, hi = BURR_C_BRACKET
    if not (profile(lo)[0] > 0 > profile(hi)[0]):
        raise EstimationError("Burr profile score has no sign change on [1e-3, 1e3]",
                              last_iterate=None)
    c = 1.0
    score = math.nan
    for _ in range(max_iter):
        score, slope, a0 = profile(c)
        if score > 0:
            lo = c
        else:
            hi = c
        if abs(score) <= 1e-12 * n:
            break
        c_new = c - score / slope if slope < 0 else math.nan
        if not (lo < c_new < hi):
            c_new = math.sqrt(lo * hi)
        if abs(c_new - c) <= 1e-15 * c:
            c = c_new
            break
        c = c_new
    else:
        raise EstimationError("Burr profile Newton did not converge",
                              last_iterate=[c, n / profile(c)[2]], grad_norm=abs(score))
    a0 = profile(c)[2]
    return np.array([max(c, BURR_FLOOR), max(n / a0, BURR_FLOOR)])


class BurrModel(Model):
    name = "burr"
    scalar = True
    lower = np.array([BURR_FLOOR, BURR_FLOOR])
    upper = np.array([np.inf, np.inf])

    def sample(self, theta, block):
        c, k = theta
        u = block[:, 0]
        return np.expm1(-np.log1p(-u) / k) ** (1.0 / c)

    def estimate(self, data):
        return burr_mle(data)

    def reference_cdf(self, theta):
        c, k = self.check_theta(theta)
        return dists.BurrXII(c, k).cdf


# ---------------------------------------------------------------- Beta

def beta_loglik_stats(theta, s1, s2) -> float:
    """Per-observation Beta log-likelihood given mean log x and mean log(1-x)."""
    a, b = theta
    return (a - 1.0) * s1 + (b - 1.0) * s2 - (math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b))


def beta_score_stats(theta, s1, s2) -> np.ndarray:
    a, b = theta
    common = special.digamma(a + b)
    return np.array([s1 - special.digamma(a) + common, s2 - special.digamma(b) + common])


def beta_mle_from_stats(s1, s2, lower=None, max_iter=100) -> np.ndarray:
    """Maximize the Beta likelihood given its two sufficient statistics.

    ``s1`` and ``s2`` are the means of ``log x`` and ``log(1 - x)``. With
    ``lower`` set, the maximization is over the box ``theta >= lower`` and uses
    an active-set projected Newton. The starting point uses only ``s1`` and
    ``s2`` (the geometric-mean approximation digamma(x) ~ log(x - 1/2)).
    """
    g1, g2 = math.exp(s1), math.exp(s2)
    if not g1 + g2 < 1.0:
        raise EstimationError("Beta likelihood has no finite maximizer "
                              f"(exp(s1) + exp(s2) = {g1 + g2:.6g} >= 1)")
    scale = 0.5 / (1.0 - g1 - g2)
    theta = np.array([0.5 + g1 * scale, 0.5 + g2 * scale])
    lower = None if lower is None else np.asarray(lower, dtype=np.float64)
    if lower is not None:
        theta = np.maximum(theta, lower)

    pg_norm = math.inf
    for _ in range(max_iter):
        a, b = theta
        grad = beta_score_stats(theta, s1, s2)
        tri = special.polygamma(1, a + b)
        hess = np.array([[tri - special.polygamma(1, a), tri],
                         [tri, tri - special.polygamma(1, b)]])
        free = np.ones(2, dtype=bool)
        if lower is not None:
            free = ~((theta <= lower) & (grad < 0))
        pg_norm = float(np.linalg.norm(grad[free])) if free.any() else 0.0
        if pg_norm < 1e-12:
            return theta
        step = np.zeros(2)
        step[free] = -np.linalg.solve(hess[np.ix_(free, free)], grad[free])
        f0 = beta_loglik_stats(theta, s1, s2)
        t = 1.0
        for _ in range(50):
            cand = theta + t * step
            if lower is not None:
                cand = np.maximum(cand, lower)
            if np.all(cand > 0) and beta_loglik_stats(cand, s1, s2) >= f0 - 1e-15 * abs(f0):
                break
            t *= 0.5
        else:
            raise EstimationError("Beta Newton step halving exhausted", theta, pg_norm)
        if np.max(np.abs(cand - theta)) <= 1e-15 * np.max(np.abs(theta)):
            return cand
        theta = cand
    raise EstimationError("Beta Newton did not converge", theta, pg_norm)


def beta_stats(x):
    x = np.asarray(x, dtype=np.float64)
    return float(np.mean(np.log(x))), float(np.mean(np.log1p(-x)))


class BetaModel(Model):
    """Beta(alpha, beta) on the box alpha, beta >= 1 with the MLE as estimator."""

    name = "beta"
    scalar = True
    lower = np.array([1.0, 1.0])
    upper = np.array([np.inf, np.inf])

    def sample(self, theta, block):
        return kernels.beta_quantile(theta[0], theta[1], block[:, 0])

    def estimate(self, data):
        data = np.asarray(data, dtype=np.float64)
        if data.size == 0 or np.any(~(data > 0)) or np.any(~(data < 1)):
            raise ValueError("Beta data must lie strictly inside (0, 1)")
        s1, s2 = beta_stats(data)
        return beta_mle_from_stats(s1, s2)

    def reference_cdf(self, theta):
        a, b = self.check_theta(theta)
        return dists.Beta(a, b).cdf


# ---------------------------------------------------------------- regression

class LinearRegression(Model):
    """y = Z beta + N(0, 1) noise with a fixed design Z; least squares estimator."""

    name = "regression"

    def __init__(self, design):
        design = np.array(design, dtype=np.float64, order="C")
        if design.ndim != 2 or design.shape[0] < design.shape[1]:
            raise ValueError(f"design must be n x d with n >= d, got {design.shape}")
        design.flags.writeable = False
        self._design = design
        self.lower = np.full(design.shape[1], -np.inf)
        self.upper = np.full(design.shape[1], np.inf)
        # the design is fixed, so factor it once: beta_hat = R^-1 Q^T y
        q, r = np.linalg.qr(design)
        self._solver = linalg.solve_triangular(r, q.T)

    @property
    def design(self):
        return self._design

    def __repr__(self):
        return f"LinearRegression(design shape={self._design.shape})"

    def check_block(self, block):
        block = super().check_block(block)
        if block.shape[0] != self._design.shape[0]:
            raise ValueError(f"regression block needs {self._design.shape[0]} rows, got {block.shape[0]}")
        return block

    def sample(self, theta, block):
        return self._design @ theta + kernels.normal_quantile(block[:, 0])

    def estimate(self, data):
        y = np.asarray(data, dtype=np.float64)
        if y.shape != (self._design.shape[0],):
            raise ValueError(f"regression response must have length {self._design.shape[0]}")
        return self._solver @ y


# ---------------------------------------------------------------- log-linear

FACTORS = ("gender", "location", "seatbelt", "injury")
LEVELS = (("female", "male"), ("urban", "rural"), ("no", "yes"), ("no", "yes"))
PAIRS = tuple(itertools.combinations(range(4), 2))
COEFFICIENT_NAMES = ("intercept", "G", "L", "S", "I", "GL", "GS", "GI", "LS", "LI", "SI")


def _loglinear_design() -> np.ndarray:
    # dummy coding with the last level of each factor as baseline
    rows = []
    for cell in itertools.product((0, 1), repeat=4):
        ind = [1.0 if level == 0 else 0.0 for level in cell]
        rows.append([1.0] + ind + [ind[a] * ind[b] for a, b in PAIRS])
    return np.array(rows)


LOGLINEAR_DESIGN = _loglinear_design()


def load_seatbelt() -> np.ndarray:
    """The 16 seatbelt counts in table order (gender, location, seatbelt, injury)."""
    text = resources.files("onestep").joinpath("data/seatbelt.csv").read_text()
    return read_loglinear_counts(io.StringIO(text))


def read_loglinear_counts(handle) -> np.ndarray:
    """Parse ``gender,location,seatbelt,injury,count`` rows into table order."""
    lines = [line for line in handle if line.strip() and not line.lstrip().startswith("#")]
    reader = csv.DictReader(lines)
    counts = np.full(16, -1.0)
    for rowno, row in enumerate(reader, start=2):
        try:
            idx = 0
            for f, levels in zip(FACTORS, LEVELS):
                idx = idx * 2 + levels.index(row[f].strip().lower())
            value = float(row["count"])
        except (KeyError, ValueError, AttributeError) as exc:
            raise ValueError(f"row {rowno}: cannot parse log-linear cell ({exc})") from None
        if value < 0 or value != math.floor(value):
            raise ValueError(f"row {rowno}: count must be a non-negative integer")
        counts[idx] = value
    if np.any(counts < 0):
        raise ValueError("log-linear input must list all 16 cells")
    return counts


def _two_way_margins(table):
    out = []
    for a, b in PAIRS:
        other = tuple(ax for ax in range(4) if ax not in (a, b))
        out.append(table.sum(axis=other))
    return out


def ipf_fit(counts, tol=1e-10, max_sweeps=10_000):
    """Fitted cell counts of the all-two-way-interaction model by IPF.

    Returns ``(fitted, smoothed)``. When an observed two-way margin is zero the
    maximum likelihood estimate has no finite coefficients; in that case 0.5
    is added to every cell before fitting and ``smoothed`` is True.
    """
    obs = np.asarray(counts, dtype=np.float64).reshape(2, 2, 2, 2)
    smoothed = any(np.any(m == 0) for m in _two_way_margins(obs))
    if smoothed:
        obs = obs + 0.5
    targets = _two_way_margins(obs)
    fit = np.full_like(obs, obs.sum() / 16.0)
    dev = math.inf
    for _ in range(max_sweeps):
        for (a, b), target in zip(PAIRS, targets):
            other = tuple(ax for ax in range(4) if ax not in (a, b))
            current = fit.sum(axis=other, keepdims=True)
            fit *= np.expand_dims(target, other) / current
        dev = max(float(np.max(np.abs(m - t))) for m, t in zip(_two_way_margins(fit), targets))
        if dev < tol:
            return fit.ravel(), smoothed
    raise EstimationError(f"IPF did not reach margin tolerance {tol} (deviation {dev:.3g})")


def loglinear_probabilities(theta) -> np.ndarray:
    eta = LOGLINEAR_DESIGN @ np.asarray(theta, dtype=np.float64)
    p = np.exp(eta - eta.max())
    return p / p.sum()


def loglinear_coefficients(probabilities) -> np.ndarray:
    logp = np.log(np.asarray(probabilities, dtype=np.float64))
    return np.linalg.lstsq(LOGLINEAR_DESIGN, logp, rcond=None)[0]


class LogLinear(Model):
    """Multinomial 2x2x2x2 table with all main effects and two-way interactions.

    The parameter is the 11-vector of dummy-coded coefficients (intercept
    first). One uniform per subject picks a cell by inverting the cumulative
    cell probabilities in table order.
    """

    name = "loglinear"
    lower = np.full(11, -np.inf)
    upper = np.full(11, np.inf)

    def sample(self, theta, block):
        cum = np.cumsum(loglinear_probabilities(theta))
        cells = np.minimum(np.searchsorted(cum, block[:, 0], side="left"), 15)
        return np.bincount(cells, minlength=16).astype(np.float64)

    def fit(self, data):
        """Fitted cell probabilities (16,) and coefficients (11,)."""
        counts = np.asarray(data, dtype=np.float64)
        if counts.shape != (16,) or np.any(counts < 0) or counts.sum() <= 0:
            raise ValueError("log-linear data must be 16 non-negative counts with positive total")
        fitted, _ = ipf_fit(counts)
        probs = fitted / fitted.sum()
        return probs, loglinear_coefficients(probs)

    def estimate(self, data):
        return self.fit(data)[1]

    def probabilities(self, theta) -> np.ndarray:
        return loglinear_probabilities(theta)

    def n_obs(self, data):
        return int(round(float(np.sum(data))))


# ---------------------------------------------------------------- DP two-sample

class TulapTwoSample(Model):
    """Noisy counts (x_tilde, y_tilde) of two Bernoulli(theta) samples of sizes n, m.

    Each count carries independent Tulap(0, exp(-epsilon), 0) noise. A dataset
    is one observation drawn from 8 seeds: one Binomial inverse and three Tulap
    seeds per arm.
    """

    name = "tulap-two-sample"
    uniforms_per_obs = 8
    lower = np.array([0.0])
    upper = np.array([1.0])

    def __init__(self, n: int, m: int, epsilon: float):
        if n < 1 or m < 1:
            raise ValueError("sample sizes must be >= 1")
        if not epsilon > 0:
            raise ValueError("epsilon must be > 0")
        self.n = int(n)
        self.m = int(m)
        self.epsilon = float(epsilon)

    def __repr__(self):
        return f"TulapTwoSample(n={self.n}, m={self.m}, epsilon={self.epsilon})"

    def check_block(self, block):
        block = super().check_block(block)
        if block.shape[0] != 1:
            raise ValueError("the two-sample Tulap dataset is a single observation (block of 1 row)")
        return block

    def sample_batch(self, theta, block) -> np.ndarray:
        """Replicate-wise sampling: row ``r`` of ``block`` at ``theta[r]``. Returns (r, 2)."""
        block = np.asarray(block, dtype=np.float64)
        theta = np.broadcast_to(np.asarray(theta, dtype=np.float64), block.shape[:1])
        x = kernels.binomial_quantile(self.n, theta, block[:, 0]) + dists.tulap_from_uniforms(
            block[:, 1], block[:, 2], block[:, 3], self.epsilon)
        y = kernels.binomial_quantile(self.m, theta, block[:, 4]) + dists.tulap_from_uniforms(
            block[:, 5], block[:, 6], block[:, 7], self.epsilon)
        return np.column_stack([x, y])

    def estimate_batch(self, data) -> np.ndarray:
        data = np.asarray(data, dtype=np.float64).reshape(-1, 2)
        return np.clip((data[:, 0] + data[:, 1]) / (self.n + self.m), 0.0, 1.0)

    def sample(self, theta, block):
        return self.sample_batch(theta[0], block)[0]

    def estimate(self, data):
        data = np.asarray(data, dtype=np.float64)
        if data.shape != (2,):
            raise ValueError("expected the pair (x_tilde, y_tilde)")
        return self.estimate_batch(data)

    def n_obs(self, data):
        return 1


MODELS = {
    "normal": NormalLocation,
    "bernoulli-uniform": BernoulliUniform,
    "burr": BurrModel,
    "beta": BetaModel,
    "loglinear": LogLinear,
}
