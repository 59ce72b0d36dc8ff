"""Distribution primitives: log-density, cdf and quantile.

Every family samples by quantile transform of uniforms, so a draw is a
deterministic function of its seed. Methods accept scalars or numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from onestep import kernels

LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


def _check_unit_open(u):
    u = np.asarray(u, dtype=np.float64)
    if np.any(~(u > 0.0) | ~(u < 1.0)):
        raise ValueError("quantile argument must lie strictly inside (0, 1)")
    return u


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


class Distribution:
    """Base class. Subclasses are frozen dataclasses with validated parameters."""

    continuous = True

    def log_pdf(self, x):
        raise NotImplementedError

    def cdf(self, x):
        raise NotImplementedError

    def quantile(self, u):
        raise NotImplementedError


@dataclass(frozen=True)
class Normal(Distribution):
    mean: float = 0.0
    sd: float = 1.0

    def __post_init__(self):
        if not self.sd > 0:
            raise ValueError(f"Normal sd must be > 0, got {self.sd}")

    def log_pdf(self, x):
        z = (np.asarray(x, dtype=np.float64) - self.mean) / self.sd
        return _out(-0.5 * z * z - math.log(self.sd) - LOG_SQRT_2PI)

    def cdf(self, x):
        return _out(special.ndtr((np.asarray(x, dtype=np.float64) - self.mean) / self.sd))

    def quantile(self, u):
        u = _check_unit_open(u)
        return _out(self.mean + self.sd * kernels.normal_quantile(u))


@dataclass(frozen=True)
class Uniform(Distribution):
    lo: float = 0.0
    hi: float = 1.0

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"Uniform needs lo < hi, got ({self.lo}, {self.hi})")

    def log_pdf(self, x):
        x = np.asarray(x, dtype=np.float64)
        inside = (x >= self.lo) & (x <= self.hi)
        return _out(np.where(inside, -math.log(self.hi - self.lo), -np.inf))

    def cdf(self, x):
        x = np.asarray(x, dtype=np.float64)
        return _out(np.clip((x - self.lo) / (self.hi - self.lo), 0.0, 1.0))

    def quantile(self, u):
        u = _check_unit_open(u)
        return _out(self.lo + (self.hi - self.lo) * u)


@dataclass(frozen=True)
class Laplace(Distribution):
    location: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError(f"Laplace scale must be > 0, got {self.scale}")

    def log_pdf(self, x):
        x = np.asarray(x, dtype=np.float64)
        return _out(-np.abs(x - self.location) / self.scale - math.log(2.0 * self.scale))

    def cdf(self, x):
        z = (np.asarray(x, dtype=np.float64) - self.location) / self.scale
        return _out(np.where(z < 0, 0.5 * np.exp(np.minimum(z, 0.0)),
                             1.0 - 0.5 * np.exp(-np.maximum(z, 0.0))))

    def quantile(self, u):
        u = _check_unit_open(u)
        centred = u - 0.5
        return _out(self.location - self.scale * np.sign(centred) * np.log1p(-2.0 * np.abs(centred)))


@dataclass(frozen=True)
class Geometric(Distribution):
    """Number of failures before the first success; support {0, 1, 2, ...}."""

    success_prob: float

    continuous = False

    def __post_init__(self):
        if not 0 < self.success_prob <= 1:
            raise ValueError(f"Geometric success_prob must be in (0, 1], got {self.success_prob}")

    def log_pdf(self, x):
        x = np.asarray(x, dtype=np.float64)
        ok = (x >= 0) & (x == np.floor(x))
        xs = np.where(ok, x, 0.0)
        val = math.log(self.success_prob) + special.xlog1py(xs, -self.success_prob)
        return _out(np.where(ok, val, -np.inf))

    def cdf(self, x):
        x = np.asarray(x, dtype=np.float64)
        # negative x is masked below; clamping keeps expm1 finite there
        k = np.maximum(np.floor(x), -1.0)
        if self.success_prob == 1.0:
            return _out(np.where(x >= 0, 1.0, 0.0))
        with np.errstate(invalid="ignore"):
            val = -np.expm1((k + 1.0) * math.log1p(-self.success_prob))
        return _out(np.where(x >= 0, val, 0.0))

    def quantile(self, u):
        u = _check_unit_open(u)
        if self.success_prob == 1.0:
            return _out(np.zeros_like(u))
        return _out(geometric_quantile(u, -math.log1p(-self.success_prob)))


def geometric_quantile(u, rate):
    """Quantile of Geometric on {0, 1, ...} with failure probability ``exp(-rate)``.

    ``rate = inf`` gives the point mass at 0.
    """
    u = np.asarray(u, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        k = np.ceil(-np.log1p(-u) / rate) - 1.0
    return np.maximum(k, 0.0)


@dataclass(frozen=True)
class Bernoulli(Distribution):
    p: float

    continuous = False

    def __post_init__(self):
        if not 0 <= self.p <= 1:
            raise ValueError(f"Bernoulli p must be in [0, 1], got {self.p}")

    def log_pdf(self, x):
        x = np.asarray(x, dtype=np.float64)
        with np.errstate(divide="ignore"):
            val = np.where(x == 1, np.log(self.p), np.where(x == 0, np.log1p(-self.p), -np.inf))
        return _out(val)

    def cdf(self, x):
        x = np.asarray(x, dtype=np.float64)
        return _out(np.where(x < 0, 0.0, np.where(x < 1, 1.0 - self.p, 1.0)))

    def quantile(self, u):
        u = _check_unit_open(u)
        return _out((u > 1.0 - self.p).astype(np.float64))


@dataclass(frozen=True)
class Binomial(Distribution):
    trials: int
    p: float

    continuous = False

    def __post_init__(self):
        if int(self.trials) != self.trials or self.trials < 0:
            raise ValueError(f"Binomial trials must be a non-negative integer, got {self.trials}")
        if not 0 <= self.p <= 1:
            raise ValueError(f"Binomial p must be in [0, 1], got {self.p}")

    def log_pdf(self, x):
        x = np.asarray(x, dtype=np.float64)
        n = self.trials
        ok = (x >= 0) & (x <= n) & (x == np.floor(x))
        xs = np.where(ok, x, 0.0)
        logc = special.gammaln(n + 1) - special.gammaln(xs + 1) - special.gammaln(n - xs + 1)
        with np.errstate(divide="ignore", invalid="ignore"):
            val = logc + special.xlogy(xs, self.p) + special.xlog1py(n - xs, -self.p)
        return _out(np.where(ok, val, -np.inf))

    def cdf(self, x):
        n, p = self.trials, self.p

        def one(k):
            if k < 0:
                return 0.0
            if k >= n or p == 0.0:
                return 1.0
            if p == 1.0:
                return 0.0
            # P(X <= k) = I_{1-p}(n - k, k + 1)
            return float(kernels.reg_inc_beta(n - k, k + 1.0, 1.0 - p))

        k = np.floor(np.asarray(x, dtype=np.float64))
        return _out(np.vectorize(one, otypes=[np.float64])(k))

    def quantile(self, u):
        u = _check_unit_open(u)
        return _out(kernels.binomial_quantile(self.trials, self.p, u).astype(np.float64))


@dataclass(frozen=True)
class Beta(Distribution):
    alpha: float
    beta: float

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise ValueError(f"Beta parameters must be > 0, got ({self.alpha}, {self.beta})")

    @property
    def log_beta_fn(self):
        return math.lgamma(self.alpha) + math.lgamma(self.beta) - math.lgamma(self.alpha + self.beta)

    def log_pdf(self, x):
        x = np.asarray(x, dtype=np.float64)
        inside = (x > 0) & (x < 1)
        xs = np.where(inside, x, 0.5)
        val = (self.alpha - 1) * np.log(xs) + (self.beta - 1) * np.log1p(-xs) - self.log_beta_fn
        return _out(np.where(inside, val, -np.inf))

    def cdf(self, x):
        return _out(kernels.reg_inc_beta(self.alpha, self.beta, np.asarray(x, dtype=np.float64)))

    def quantile(self, u):
        u = _check_unit_open(u)
        return _out(kernels.beta_quantile(self.alpha, self.beta, u))


@dataclass(frozen=True)
class BurrXII(Distribution):
    """Burr type XII with density c k x^(c-1) (1 + x^c)^(-(k+1)) on x > 0."""

    c: float
    k: float

    def __post_init__(self):
        if not (self.c > 0 and self.k > 0):
            raise ValueError(f"Burr parameters must be > 0, got ({self.c}, {self.k})")

    def log_pdf(self, x):
        x = np.asarray(x, dtype=np.float64)
        inside = x > 0
        logx = np.log(np.where(inside, x, 1.0))
        val = (math.log(self.c) + math.log(self.k) + (self.c - 1.0) * logx
               - (self.k + 1.0) * np.logaddexp(0.0, self.c * logx))
        return _out(np.where(inside, val, -np.inf))

    def cdf(self, x):
        x = np.asarray(x, dtype=np.float64)
        inside = x > 0
        logx = np.log(np.where(inside, x, 1.0))
        val = -np.expm1(-self.k * np.logaddexp(0.0, self.c * logx))
        return _out(np.where(inside, val, 0.0))

    def quantile(self, u):
        u = _check_unit_open(u)
        return _out(np.expm1(-np.log1p(-u) / self.k) ** (1.0 / self.c))


@dataclass(frozen=True)
class Tulap(Distribution):
    """Tulap(0, exp(-epsilon), 0): difference of two geometrics plus Uniform(-1/2, 1/2)."""

    epsilon: float

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"Tulap epsilon must be > 0, got {self.epsilon}")

    @property
    def b(self):
        return math.exp(-self.epsilon)

    def log_pdf(self, x):
        x = np.asarray(x, dtype=np.float64)
        b = self.b
        j = np.abs(np.floor(x + 0.5))
        if b == 0.0:
            return _out(np.where(j == 0, 0.0, -np.inf))
        return _out(math.log((1.0 - b) / (1.0 + b)) - self.epsilon * j)

    def _lower_cdf(self, x):
        # valid for x <= 0
        b = self.b
        j = np.floor(x + 0.5)
        if b == 0.0:
            return np.clip(x + 0.5, 0.0, 1.0)
        return np.exp(self.epsilon * j) / (1.0 + b) * (b + (1.0 - b) * (x - j + 0.5))

    def cdf(self, x):
        x = np.asarray(x, dtype=np.float64)
        neg = np.minimum(x, 0.0)
        pos = np.minimum(-x, 0.0)
        return _out(np.where(x <= 0, self._lower_cdf(neg), 1.0 - self._lower_cdf(pos)))

    def _lower_quantile(self, u):
        # valid for u <= 1/2
        b = self.b
        if b == 0.0:
            return u - 0.5
        level = np.log(u * (1.0 + b)) / -self.epsilon
        j = np.minimum(np.floor(1.0 - level), 0.0)
        return j - 0.5 + (u * (1.0 + b) * np.exp(-self.epsilon * j) - b) / (1.0 - b)

    def quantile(self, u):
        u = _check_unit_open(u)
        low = np.minimum(u, 1.0 - u)
        q = self._lower_quantile(low)
        return _out(np.where(u <= 0.5, q, -q))


def tulap_from_uniforms(u1, u2, u3, epsilon):
    """Tulap(0, exp(-epsilon), 0) noise as ``G1 - G2 + (u3 - 1/2)``.

    G1 and G2 are geometric quantiles (support {0, 1, ...}, success
    probability ``1 - exp(-epsilon)``) of ``u1`` and ``u2``. Vectorized.
    """
    if not epsilon > 0:
        raise ValueError(f"epsilon must be > 0, got {epsilon}")
    g1 = geometric_quantile(u1, epsilon)
    g2 = geometric_quantile(u2, epsilon)
    return _out(g1 - g2 + (np.asarray(u3, dtype=np.float64) - 0.5))


def log_pdf(d: Distribution, x):
    return d.log_pdf(x)


def cdf(d: Distribution, x):
    return d.cdf(x)


def quantile(d: Distribution, u):
    return d.quantile(u)


def reg_inc_beta(a, b, x):
    """Regularized incomplete beta function I_x(a, b) by continued fraction."""
    if not (a > 0 and b > 0):
        raise ValueError(f"reg_inc_beta needs a > 0 and b > 0, got ({a}, {b})")
    xa = np.asarray(x, dtype=np.float64)
    if np.any(~(xa >= 0.0) | ~(xa <= 1.0)):
        raise ValueError("reg_inc_beta needs 0 <= x <= 1")
    return _out(kernels.reg_inc_beta(float(a), float(b), xa))
