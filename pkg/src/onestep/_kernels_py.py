"""Pure numpy implementations of the hot kernels.

Mirrors ``_kernels.pyx`` function for function; :mod:`onestep.kernels` picks
whichever is available. Results agree with the compiled versions to rounding.
"""

import math

import numpy as np

BACKEND = "python"

# Wichura (1988), algorithm AS241 (PPND16)
_A = (3.3871328727963666080e0, 1.3314166789178437745e2, 1.9715909503065514427e3,
      1.3731693765509461125e4, 4.5921953931549871457e4, 6.7265770927008700853e4,
      3.3430575583588128105e4, 2.5090809287301226727e3)
_B = (1.0, 4.2313330701600911252e1, 6.8718700749205790830e2, 5.3941960214247511077e3,
      2.1213794301586595867e4, 3.9307895800092710610e4, 2.8729085735721942674e4,
      5.2264952788528545610e3)
_C = (1.42343711074968357734e0, 4.63033784615654529590e0, 5.76949722146069140550e0,
      3.64784832476320460504e0, 1.27045825245236838258e0, 2.41780725177450611770e-1,
      2.27238449892691845833e-2, 7.74545014278341407640e-4)
_D = (1.0, 2.05319162663775882187e0, 1.67638483018380384940e0, 6.89767334985100004550e-1,
      1.48103976427480074590e-1, 1.51986665636164571966e-2, 5.47593808499534494600e-4,
      1.05075007164441684324e-9)
_E = (6.65790464350110377720e0, 5.46378491116411436990e0, 1.78482653991729133580e0,
      2.96560571828504891230e-1, 2.65321895265761230930e-2, 1.24266094738807843860e-3,
      2.71155556874348757815e-5, 2.01033439929228813265e-7)
_F = (1.0, 5.99832206555887937690e-1, 1.36929880922735805310e-1, 1.48753612908506148525e-2,
      7.86869131145613259100e-4, 1.84631831751005468180e-5, 1.42151175831644588870e-7,
      2.04426310338993978564e-15)

_CF_EPS = 1e-16
_CF_TINY = 1e-300
_CF_MAXIT = 10000
_NEWTON_TOL = 1e-12
_NEWTON_MAXIT = 200


def _poly(coef, r):
    out = np.full_like(r, coef[-1])
    for c in coef[-2::-1]:
        out = out * r + c
    return out


def normal_quantile(u):
    u = np.asarray(u, dtype=np.float64)
    q = u - 0.5
    out = np.empty_like(u)
    central = np.abs(q) <= 0.425
    if central.any():
        qc = q[central]
        r = 0.180625 - qc * qc
        out[central] = qc * _poly(_A, r) / _poly(_B, r)
    tail = ~central
    if tail.any():
        qt = q[tail]
        r = np.where(qt < 0, u[tail], 1.0 - u[tail])
        r = np.sqrt(-np.log(r))
        near = r <= 5.0
        x = np.empty_like(r)
        rn = r[near] - 1.6
        x[near] = _poly(_C, rn) / _poly(_D, rn)
        rf = r[~near] - 5.0
        x[~near] = _poly(_E, rf) / _poly(_F, rf)
        out[tail] = np.where(qt < 0, -x, x)
    return out


def _betacf(a, b, x):
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = np.ones_like(x)
    d = 1.0 - qab * x / qap
    d = np.where(np.abs(d) < _CF_TINY, _CF_TINY, d)
    d = 1.0 / d
    h = d.copy()
    active = np.ones(x.shape, dtype=bool)
    for m in range(1, _CF_MAXIT + 1):
        m2 = 2.0 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d_new = 1.0 + aa * d
        d_new = np.where(np.abs(d_new) < _CF_TINY, _CF_TINY, d_new)
        c_new = 1.0 + aa / c
        c_new = np.where(np.abs(c_new) < _CF_TINY, _CF_TINY, c_new)
        d_new = 1.0 / d_new
        h_new = h * d_new * c_new
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d2 = 1.0 + aa * d_new
        d2 = np.where(np.abs(d2) < _CF_TINY, _CF_TINY, d2)
        c2 = 1.0 + aa / c_new
        c2 = np.where(np.abs(c2) < _CF_TINY, _CF_TINY, c2)
        d2 = 1.0 / d2
        delta = d2 * c2
        h_new = h_new * delta
        h = np.where(active, h_new, h)
        c = np.where(active, c2, c)
        d = np.where(active, d2, d)
        active &= np.abs(delta - 1.0) >= _CF_EPS
        if not active.any():
            break
    return h


def reg_inc_beta(a, b, x):
    """Regularized incomplete beta I_x(a, b), elementwise over ``x``."""
    x = np.asarray(x, dtype=np.float64)
    shape = x.shape
    x = x.ravel()
    a = float(a)
    b = float(b)
    out = np.empty_like(x)
    lo = x <= 0.0
    hi = x >= 1.0
    out[lo] = 0.0
    out[hi] = 1.0
    mid = ~(lo | hi)
    if mid.any():
        xm = x[mid]
        lbeta = math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)
        front = np.exp(a * np.log(xm) + b * np.log1p(-xm) - lbeta)
        direct = xm < (a + 1.0) / (a + b + 2.0)
        res = np.empty_like(xm)
        if direct.any():
            res[direct] = front[direct] * _betacf(a, b, xm[direct]) / a
        if (~direct).any():
            xr = 1.0 - xm[~direct]
            res[~direct] = 1.0 - front[~direct] * _betacf(b, a, xr) / b
        out[mid] = res
    return out.reshape(shape)


def _beta_initial(a, b, u):
    if a >= 1.0 and b >= 1.0:
        pp = np.where(u < 0.5, u, 1.0 - u)
        t = np.sqrt(-2.0 * np.log(pp))
        x = (2.30753 + t * 0.27061) / (1.0 + t * (0.99229 + t * 0.04481)) - t
        x = np.where(u < 0.5, -x, x)
        al = (x * x - 3.0) / 6.0
        h = 2.0 / (1.0 / (2.0 * a - 1.0) + 1.0 / (2.0 * b - 1.0))
        w = x * np.sqrt(al + h) / h - (1.0 / (2.0 * b - 1.0) - 1.0 / (2.0 * a - 1.0)) * (
            al + 5.0 / 6.0 - 2.0 / (3.0 * h))
        return a / (a + b * np.exp(2.0 * w))
    lna = math.log(a / (a + b))
    lnb = math.log(b / (a + b))
    t = math.exp(a * lna) / a
    v = math.exp(b * lnb) / b
    w = t + v
    return np.where(u < t / w, (a * w * u) ** (1.0 / a), 1.0 - (b * w * (1.0 - u)) ** (1.0 / b))


def beta_quantile(a, b, u):
    """Beta(a, b) quantile by bracketed Newton on I_x(a, b)."""
    u = np.asarray(u, dtype=np.float64)
    shape = u.shape
    u = u.ravel()
    a = float(a)
    b = float(b)
    lbeta = math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)
    x = _beta_initial(a, b, u)
    x = np.where(np.isfinite(x) & (x > 0.0) & (x < 1.0), x, 0.5)
    lo = np.zeros_like(u)
    hi = np.ones_like(u)
    active = np.ones(u.shape, dtype=bool)
    for _ in range(_NEWTON_MAXIT):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        xa = x[idx]
        f = reg_inc_beta(a, b, xa) - u[idx]
        below = f < 0.0
        lo[idx] = np.where(below, xa, lo[idx])
        hi[idx] = np.where(below, hi[idx], xa)
        logpdf = (a - 1.0) * np.log(xa) + (b - 1.0) * np.log1p(-xa) - lbeta
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            xn = xa - f / np.exp(logpdf)
        bad = ~np.isfinite(xn) | (xn <= lo[idx]) | (xn >= hi[idx])
        xn = np.where(bad, 0.5 * (lo[idx] + hi[idx]), xn)
        done = (f == 0.0) | (np.abs(xn - xa) <= _NEWTON_TOL * np.maximum(xa, 1e-300)) | (
            hi[idx] - lo[idx] <= _NEWTON_TOL * np.maximum(lo[idx], 1e-300))
        x[idx] = np.where(f == 0.0, xa, xn)
        active[idx[done]] = False
    return x.reshape(shape)


def binomial_quantile(trials, p, u):
    """Smallest k with Binomial(trials, p) cdf(k) >= u.

    Scans the cdf upward from 0 with an incrementally updated pmf. Where the
    starting mass ``(1-p)**trials`` underflows, the scan starts at the mode
    instead, seeded with the exact cdf there (an incomplete beta value).
    """
    p = np.asarray(p, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    p, u = np.broadcast_arrays(p, u)
    shape = u.shape
    p = p.ravel()
    u = u.ravel()
    n = int(trials)
    out = np.zeros(u.shape, dtype=np.int64)
    out[p >= 1.0] = n
    live = (p > 0.0) & (p < 1.0)
    with np.errstate(divide="ignore"):
        pmf = np.where(live, np.exp(n * np.log1p(-np.where(live, p, 0.0))), 0.0)
    under = live & (pmf < 1e-290)
    for i in np.flatnonzero(under):
        out[i] = _binomial_quantile_from_mode(n, float(p[i]), float(u[i]))
    live &= ~under
    ratio = np.where(live, p / np.where(live, 1.0 - p, 1.0), 0.0)
    cdf = pmf.copy()
    k = np.zeros(u.shape, dtype=np.int64)
    scanning = live & (cdf < u)
    for j in range(n):
        if not scanning.any():
            break
        pmf = np.where(scanning, pmf * ((n - j) / (j + 1.0)) * ratio, pmf)
        k = np.where(scanning, j + 1, k)
        cdf = np.where(scanning, cdf + pmf, cdf)
        scanning &= cdf < u
    out[live] = k[live]
    return out.reshape(shape)


def _binomial_quantile_from_mode(n, p, u):
    k = min(int(n * p), n)
    # cdf(k) = I_{1-p}(n - k, k + 1)
    cdf = 1.0 if k >= n else float(reg_inc_beta(n - k, k + 1.0, 1.0 - p))
    pmf = math.exp(math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)
                   + k * math.log(p) + (n - k) * math.log1p(-p))
    ratio = p / (1.0 - p)
    if cdf < u:
        while cdf < u and k < n:
            pmf *= (n - k) / (k + 1.0) * ratio
            k += 1
            cdf += pmf
        return k
    while k > 0 and cdf - pmf >= u:
        cdf -= pmf
        pmf *= k / (n - k + 1.0) / ratio
        k -= 1
    return k


def mcmc_sweep_naive(y, Z, beta_hat, penalty, steps, log_u):
    """One Metropolis pass over every coordinate, re-evaluating the full density.

    ``steps[i]`` is the proposed increment for coordinate ``i`` and ``log_u[i]``
    the log of its acceptance uniform. Updates ``y`` in place and returns the
    number of accepted moves.
    """
    fitted = Z @ beta_hat

    def logdens(v):
        r = v - fitted
        g = Z.T @ r
        return -0.5 * float(r @ r) - penalty * float(g @ g)

    current = logdens(y)
    accepted = 0
    for i in range(y.shape[0]):
        old = y[i]
        y[i] = old + steps[i]
        proposed = logdens(y)
        if log_u[i] < proposed - current:
            current = proposed
            accepted += 1
        else:
            y[i] = old
    return accepted


def mcmc_sweep_incremental(y, resid, grad, Z, penalty, steps, log_u):
    """Same chain as :func:`mcmc_sweep_naive` with O(d) bookkeeping per move."""
    accepted = 0
    for i in range(y.shape[0]):
        delta = steps[i]
        zi = Z[i]
        ri = resid[i]
        dg2 = 2.0 * delta * float(grad @ zi) + delta * delta * float(zi @ zi)
        change = -0.5 * ((ri + delta) ** 2 - ri * ri) - penalty * dg2
        if log_u[i] < change:
            y[i] += delta
            resid[i] = ri + delta
            grad += delta * zi
            accepted += 1
    return accepted
