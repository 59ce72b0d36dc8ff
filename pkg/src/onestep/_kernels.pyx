# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels. Same signatures and results as ``_kernels_py``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, fabs, lgamma, log, log1p, pow, sqrt

cnp.import_array()

BACKEND = "cython"

cdef double[8] _A = [3.3871328727963666080e0, 1.3314166789178437745e2, 1.9715909503065514427e3,
                     1.3731693765509461125e4, 4.5921953931549871457e4, 6.7265770927008700853e4,
                     3.3430575583588128105e4, 2.5090809287301226727e3]
cdef double[8] _B = [1.0, 4.2313330701600911252e1, 6.8718700749205790830e2, 5.3941960214247511077e3,
                     2.1213794301586595867e4, 3.9307895800092710610e4, 2.8729085735721942674e4,
                     5.2264952788528545610e3]
cdef double[8] _C = [1.42343711074968357734e0, 4.63033784615654529590e0, 5.76949722146069140550e0,
                     3.64784832476320460504e0, 1.27045825245236838258e0, 2.41780725177450611770e-1,
                     2.27238449892691845833e-2, 7.74545014278341407640e-4]
cdef double[8] _D = [1.0, 2.05319162663775882187e0, 1.67638483018380384940e0, 6.89767334985100004550e-1,
                     1.48103976427480074590e-1, 1.51986665636164571966e-2, 5.47593808499534494600e-4,
                     1.05075007164441684324e-9]
cdef double[8] _E = [6.65790464350110377720e0, 5.46378491116411436990e0, 1.78482653991729133580e0,
                     2.96560571828504891230e-1, 2.65321895265761230930e-2, 1.24266094738807843860e-3,
                     2.71155556874348757815e-5, 2.01033439929228813265e-7]
cdef double[8] _F = [1.0, 5.99832206555887937690e-1, 1.36929880922735805310e-1, 1.48753612908506148525e-2,
                     7.86869131145613259100e-4, 1.84631831751005468180e-5, 1.42151175831644588870e-7,
                     2.04426310338993978564e-15]

cdef double CF_EPS = 1e-16
cdef double CF_TINY = 1e-300
cdef int CF_MAXIT = 10000
cdef double NEWTON_TOL = 1e-12
cdef int NEWTON_MAXIT = 200


cdef inline double _poly(double* coef, double r) nogil:
    cdef double out = coef[7]
    cdef int j
    for j in range(6, -1, -1):
        out = out * r + coef[j]
    return out


cdef double _ndtri(double u) nogil:
    cdef double q = u - 0.5
    cdef double r, x
    if fabs(q) <= 0.425:
        r = 0.180625 - q * q
        return q * _poly(_A, r) / _poly(_B, r)
    r = u if q < 0 else 1.0 - u
    r = sqrt(-log(r))
    if r <= 5.0:
        r -= 1.6
        x = _poly(_C, r) / _poly(_D, r)
    else:
        r -= 5.0
        x = _poly(_E, r) / _poly(_F, r)
    return -x if q < 0 else x


cdef double _betacf(double a, double b, double x) nogil:
    cdef double qab = a + b, qap = a + 1.0, qam = a - 1.0
    cdef double c = 1.0, d, h, aa, delta, m2
    cdef int m
    d = 1.0 - qab * x / qap
    if fabs(d) < CF_TINY:
        d = CF_TINY
    d = 1.0 / d
    h = d
    for m in range(1, CF_MAXIT + 1):
        m2 = 2.0 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if fabs(d) < CF_TINY:
            d = CF_TINY
        c = 1.0 + aa / c
        if fabs(c) < CF_TINY:
            c = CF_TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if fabs(d) < CF_TINY:
            d = CF_TINY
        c = 1.0 + aa / c
        if fabs(c) < CF_TINY:
            c = CF_TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if fabs(delta - 1.0) < CF_EPS:
            break
    return h


cdef double _ibeta(double a, double b, double x, double lbeta) nogil:
    cdef double front
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    front = exp(a * log(x) + b * log1p(-x) - lbeta)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


cdef double _beta_initial(double a, double b, double u) nogil:
    cdef double pp, t, x, al, h, w, lna, lnb, v
    if a >= 1.0 and b >= 1.0:
        pp = u if u < 0.5 else 1.0 - u
        t = sqrt(-2.0 * log(pp))
        x = (2.30753 + t * 0.27061) / (1.0 + t * (0.99229 + t * 0.04481)) - t
        if u < 0.5:
            x = -x
        al = (x * x - 3.0) / 6.0
        h = 2.0 / (1.0 / (2.0 * a - 1.0) + 1.0 / (2.0 * b - 1.0))
        w = x * sqrt(al + h) / h - (1.0 / (2.0 * b - 1.0) - 1.0 / (2.0 * a - 1.0)) * (
            al + 5.0 / 6.0 - 2.0 / (3.0 * h))
        return a / (a + b * exp(2.0 * w))
    lna = log(a / (a + b))
    lnb = log(b / (a + b))
    t = exp(a * lna) / a
    v = exp(b * lnb) / b
    w = t + v
    if u < t / w:
        return pow(a * w * u, 1.0 / a)
    return 1.0 - pow(b * w * (1.0 - u), 1.0 / b)


cdef double _beta_ppf(double a, double b, double u, double lbeta) nogil:
    cdef double x = _beta_initial(a, b, u)
    cdef double lo = 0.0, hi = 1.0, f, xn, pdf
    cdef int it
    if not (x > 0.0 and x < 1.0):
        x = 0.5
    for it in range(NEWTON_MAXIT):
        f = _ibeta(a, b, x, lbeta) - u
        if f == 0.0:
            return x
        if f < 0.0:
            lo = x
        else:
            hi = x
        pdf = exp((a - 1.0) * log(x) + (b - 1.0) * log1p(-x) - lbeta)
        xn = x - f / pdf
        if not (xn > lo and xn < hi):
            xn = 0.5 * (lo + hi)
        if fabs(xn - x) <= NEWTON_TOL * (x if x > 1e-300 else 1e-300):
            return xn
        if hi - lo <= NEWTON_TOL * (lo if lo > 1e-300 else 1e-300):
            return xn
        x = xn
    return x


def normal_quantile(u):
    cdef cnp.ndarray[double, ndim=1] src = np.ascontiguousarray(u, dtype=np.float64).ravel()
    cdef cnp.ndarray[double, ndim=1] out = np.empty_like(src)
    cdef const double[::1] s = src
    cdef double[::1] o = out
    cdef Py_ssize_t i, n = s.shape[0]
    with nogil:
        for i in range(n):
            o[i] = _ndtri(s[i])
    return out.reshape(np.shape(u))


def reg_inc_beta(double a, double b, x):
    cdef cnp.ndarray[double, ndim=1] src = np.ascontiguousarray(x, dtype=np.float64).ravel()
    cdef cnp.ndarray[double, ndim=1] out = np.empty_like(src)
    cdef const double[::1] s = src
    cdef double[::1] o = out
    cdef double lbeta = lgamma(a) + lgamma(b) - lgamma(a + b)
    cdef Py_ssize_t i, n = s.shape[0]
    with nogil:
        for i in range(n):
            o[i] = _ibeta(a, b, s[i], lbeta)
    return out.reshape(np.shape(x))


def beta_quantile(double a, double b, u):
    cdef cnp.ndarray[double, ndim=1] src = np.ascontiguousarray(u, dtype=np.float64).ravel()
    cdef cnp.ndarray[double, ndim=1] out = np.empty_like(src)
    cdef const double[::1] s = src
    cdef double[::1] o = out
    cdef double lbeta = lgamma(a) + lgamma(b) - lgamma(a + b)
    cdef Py_ssize_t i, n = s.shape[0]
    with nogil:
        for i in range(n):
            o[i] = _beta_ppf(a, b, s[i], lbeta)
    return out.reshape(np.shape(u))


cdef long _binom_from_mode(long n, double p, double u) nogil:
    cdef long k = <long>(n * p)
    cdef double cdf, pmf, ratio = p / (1.0 - p)
    if k > n:
        k = n
    if k >= n:
        cdf = 1.0
    else:
        # cdf(k) = I_{1-p}(n - k, k + 1)
        cdf = _ibeta(n - k, k + 1.0, 1.0 - p,
                     lgamma(n - k) + lgamma(k + 1.0) - lgamma(n + 1.0))
    pmf = exp(lgamma(n + 1.0) - lgamma(k + 1.0) - lgamma(n - k + 1.0)
              + k * log(p) + (n - k) * log1p(-p))
    if cdf < u:
        while cdf < u and k < n:
            pmf = pmf * ((n - k) / (k + 1.0)) * ratio
            k += 1
            cdf += pmf
        return k
    while k > 0 and cdf - pmf >= u:
        cdf -= pmf
        pmf = pmf * (k / (n - k + 1.0)) / ratio
        k -= 1
    return k


def binomial_quantile(long trials, p, u):
    pb, ub = np.broadcast_arrays(np.asarray(p, dtype=np.float64), np.asarray(u, dtype=np.float64))
    shape = ub.shape
    cdef const double[::1] pv = np.ascontiguousarray(pb).ravel()
    cdef const double[::1] uv = np.ascontiguousarray(ub).ravel()
    cdef cnp.ndarray[cnp.int64_t, ndim=1] out = np.empty(uv.shape[0], dtype=np.int64)
    cdef cnp.int64_t[::1] o = out
    cdef Py_ssize_t i, m = uv.shape[0]
    cdef long k
    cdef double pi, pmf, cdf, ratio
    with nogil:
        for i in range(m):
            pi = pv[i]
            if pi <= 0.0:
                o[i] = 0
                continue
            if pi >= 1.0:
                o[i] = trials
                continue
            pmf = exp(trials * log1p(-pi))
            if pmf < 1e-290:
                o[i] = _binom_from_mode(trials, pi, uv[i])
                continue
            ratio = pi / (1.0 - pi)
            cdf = pmf
            k = 0
            while cdf < uv[i] and k < trials:
                pmf = pmf * ((trials - k) / (k + 1.0)) * ratio
                k += 1
                cdf += pmf
            o[i] = k
    return out.reshape(shape)


def mcmc_sweep_naive(double[::1] y, const double[:, ::1] Z, const double[::1] beta_hat, double penalty,
                     const double[::1] steps, const double[::1] log_u):
    cdef Py_ssize_t n = Z.shape[0], d = Z.shape[1], i, j, k
    cdef cnp.ndarray[double, ndim=1] fitted_arr = np.zeros(n)
    cdef cnp.ndarray[double, ndim=1] g_arr = np.zeros(d)
    cdef double[::1] fitted = fitted_arr
    cdef double[::1] g = g_arr
    cdef double current, proposed, old, r, rss, gg, acc_s
    cdef long accepted = 0
    with nogil:
        for j in range(n):
            acc_s = 0.0
            for k in range(d):
                acc_s += Z[j, k] * beta_hat[k]
            fitted[j] = acc_s
        current = _naive_logdens(y, Z, fitted, g, penalty)
        for i in range(n):
            old = y[i]
            y[i] = old + steps[i]
            proposed = _naive_logdens(y, Z, fitted, g, penalty)
            if log_u[i] < proposed - current:
                current = proposed
                accepted += 1
            else:
                y[i] = old
    return accepted


cdef double _naive_logdens(double[::1] y, const double[:, ::1] Z, double[::1] fitted, double[::1] g,
                           double penalty) nogil:
    cdef Py_ssize_t n = Z.shape[0], d = Z.shape[1], j, k
    cdef double r, rss = 0.0, gg = 0.0
    for k in range(d):
        g[k] = 0.0
    for j in range(n):
        r = y[j] - fitted[j]
        rss += r * r
        for k in range(d):
            g[k] += Z[j, k] * r
    for k in range(d):
        gg += g[k] * g[k]
    return -0.5 * rss - penalty * gg


def mcmc_sweep_incremental(double[::1] y, double[::1] resid, double[::1] grad, const double[:, ::1] Z,
                           double penalty, const double[::1] steps, const double[::1] log_u):
    cdef Py_ssize_t n = Z.shape[0], d = Z.shape[1], i, k
    cdef double delta, ri, gz, zz, change
    cdef long accepted = 0
    with nogil:
        for i in range(n):
            delta = steps[i]
            ri = resid[i]
            gz = 0.0
            zz = 0.0
            for k in range(d):
                gz += grad[k] * Z[i, k]
                zz += Z[i, k] * Z[i, k]
            change = -0.5 * ((ri + delta) * (ri + delta) - ri * ri) - penalty * (
                2.0 * delta * gz + delta * delta * zz)
            if log_u[i] < change:
                y[i] += delta
                resid[i] = ri + delta
                for k in range(d):
                    grad[k] += delta * Z[i, k]
                accepted += 1
    return accepted
