# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops: GARCH(1,1) variance recursion and log-likelihoods.

Each function returns the index of the first invalid intermediate (negative,
zero, or non-finite variance or likelihood term) alongside its result, or -1
when the whole pass is clean.  ``recursions_python`` mirrors these signatures.
"""

from libc.math cimport isfinite, log

cdef double LN_2PI = 1.8378770664093453
cdef double LN_PI = 1.1447298858494002


def garch_recursion(double omega, double alpha, double beta,
                    double[::1] returns, double init_variance,
                    double[::1] out):
    """Fill ``out`` with conditional variances; return the first bad index or -1."""
    cdef Py_ssize_t n = returns.shape[0]
    cdef Py_ssize_t t
    cdef double s = init_variance
    cdef double y
    if n == 0:
        return -1
    out[0] = s
    for t in range(1, n):
        y = returns[t - 1]
        s = omega + alpha * (y * y) + beta * s
        if not isfinite(s) or s <= 0.0:
            return t
        out[t] = s
    return -1


def normal_loglik(double omega, double alpha, double beta,
                  double[::1] returns, double init_variance):
    """Gaussian log-likelihood fused with the variance recursion.

    Returns (loglik, bad_index); bad_index is -1 on success.
    """
    cdef Py_ssize_t n = returns.shape[0]
    cdef Py_ssize_t t
    cdef double s = init_variance
    cdef double acc = 0.0
    cdef double y, term
    for t in range(n):
        if t > 0:
            y = returns[t - 1]
            s = omega + alpha * (y * y) + beta * s
        if not isfinite(s) or s <= 0.0:
            return 0.0, t
        y = returns[t]
        term = -0.5 * (LN_2PI + log(s) + y * y / s)
        if not isfinite(term):
            return 0.0, t
        acc += term
    return acc, -1


def rational_loglik(double omega, double alpha, double beta, double a,
                    double[::1] returns, double init_variance):
    """Rational-error log-likelihood fused with the variance recursion.

    Per-observation term is log f(y_t / sigma_t) - 0.5 log sigma_t^2 with
    f the unit-variance rational density of shape ``a``.
    Returns (loglik, bad_index); bad_index is -1 on success.
    """
    cdef Py_ssize_t n = returns.shape[0]
    cdef Py_ssize_t t
    cdef double s = init_variance
    cdef double const = log(a) - LN_PI
    cdef double a2 = a * a
    cdef double acc = 0.0
    cdef double y, x2, den, term
    for t in range(n):
        if t > 0:
            y = returns[t - 1]
            s = omega + alpha * (y * y) + beta * s
        if not isfinite(s) or s <= 0.0:
            return 0.0, t
        y = returns[t]
        x2 = y * y / s
        den = (x2 - 1.0) * (x2 - 1.0) + a2 * x2
        term = const - log(den) - 0.5 * log(s)
        if not isfinite(term):
            return 0.0, t
        acc += term
    return acc, -1
