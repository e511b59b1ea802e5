"""Pure NumPy fallback for the compiled recursion kernels.

Same call signatures and return conventions as ``regarch.recursions``; used
when that extension is not built.  The variance recursion is an exponential
smoother, so it maps onto a first-order linear filter.
"""

import numpy as np
from scipy.signal import lfilter

_LN_2PI = 1.8378770664093453
_LN_PI = 1.1447298858494002


def _variance_path(omega, alpha, beta, returns, init_variance):
    n = returns.shape[0]
    sig2 = np.empty(n)
    if n == 0:
        return sig2
    sig2[0] = init_variance
    if n > 1:
        with np.errstate(over="ignore", invalid="ignore"):
            x = omega + alpha * returns[:-1] ** 2
            # sig2[t] = x[t-1] + beta * sig2[t-1] as an IIR filter
            sig2[1:], _ = lfilter(
                [1.0], [1.0, -beta], x, zi=np.array([beta * init_variance])
            )
    return sig2


def _first_bad(values):
    bad = ~(np.isfinite(values) & (values > 0.0))
    if bad.any():
        return int(np.argmax(bad))
    return -1


def garch_recursion(omega, alpha, beta, returns, init_variance, out):
    """Fill ``out`` with conditional variances; return the first bad index or -1."""
    sig2 = _variance_path(omega, alpha, beta, returns, init_variance)
    bad = _first_bad(sig2)
    if bad >= 0:
        out[:bad] = sig2[:bad]
        return bad
    out[:] = sig2
    return -1


def _finish(sig2, make_terms):
    """Report the first bad event in time order: term or variance."""
    bad_var = _first_bad(sig2)
    n = sig2.shape[0] if bad_var < 0 else bad_var
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        terms = make_terms(sig2[:n])
    finite = np.isfinite(terms)
    if not finite.all():
        return 0.0, int(np.argmax(~finite))
    if bad_var >= 0:
        return 0.0, bad_var
    return float(terms.sum()), -1


def normal_loglik(omega, alpha, beta, returns, init_variance):
    """Gaussian log-likelihood; returns (loglik, bad_index)."""
    sig2 = _variance_path(omega, alpha, beta, returns, init_variance)

    def make_terms(s):
        return -0.5 * (_LN_2PI + np.log(s) + returns[: s.shape[0]] ** 2 / s)

    return _finish(sig2, make_terms)


def rational_loglik(omega, alpha, beta, a, returns, init_variance):
    """Rational-error log-likelihood; returns (loglik, bad_index)."""
    sig2 = _variance_path(omega, alpha, beta, returns, init_variance)

    def make_terms(s):
        x2 = returns[: s.shape[0]] ** 2 / s
        den = (x2 - 1.0) ** 2 + (a * a) * x2
        return (np.log(a) - _LN_PI) - np.log(den) - 0.5 * np.log(s)

    return _finish(sig2, make_terms)
