"""Adaptive independence Metropolis-Hastings for GARCH posteriors.

Proposals are multivariate Student's t, independent of the current state.
During burn-in the proposal's location and scale are refitted every
``adapt_interval`` draws to the sample mean and covariance of the chain so
far; after burn-in the proposal is frozen, which keeps the retained chain a
valid MH sample.  Sampling runs in log coordinates so the positivity
constraints become unbounded, with the Jacobian folded into the target.

The flat prior on the positive orthant is improper; the likelihood decays
fast enough in every direction for the posterior to be proper in practice,
and a collapsed acceptance rate is reported as an error rather than papered
over.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.optimize import minimize
from scipy.special import gammaln

from .exceptions import (
    AdaptationFailureError,
    DomainError,
    InsufficientDataError,
    InsufficientHistoryError,
    NumericalError,
    ValidationError,
)
from .garch import NORMAL, RATIONAL, GarchParams, log_likelihood
from .rational import UNIMODAL_MIN_A

logger = logging.getLogger(__name__)

MODEL_NORMAL = "garch-n"
MODEL_RATIONAL = "garch-re"

_LAW_FOR_MODEL = {MODEL_NORMAL: NORMAL, MODEL_RATIONAL: RATIONAL}

# window rule for the integrated autocorrelation time: smallest W with
# W >= _TAU_WINDOW_FACTOR * tau(W)
_TAU_WINDOW_FACTOR = 5.0
_TAU_MAX_LAG = 10_000


@dataclass
class Prior:
    """Flat prior on a per-parameter box inside the positive orthant.

    Unspecified bounds default to (0, inf).  The density is an unnormalized
    indicator: 0 inside the box (log scale), -inf outside.
    """

    lower: dict[str, float] = field(default_factory=dict)
    upper: dict[str, float] = field(default_factory=dict)

    def log_density(self, params):
        for name, value in zip(params.names, params.to_vector()):
            lo = self.lower.get(name, 0.0)
            hi = self.upper.get(name, math.inf)
            if not math.isfinite(value) or not lo < value < hi:
                return -math.inf
        return 0.0


def log_posterior(params, returns, prior=None, init_variance=None):
    """Unnormalized log posterior; -inf encodes any rejection."""
    if prior is None:
        prior = Prior()
    lp = prior.log_density(params)
    if lp == -math.inf:
        return -math.inf
    try:
        return lp + log_likelihood(params, returns, init_variance)
    except (DomainError, NumericalError):
        return -math.inf


class StudentTProposal:
    """Multivariate Student's t distribution used as the independence proposal.

    ``scale`` is the scale matrix Sigma; the covariance is Sigma * dof/(dof-2).
    """

    def __init__(self, location, scale, dof):
        if dof <= 2.0 or not math.isfinite(dof):
            raise DomainError("proposal dof must be finite and exceed 2")
        self.location = np.asarray(location, dtype=np.float64)
        self.scale = np.asarray(scale, dtype=np.float64)
        self.dof = float(dof)
        d = self.location.shape[0]
        if self.scale.shape != (d, d):
            raise DomainError("scale matrix shape does not match the location")
        # raises LinAlgError when the scale is not positive definite
        self._chol = np.linalg.cholesky(self.scale)
        self._log_norm = (
            gammaln((self.dof + d) / 2.0)
            - gammaln(self.dof / 2.0)
            - 0.5 * d * math.log(self.dof * math.pi)
            - np.log(np.diag(self._chol)).sum()
        )

    @property
    def dim(self):
        return self.location.shape[0]

    def covariance(self):
        return self.scale * self.dof / (self.dof - 2.0)

    def log_density(self, x):
        z = np.linalg.solve(self._chol, np.asarray(x, dtype=np.float64) - self.location)
        m = float(z @ z)
        return float(
            self._log_norm
            - 0.5 * (self.dof + self.dim) * math.log1p(m / self.dof)
        )

    def sample(self, rng):
        z = rng.standard_normal(self.dim)
        w = rng.chisquare(self.dof)
        return self.location + (self._chol @ z) * math.sqrt(self.dof / w)


def adapt_proposal(history, dof):
    """Student's t proposal moment-matched to the chain history.

    The scale is the sample covariance shrunk by (dof-2)/dof so the proposal
    covariance equals the history covariance.  Degenerate covariances get an
    escalating diagonal jitter before giving up.
    """
    h = np.asarray(history, dtype=np.float64)
    if h.ndim != 2:
        raise InsufficientHistoryError("history must be a 2-d sample block")
    n, d = h.shape
    if n < d + 2:
        raise InsufficientHistoryError(
            f"need at least {d + 2} draws to fit a {d}-dimensional proposal"
        )
    location = h.mean(axis=0)
    cov = np.atleast_2d(np.cov(h, rowvar=False, ddof=1))
    scale = cov * (dof - 2.0) / dof
    jitter = 0.0
    for _ in range(6):
        try:
            return StudentTProposal(scale=scale + jitter * np.eye(d), location=location, dof=dof)
        except np.linalg.LinAlgError:
            jitter = 1e-10 if jitter == 0.0 else jitter * 100.0
    raise NumericalError("proposal covariance is not repairable")


@dataclass
class MhState:
    position: np.ndarray
    log_target: float


def mh_step(state, proposal, log_target, rng):
    """One independence MH transition; returns (new_state, accepted)."""
    candidate = proposal.sample(rng)
    u = rng.random()
    lt_candidate = log_target(candidate)
    if lt_candidate == -math.inf:
        return state, False
    log_ratio = (
        lt_candidate
        - state.log_target
        + proposal.log_density(state.position)
        - proposal.log_density(candidate)
    )
    if math.isnan(log_ratio):
        accepted = state.log_target == -math.inf
    else:
        accepted = log_ratio >= 0.0 or u < math.exp(log_ratio)
    if accepted:
        return MhState(candidate, lt_candidate), True
    return state, False


def acf(series, max_lag):
    """Autocorrelation function out to ``max_lag`` with 1/N normalization."""
    x = np.asarray(series, dtype=np.float64)
    n = x.shape[0]
    if not 0 <= max_lag < n:
        raise InsufficientDataError("series must be longer than max_lag")
    x = x - x.mean()
    m = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(x, m)
    autocov = np.fft.irfft(f * np.conj(f), m)[: max_lag + 1] / n
    if autocov[0] == 0.0:
        raise NumericalError("series is constant; autocorrelation undefined")
    return autocov / autocov[0]


@dataclass
class AcfDiagnostics:
    acf: np.ndarray
    tau_int: float
    window: int


def integrated_autocorr_time(series):
    """Integrated autocorrelation time tau = 1 + 2 sum ACF with a self-
    consistent window: the sum stops at the smallest W >= 5 tau(W)."""
    x = np.asarray(series, dtype=np.float64)
    max_lag = min(x.shape[0] - 1, _TAU_MAX_LAG)
    if max_lag < 1:
        raise InsufficientDataError("need at least two points")
    r = acf(x, max_lag)
    tau = 1.0 + 2.0 * np.cumsum(r[1:])
    windows = np.arange(1, max_lag + 1, dtype=np.float64)
    hits = np.nonzero(windows >= _TAU_WINDOW_FACTOR * tau)[0]
    if hits.size == 0:
        logger.warning(
            "window rule unsatisfied out to lag %d; tau estimate is a floor",
            max_lag,
        )
        w = max_lag
    else:
        w = int(hits[0]) + 1
    return AcfDiagnostics(acf=r[: w + 1], tau_int=float(tau[w - 1]), window=w)


def format_uncertainty(mean, sd):
    """Render mean and one-sigma spread as e.g. 0.132(38) or 2.8(1.2)e-05.

    The spread keeps two significant digits and the mean is rounded to the
    same decimal place.
    """
    if not math.isfinite(mean) or not math.isfinite(sd) or sd <= 0.0:
        return repr(mean)
    exp10 = math.floor(math.log10(abs(mean))) if mean != 0.0 else math.floor(
        math.log10(sd)
    )
    if -3 <= exp10 <= 4:
        return _plain_uncertainty(mean, sd)
    mantissa = mean / 10.0**exp10
    body = _plain_uncertainty(mantissa, sd / 10.0**exp10)
    return f"{body}e{exp10:+03d}"


def _plain_uncertainty(mean, sd):
    sd_exp = math.floor(math.log10(sd))
    decimals = max(-sd_exp + 1, 0)
    sd_rounded = round(sd, -sd_exp + 1)
    # rounding can push the spread to the next decade (0.099 -> 0.10)
    if sd_rounded >= 10.0 ** (sd_exp + 1):
        sd_exp += 1
        decimals = max(-sd_exp + 1, 0)
        sd_rounded = round(sd, -sd_exp + 1)
    if sd_exp >= 0:
        # spread crosses the decimal point: keep it explicit, 1.57 +- 1.2
        # renders as 1.6(1.2) rather than the ambiguous 1.6(12)
        paren = f"{sd_rounded:.{max(1 - sd_exp, 0)}f}"
    else:
        paren = f"{int(round(sd_rounded * 10.0**decimals)):d}"
    return f"{mean:.{decimals}f}({paren})"


@dataclass
class ChainConfig:
    """Run lengths, proposal dof, adaptation cadence, prior, and seed."""

    burn_in: int = 6000
    samples: int = 50_000
    adapt_interval: int = 500
    nu: float = 10.0
    seed: int = 0
    prior: Prior = field(default_factory=Prior)
    init_variance: float | None = None

    def __post_init__(self):
        if self.samples <= 0:
            raise ValidationError("samples must be positive")
        if self.adapt_interval <= 0:
            raise ValidationError("adapt_interval must be positive")
        if self.burn_in < self.adapt_interval:
            raise ValidationError("burn_in must cover at least one adaptation")
        if self.nu <= 2.0:
            raise ValidationError("proposal dof must exceed 2")

    def public_dict(self):
        d = {
            "burn_in": self.burn_in,
            "samples": self.samples,
            "adapt_interval": self.adapt_interval,
            "nu": self.nu,
            "seed": self.seed,
        }
        if self.init_variance is not None:
            d["init_variance"] = self.init_variance
        if self.prior.lower or self.prior.upper:
            d["prior"] = {"lower": self.prior.lower, "upper": self.prior.upper}
        return d


@dataclass
class ParamSummary:
    name: str
    mean: float
    sd: float
    tau_int: float

    def formatted(self):
        return format_uncertainty(self.mean, self.sd)


@dataclass
class PosteriorChain:
    """Retained MH samples for one model on one return series."""

    model: str
    param_names: tuple
    samples: np.ndarray  # natural parameter space, (n, d)
    samples_log: np.ndarray  # log coordinates, same shape
    log_posteriors: np.ndarray
    log_likelihoods: np.ndarray
    acceptance_rate: float
    summaries: list
    lnl_at_mean: float
    config: ChainConfig
    n_obs: int
    data_digest: str

    def mean(self):
        return self.samples.mean(axis=0)

    def params_at_mean(self):
        law = _LAW_FOR_MODEL[self.model]
        return GarchParams.from_vector(self.mean(), law=law)

    def mean_log_likelihood(self):
        return float(self.log_likelihoods.mean())

    def summary_dict(self):
        return {
            "model": self.model,
            "config": self.config.public_dict(),
            "n_obs": self.n_obs,
            "data_digest": self.data_digest,
            "acceptance_rate": self.acceptance_rate,
            "log_likelihood_at_mean": self.lnl_at_mean,
            "mean_log_likelihood": self.mean_log_likelihood(),
            "parameters": {
                s.name: {
                    "mean": s.mean,
                    "sd": s.sd,
                    "tau_int": s.tau_int,
                    "formatted": s.formatted(),
                }
                for s in self.summaries
            },
        }

    def export_summary_json(self, target):
        _write_text(target, json.dumps(self.summary_dict(), indent=2, sort_keys=True) + "\n")

    def export_samples_csv(self, target, comments=()):
        buf = io.StringIO()
        for line in comments:
            buf.write(f"# {line}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.param_names)
        for row in self.samples:
            writer.writerow([repr(float(v)) for v in row])
        _write_text(target, buf.getvalue())


def _write_text(target, text):
    if isinstance(target, (str, Path)):
        Path(target).write_text(text, encoding="utf-8")
    else:
        target.write(text)


def data_digest(returns):
    """Stable fingerprint of a return series for comparability checks."""
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(returns.values).tobytes())
    h.update(",".join(d.isoformat() for d in returns.dates).encode())
    return h.hexdigest()[:16]


def _start_point(returns, law):
    """Moment-informed start: modest ARCH, strong persistence."""
    var = returns.sample_variance()
    theta = [0.1 * var, 0.1, 0.8]
    if law == RATIONAL:
        theta.append(2.0)
    return np.log(np.array(theta))


def _laplace_scale(target, x, nu):
    """Proposal scale from the curvature of the log target at its mode.

    An independence proposal narrower than the posterior has unbounded
    importance ratios, so the chain can freeze on a lucky tail point; the
    inverse Hessian puts the very first proposal on the right scale and
    the moment-matched re-adaptations only have to refine it.  Falls back
    to a conservative diagonal when the curvature is unusable.
    """
    d = x.shape[0]
    fallback = np.eye(d) * 0.01
    h = 1e-3
    f0 = target(x)
    hess = np.empty((d, d))
    steps = h * np.eye(d)
    for i in range(d):
        for j in range(i, d):
            if i == j:
                val = (target(x + steps[i]) - 2.0 * f0 + target(x - steps[i])) / h**2
            else:
                val = (
                    target(x + steps[i] + steps[j])
                    - target(x + steps[i] - steps[j])
                    - target(x - steps[i] + steps[j])
                    + target(x - steps[i] - steps[j])
                ) / (4.0 * h**2)
            if not math.isfinite(val):
                return fallback * (nu - 2.0) / nu
            hess[i, j] = hess[j, i] = val
    lam, vec = np.linalg.eigh(-hess)
    if not np.isfinite(lam).all() or lam.max() <= 0.0:
        return fallback * (nu - 2.0) / nu
    # covariance eigenvalues floored/capped to a sane log-coordinate range
    var = np.clip(1.0 / np.maximum(lam, 1e-12), 1e-4, 1.0)
    cov = (vec * var) @ vec.T
    return cov * (nu - 2.0) / nu


class _CachedTarget:
    """Log target in log coordinates, remembering likelihoods by position.

    The independence sampler revisits only the current and candidate
    points, so a tiny FIFO cache removes every redundant likelihood pass.
    """

    def __init__(self, returns, law, prior, init_variance):
        self.returns = returns
        self.law = law
        self.prior = prior
        self.init_variance = init_variance
        self._cache = {}

    def params(self, x):
        return GarchParams.from_vector(np.exp(x), law=self.law)

    def __call__(self, x):
        key = x.tobytes()
        hit = self._cache.get(key)
        if hit is None:
            try:
                params = self.params(x)
            except (DomainError, OverflowError):
                hit = (-math.inf, -math.inf)
            else:
                lp = self.prior.log_density(params)
                if lp == -math.inf:
                    hit = (-math.inf, -math.inf)
                else:
                    try:
                        # the sampler legitimately visits the non-stationary
                        # region; do not warn on every excursion
                        with warnings.catch_warnings():
                            warnings.simplefilter("ignore", RuntimeWarning)
                            ll = log_likelihood(
                                params, self.returns, self.init_variance
                            )
                    except (DomainError, NumericalError):
                        hit = (-math.inf, -math.inf)
                    else:
                        # Jacobian of theta = exp(x) is sum(x)
                        hit = (lp + ll + float(x.sum()), ll)
            if len(self._cache) > 8:
                self._cache.pop(next(iter(self._cache)))
            self._cache[key] = hit
        return hit[0]

    def log_likelihood_at(self, x):
        self(x)
        return self._cache[x.tobytes()][1]


def run_chain(model, returns, config=None):
    """Estimate ``model`` ("garch-n" or "garch-re") on a return series.

    Burn-in adapts the proposal every ``config.adapt_interval`` draws from
    the accumulated history; the retained phase uses the frozen proposal.
    Raises :class:`AdaptationFailureError` when the final acceptance rate
    is degenerate (< 1%).
    """
    if model not in _LAW_FOR_MODEL:
        raise DomainError(f"unknown model {model!r}; expected garch-n or garch-re")
    law = _LAW_FOR_MODEL[model]
    if config is None:
        config = ChainConfig()
    if len(returns) < 30:
        raise InsufficientDataError(
            f"{len(returns)} returns are too few to estimate a volatility model"
        )
    rng = np.random.default_rng(config.seed)
    target = _CachedTarget(
        returns, law, config.prior, config.init_variance
    )
    d = 4 if law == RATIONAL else 3

    x0 = _start_point(returns, law)
    if target(x0) == -math.inf:
        raise DomainError("prior excludes the moment-informed starting point")
    res = minimize(
        lambda x: -target(x),
        x0,
        method="Nelder-Mead",
        options={"maxiter": 500 * d, "xatol": 1e-6, "fatol": 1e-8},
    )
    x_start = res.x if math.isfinite(res.fun) and -res.fun >= target(x0) else x0

    x_start = np.asarray(x_start, dtype=np.float64)
    proposal = StudentTProposal(
        x_start, _laplace_scale(target, x_start, config.nu), config.nu
    )
    state = MhState(np.asarray(x_start, dtype=np.float64), target(np.asarray(x_start)))

    history = np.empty((config.burn_in, d))
    interval_accepts = 0
    for i in range(config.burn_in):
        state, accepted = mh_step(state, proposal, target, rng)
        interval_accepts += accepted
        history[i] = state.position
        if (i + 1) % config.adapt_interval == 0:
            if interval_accepts == 0:
                # nothing new to learn from; widen the net instead
                proposal = StudentTProposal(
                    proposal.location, proposal.scale * 4.0, config.nu
                )
            else:
                proposal = adapt_proposal(history[: i + 1], config.nu)
            interval_accepts = 0

    n = config.samples
    samples_log = np.empty((n, d))
    log_posts = np.empty(n)
    log_liks = np.empty(n)
    accepts = 0
    for i in range(n):
        state, accepted = mh_step(state, proposal, target, rng)
        accepts += accepted
        samples_log[i] = state.position
        log_posts[i] = state.log_target
        log_liks[i] = target.log_likelihood_at(state.position)

    acceptance_rate = accepts / n
    if acceptance_rate < 0.01:
        raise AdaptationFailureError(
            f"acceptance rate {acceptance_rate:.2%} after adaptation; "
            "the proposal never matched the posterior (data too short, "
            "or burn-in too small)"
        )

    samples = np.exp(samples_log)
    names = ("omega", "alpha", "beta", "a") if law == RATIONAL else (
        "omega",
        "alpha",
        "beta",
    )
    summaries = []
    for j, name in enumerate(names):
        col = samples[:, j]
        diag = integrated_autocorr_time(col)
        summaries.append(
            ParamSummary(
                name=name,
                mean=float(col.mean()),
                sd=float(col.std(ddof=1)),
                tau_int=diag.tau_int,
            )
        )

    theta_bar = samples.mean(axis=0)
    params_bar = GarchParams.from_vector(theta_bar, law=law)
    lnl_at_mean = log_likelihood(params_bar, returns, config.init_variance)

    if law == RATIONAL:
        a_mean = theta_bar[3]
        if a_mean < UNIMODAL_MIN_A:
            logger.warning(
                "posterior mean a=%.3f is below sqrt(2); the fitted error "
                "density is bimodal",
                a_mean,
            )

    logger.info(
        "%s chain: acceptance %.1f%%, lnL(theta_bar)=%.2f",
        model,
        100.0 * acceptance_rate,
        lnl_at_mean,
    )
    return PosteriorChain(
        model=model,
        param_names=names,
        samples=samples,
        samples_log=samples_log,
        log_posteriors=log_posts,
        log_likelihoods=log_liks,
        acceptance_rate=acceptance_rate,
        summaries=summaries,
        lnl_at_mean=float(lnl_at_mean),
        config=config,
        n_obs=len(returns),
        data_digest=data_digest(returns),
    )


def run_chains(model, returns, config=None, n_chains=2):
    """Independent replicas with seeds spawned from ``config.seed``."""
    if n_chains < 1:
        raise DomainError("n_chains must be at least 1")
    if config is None:
        config = ChainConfig()
    children = np.random.SeedSequence(config.seed).generate_state(n_chains)
    return [
        run_chain(model, returns, replace(config, seed=int(s))) for s in children
    ]
