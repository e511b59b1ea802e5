"""Synthetic GARCH return paths and intraday diffusion markets.

The intraday market is a log-price diffusion with piecewise-constant spot
variance per day, observed through i.i.d. Gaussian noise on the log price.
Day levels come either from an explicit per-day variance (possibly zero) or
from a GARCH(1,1) path.  In GARCH mode the in-session path is a Brownian
bridge pinned so that the day's true close-to-close return equals the GARCH
draw exactly; the bridge leaves the expected realized variance of the
session at the prescribed session variance, so realized-measure tests and
daily-return fits see the same market.

Non-trading time is modelled as a single overnight gap before each open,
Gaussian with a configurable fraction of the total daily variance; with
fraction f, session variance is (1-f) of the total and the HL factor tends
to 1/(1-f).

Per-day random streams are spawned from the caller's generator, so output
is reproducible for a given master seed regardless of evaluation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import date

import numpy as np

from . import rational
from .data import DailyPriceSeries, ReturnSeries, SessionCalendar, TickSeries
from .exceptions import DomainError
from .garch import RATIONAL, GarchParams, VolSeries, check_constraints
from .realized import NoiseModel


def _trading_dates(calendar, start, count):
    return tuple(calendar.trading_days(start, count))


def simulate_garch(params, length, rng, start_date=date(2006, 1, 2), calendar=None):
    """Generate a GARCH path: returns and the true variance series.

    sigma_1^2 starts at the unconditional variance omega/(1-alpha-beta)
    when the process is stationary, at omega otherwise.  Dates run over
    the calendar's trading days (weekdays by default).
    """
    report = check_constraints(params)
    if not report.valid:
        raise DomainError("; ".join(report.violations))
    if length < 1:
        raise DomainError("length must be at least 1")
    if calendar is None:
        calendar = SessionCalendar.tokyo()

    if params.law == RATIONAL:
        eps = rational.sample(length, params.a, rng)
    else:
        eps = rng.standard_normal(length)

    omega, alpha, beta = params.omega, params.alpha, params.beta
    sig2 = np.empty(length)
    y = np.empty(length)
    s = omega / (1.0 - alpha - beta) if report.stationary else omega
    for t in range(length):
        if t > 0:
            s = omega + alpha * y[t - 1] ** 2 + beta * s
        sig2[t] = s
        y[t] = math.sqrt(s) * eps[t]

    dates = _trading_dates(calendar, start_date, length)
    return ReturnSeries(dates, y), VolSeries(dates, sig2)


@dataclass
class DiffusionSpec:
    """Intraday market description.

    Exactly one of ``day_variances`` (scalar or per-day array of in-session
    integrated variances, zero allowed) and ``garch`` (parameters whose
    path sets each day's total variance) must be given.
    ``overnight_fraction`` is the share of total daily variance placed in
    the opening gap.
    """

    steps_per_day: int = 390
    day_variances: object = None
    garch: GarchParams | None = None
    noise: NoiseModel = field(default_factory=NoiseModel)
    overnight_fraction: float = 0.0
    start_price: float = 2500.0
    start_date: date = date(2006, 1, 2)

    def __post_init__(self):
        if self.steps_per_day < 1:
            raise DomainError("steps_per_day must be at least 1")
        if (self.day_variances is None) == (self.garch is None):
            raise DomainError("give exactly one of day_variances and garch")
        if not 0.0 <= self.overnight_fraction < 1.0:
            raise DomainError("overnight_fraction must lie in [0, 1)")
        if self.start_price <= 0.0:
            raise DomainError("start_price must be positive")
        if self.day_variances is not None:
            v = np.asarray(self.day_variances, dtype=np.float64)
            if not np.isfinite(v).all() or (v < 0).any():
                raise DomainError("day variances must be finite and >= 0")


@dataclass
class IntradaySim:
    """Simulation output: observed market plus the exact truth behind it."""

    ticks: TickSeries
    daily_prices: DailyPriceSeries  # observed closes (noise included)
    dates: tuple
    session_variances: np.ndarray  # exact integrated in-session variance
    total_variances: np.ndarray  # session plus overnight-gap variance
    true_daily_returns: np.ndarray  # close-to-close on the noise-free path

    def __iter__(self):
        # unpacks as (ticks, daily_prices, session_variances)
        return iter((self.ticks, self.daily_prices, self.session_variances))


def _session_layout(calendar, day, steps_per_day):
    """(open_us, dt_us, m_steps) per session, steps roughly length-shared."""
    sessions = calendar.sessions_for(day)
    lengths = np.array(
        [(c - o).total_seconds() for o, c in sessions], dtype=np.float64
    )
    total = lengths.sum()
    layout = []
    for (o, _c), h in zip(sessions, lengths):
        m = max(1, int(round(steps_per_day * h / total)))
        open_us = np.datetime64(o, "us").astype(np.int64)
        layout.append((open_us, h / m, m))
    return layout, total


def _days_total_variance(spec, days, rng):
    """Per-day total close-to-close variance plus pinned daily returns."""
    f = spec.overnight_fraction
    if spec.garch is not None:
        ret, vol = simulate_garch(
            spec.garch, days, rng, start_date=spec.start_date
        )
        return vol.values.copy(), ret.values.copy()
    v = np.asarray(spec.day_variances, dtype=np.float64)
    if v.ndim == 0:
        v = np.full(days, float(v))
    if v.shape != (days,):
        raise DomainError(f"day_variances must be scalar or length {days}")
    # v is the in-session variance; the gap adds f/(1-f) of it
    return v / (1.0 - f), None


def simulate_intraday(spec, days, rng, calendar=None):
    """Simulate ``days`` trading days of ticks, closes, and exact truth.

    The true log price moves only inside sessions (plus the overnight gap);
    observed tick prices carry i.i.d. noise of variance ``spec.noise.rho2``.
    The reported per-day session variance is the exact integral of the
    piecewise-constant spot variance.
    """
    if days < 1:
        raise DomainError("days must be at least 1")
    if calendar is None:
        calendar = SessionCalendar.tokyo()
    dates = _trading_dates(calendar, spec.start_date, days)
    for day in dates:
        if not calendar.sessions_for(day):
            raise DomainError(f"{day.isoformat()} has no sessions")

    day_rng, noise_rng, gap_rng = rng.spawn(3)
    path_rngs = day_rng.spawn(days)
    noise_rngs = noise_rng.spawn(days)

    f = spec.overnight_fraction
    total_var, pinned_returns = _days_total_variance(spec, days, gap_rng)
    session_var = total_var * (1.0 - f)
    gap_var = total_var * f

    times = []
    prices = []
    close_dates = []
    close_prices = []
    true_returns = np.empty(days)

    ln_p = math.log(spec.start_price)
    for d, day in enumerate(dates):
        prev_close = ln_p
        gap = 0.0
        if d > 0 and gap_var[d] > 0.0:
            gap = math.sqrt(gap_var[d]) * path_rngs[d].standard_normal()
        ln_p = prev_close + gap

        layout, total_len = _session_layout(calendar, day, spec.steps_per_day)
        n_steps = sum(m for _, _, m in layout)
        rate = session_var[d] / total_len  # spot variance per second

        if pinned_returns is None:
            increments = _free_increments(layout, rate, path_rngs[d])
        else:
            target = pinned_returns[d] - gap
            increments = _bridge_increments(
                layout, rate, target, total_len, path_rngs[d]
            )

        day_times = np.empty(n_steps + len(layout), dtype=np.int64)
        day_true = np.empty(n_steps + len(layout))
        pos = 0
        inc_pos = 0
        for open_us, dt, m in layout:
            day_times[pos] = open_us
            day_true[pos] = ln_p
            pos += 1
            for k in range(1, m + 1):
                ln_p += increments[inc_pos]
                inc_pos += 1
                day_times[pos] = open_us + int(round(k * dt * 1e6))
                day_true[pos] = ln_p
                pos += 1

        xi = noise_rngs[d].standard_normal(pos) * math.sqrt(spec.noise.rho2)
        observed = np.exp(day_true + xi)
        times.append(day_times.view("datetime64[us]"))
        prices.append(observed)
        close_dates.append(day)
        close_prices.append(observed[-1])
        true_returns[d] = ln_p - prev_close

    ticks = TickSeries(np.concatenate(times), np.concatenate(prices))
    daily = DailyPriceSeries(tuple(close_dates), np.array(close_prices))
    return IntradaySim(
        ticks=ticks,
        daily_prices=daily,
        dates=dates,
        session_variances=session_var.copy(),
        total_variances=total_var,
        true_daily_returns=true_returns,
    )


def _free_increments(layout, rate, rng):
    """Independent Gaussian steps with variance rate * dt."""
    parts = []
    for _open_us, dt, m in layout:
        sd = math.sqrt(rate * dt)
        parts.append(rng.standard_normal(m) * sd)
    return np.concatenate(parts)


def _bridge_increments(layout, rate, target, total_len, rng):
    """Brownian bridge steps hitting ``target`` over the session time.

    Sequential conditioning: with remaining target R and remaining time
    tau, a step of length dt is N(R dt / tau, rate * dt * (tau - dt) / tau).
    The final step is set to the exact remainder.
    """
    steps = np.concatenate(
        [np.full(m, dt) for _open_us, dt, m in layout]
    )
    n = steps.shape[0]
    z = rng.standard_normal(n)
    increments = np.empty(n)
    remaining_target = target
    remaining_time = total_len
    for i in range(n):
        dt = steps[i]
        if i == n - 1:
            increments[i] = remaining_target
            break
        mean = remaining_target * dt / remaining_time
        var = rate * dt * (remaining_time - dt) / remaining_time
        increments[i] = mean + math.sqrt(max(var, 0.0)) * z[i]
        remaining_target -= increments[i]
        remaining_time -= dt
    return increments
