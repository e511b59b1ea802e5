"""Command-line interface: reproducible fit, selection, RV, and simulation runs.

Subcommands
-----------
fit        estimate one model on daily closes; chain CSV + summary JSON
compare    fit both error laws on the same data; AIC/DIC comparison
rv         realized variance per sampling period from ticks; signature curve
rmspe      fit both models and score them against c-adjusted RV per period
simulate   synthetic market: daily closes, ticks, and the exact truth

Every artifact embeds the resolved configuration and seed: CSV files as
leading ``#`` comment lines, JSON files under an ``invocation`` key.  All
outputs are deterministic bytes for fixed inputs, flags, and seed.

Exit codes: 0 success, 1 numerical or adaptation failure, 2 usage or input
error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from datetime import date
from pathlib import Path

import numpy as np

from . import __version__
from .data import (
    SessionCalendar,
    daily_closes_from_ticks,
    daily_log_returns,
    load_daily_prices,
    load_ticks,
    write_daily_csv,
    write_ticks_csv,
)
from .exceptions import (
    AdaptationFailureError,
    DomainError,
    InsufficientDataError,
    NumericalError,
    ParseError,
    ValidationError,
)
from .garch import NORMAL, RATIONAL, GarchParams, VolSeries, volatility_recursion
from .mcmc import MODEL_NORMAL, MODEL_RATIONAL, ChainConfig, run_chain
from .realized import (
    NoiseModel,
    SignatureCurve,
    hl_factor,
    rmspe,
    rv_from_ticks,
    scale_to_daily_variance,
    write_rv_csv,
    write_signature_csv,
)
from .selection import AIC_LEGACY, AIC_STANDARD, compare, score_chain
from .simulate import DiffusionSpec, simulate_intraday

logger = logging.getLogger(__name__)

_MODELS = (MODEL_NORMAL, MODEL_RATIONAL)
_DEFAULT_DELTAS = "30,60,300,900,1800,3600"


def _delta_list(text):
    try:
        deltas = [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad sampling period list {text!r}")
    if not deltas:
        raise argparse.ArgumentTypeError("empty sampling period list")
    if any(d <= 0 for d in deltas):
        raise argparse.ArgumentTypeError("sampling periods must be positive")
    return deltas


def _iso_date(text):
    try:
        return date.fromisoformat(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad date {text!r} (want YYYY-MM-DD)")


def _add_chain_flags(sub):
    sub.add_argument("--burn-in", type=int, default=6000, help="burn-in sweeps")
    sub.add_argument("--samples", type=int, default=50000, help="posterior samples")
    sub.add_argument(
        "--adapt-interval",
        type=int,
        default=500,
        help="sweeps between proposal refits during burn-in",
    )
    sub.add_argument(
        "--nu", type=float, default=10.0, help="Student-t proposal degrees of freedom"
    )


def _add_common(sub):
    sub.add_argument("--seed", type=int, default=0, help="master RNG seed")
    sub.add_argument("--out-dir", default=".", help="directory for artifacts")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="regarch",
        description="GARCH(1,1) estimation with normal or rational errors, "
        "model selection, and realized-volatility evaluation.",
    )
    parser.add_argument("--version", action="version", version=f"regarch {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    fit = commands.add_parser("fit", help="fit one model on daily closes")
    fit.add_argument("--model", choices=_MODELS, required=True)
    fit.add_argument("--data", required=True, help="daily close CSV (date,close)")
    _add_chain_flags(fit)
    _add_common(fit)
    fit.set_defaults(func=cmd_fit)

    comp = commands.add_parser("compare", help="fit both models and score AIC/DIC")
    comp.add_argument("--data", required=True, help="daily close CSV (date,close)")
    _add_chain_flags(comp)
    comp.add_argument(
        "--paper-literal-aic",
        action="store_true",
        help="use the legacy -lnL - 2k form instead of -2 lnL + 2k",
    )
    _add_common(comp)
    comp.set_defaults(func=cmd_compare)

    rv = commands.add_parser("rv", help="realized variance and signature curve")
    rv.add_argument("--ticks", required=True, help="tick CSV (timestamp,price)")
    rv.add_argument("--calendar", help="session calendar JSON (default: Tokyo)")
    rv.add_argument(
        "--data",
        help="daily close CSV for HL factors (default: last tick of each day)",
    )
    rv.add_argument(
        "--delta-list",
        type=_delta_list,
        default=_delta_list(_DEFAULT_DELTAS),
        help=f"comma-separated sampling periods in seconds (default {_DEFAULT_DELTAS})",
    )
    _add_common(rv)
    rv.set_defaults(func=cmd_rv)

    rm = commands.add_parser(
        "rmspe", help="score fitted model volatilities against c-adjusted RV"
    )
    rm.add_argument("--data", required=True, help="daily close CSV (date,close)")
    rm.add_argument("--ticks", required=True, help="tick CSV (timestamp,price)")
    rm.add_argument("--calendar", help="session calendar JSON (default: Tokyo)")
    rm.add_argument(
        "--delta-list",
        type=_delta_list,
        default=_delta_list(_DEFAULT_DELTAS),
        help=f"comma-separated sampling periods in seconds (default {_DEFAULT_DELTAS})",
    )
    _add_chain_flags(rm)
    rm.add_argument(
        "--paper-literal-rmspe",
        action="store_true",
        help="omit the 1/N mean inside the square root (legacy root-sum form)",
    )
    rm.add_argument(
        "--rv-as-vols",
        action="store_true",
        help="diagnostic: use the c-adjusted RV itself as the variance forecast "
        "(skips fitting; RMSPE is identically zero)",
    )
    _add_common(rm)
    rm.set_defaults(func=cmd_rmspe)

    sim = commands.add_parser(
        "simulate", help="synthetic daily closes, ticks, and exact truth"
    )
    sim.add_argument("--days", type=int, default=250, help="trading days")
    sim.add_argument(
        "--steps-per-day", type=int, default=390, help="diffusion steps per day"
    )
    sim.add_argument("--model", choices=_MODELS, default=MODEL_NORMAL)
    sim.add_argument("--omega", type=float, default=1e-5)
    sim.add_argument("--alpha", type=float, default=0.1)
    sim.add_argument("--beta", type=float, default=0.85)
    sim.add_argument("--a", type=float, default=2.0, help="rational shape parameter")
    sim.add_argument(
        "--day-variance",
        type=float,
        default=None,
        help="constant in-session daily variance instead of a GARCH path",
    )
    sim.add_argument(
        "--rho2", type=float, default=0.0, help="microstructure noise variance"
    )
    sim.add_argument("--overnight-fraction", type=float, default=0.0)
    sim.add_argument("--start-price", type=float, default=2500.0)
    sim.add_argument("--start-date", type=_iso_date, default=date(2006, 1, 2))
    sim.add_argument("--calendar", help="session calendar JSON (default: Tokyo)")
    _add_common(sim)
    sim.set_defaults(func=cmd_simulate)

    return parser


_INVOCATION_KEYS = {
    "fit": ("model", "data", "burn_in", "samples", "adapt_interval", "nu", "seed"),
    "compare": (
        "data",
        "burn_in",
        "samples",
        "adapt_interval",
        "nu",
        "paper_literal_aic",
        "seed",
    ),
    "rv": ("ticks", "calendar", "data", "delta_list", "seed"),
    "rmspe": (
        "data",
        "ticks",
        "calendar",
        "delta_list",
        "burn_in",
        "samples",
        "adapt_interval",
        "nu",
        "paper_literal_rmspe",
        "rv_as_vols",
        "seed",
    ),
    "simulate": (
        "days",
        "steps_per_day",
        "model",
        "omega",
        "alpha",
        "beta",
        "a",
        "day_variance",
        "rho2",
        "overnight_fraction",
        "start_price",
        "start_date",
        "calendar",
        "seed",
    ),
}


def _invocation(args):
    """Resolved configuration recorded in every artifact."""
    out = {"command": args.command}
    for key in _INVOCATION_KEYS[args.command]:
        value = getattr(args, key)
        if isinstance(value, date):
            value = value.isoformat()
        out[key] = value
    return out


def _comment_lines(invocation):
    lines = [f"regarch {invocation['command']}"]
    for key, value in invocation.items():
        if key == "command":
            continue
        if isinstance(value, list):
            value = ",".join(f"{v:g}" for v in value)
        lines.append(f"{key.replace('_', '-')} = {value}")
    return lines


def _write_json(path, payload):
    Path(path).write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _out_dir(args):
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _calendar(args):
    if getattr(args, "calendar", None):
        return SessionCalendar.from_json(args.calendar)
    return SessionCalendar.tokyo()


def _chain_config(args):
    return ChainConfig(
        burn_in=args.burn_in,
        samples=args.samples,
        adapt_interval=args.adapt_interval,
        nu=args.nu,
        seed=args.seed,
    )


def _fit_table(chain):
    rows = [("parameter", "mean", "tau_int")]
    for s in chain.summaries:
        rows.append((s.name, s.formatted(), f"{s.tau_int:.1f}"))
    widths = [max(len(r[i]) for r in rows) for i in range(3)]
    return "\n".join(
        "  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip()
        for row in rows
    )


def _print_fit(chain):
    print(
        f"{chain.model} fit: {chain.n_obs} observations, "
        f"acceptance {chain.acceptance_rate:.3f}"
    )
    print(_fit_table(chain))
    print(f"log-likelihood at posterior mean: {chain.lnl_at_mean:.3f}")


def _load_returns(path):
    return daily_log_returns(load_daily_prices(path))


def cmd_fit(args):
    returns = _load_returns(args.data)
    chain = run_chain(args.model, returns, _chain_config(args))
    invocation = _invocation(args)
    out = _out_dir(args)

    chain_path = out / f"chain_{args.model}.csv"
    chain.export_samples_csv(chain_path, comments=_comment_lines(invocation))
    summary = chain.summary_dict()
    summary["invocation"] = invocation
    summary_path = out / f"summary_{args.model}.json"
    _write_json(summary_path, summary)

    _print_fit(chain)
    print(f"wrote {chain_path}")
    print(f"wrote {summary_path}")
    return 0


def _fit_both(args, returns):
    chains = {}
    for model in _MODELS:
        chains[model] = run_chain(model, returns, _chain_config(args))
    return chains


def _export_chain(chain, args, out, invocation):
    chain_path = out / f"chain_{chain.model}.csv"
    chain.export_samples_csv(chain_path, comments=_comment_lines(invocation))
    summary = chain.summary_dict()
    summary["invocation"] = invocation
    _write_json(out / f"summary_{chain.model}.json", summary)


def cmd_compare(args):
    returns = _load_returns(args.data)
    chains = _fit_both(args, returns)
    aic_form = AIC_LEGACY if args.paper_literal_aic else AIC_STANDARD
    scores = {m: score_chain(chains[m], aic_form=aic_form) for m in _MODELS}
    report = compare(scores[MODEL_NORMAL], scores[MODEL_RATIONAL])

    invocation = _invocation(args)
    out = _out_dir(args)
    for model in _MODELS:
        _export_chain(chains[model], args, out, invocation)
    payload = report.as_dict()
    payload["invocation"] = invocation
    comparison_path = out / "comparison.json"
    _write_json(comparison_path, payload)

    for model in _MODELS:
        _print_fit(chains[model])
        print()
    rows = [("criterion", MODEL_NORMAL, MODEL_RATIONAL, "preferred")]
    rows.append(
        (
            "AIC",
            f"{scores[MODEL_NORMAL].aic:.3f}",
            f"{scores[MODEL_RATIONAL].aic:.3f}",
            report.aic_preferred,
        )
    )
    rows.append(
        (
            "DIC",
            f"{scores[MODEL_NORMAL].dic:.3f}",
            f"{scores[MODEL_RATIONAL].dic:.3f}",
            report.dic_preferred,
        )
    )
    widths = [max(len(r[i]) for r in rows) for i in range(4)]
    for row in rows:
        print("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip())
    if report.criteria_agree:
        print(f"criteria agree: {report.aic_preferred} preferred by both")
    else:
        print("criteria disagree")
    print(f"wrote {comparison_path}")
    return 0


def _fmt_delta(delta):
    return f"{delta:g}"


def cmd_rv(args):
    ticks = load_ticks(args.ticks)
    calendar = _calendar(args)
    if args.data:
        returns = _load_returns(args.data)
    else:
        returns = daily_log_returns(daily_closes_from_ticks(ticks, calendar))

    invocation = _invocation(args)
    comments = _comment_lines(invocation)
    out = _out_dir(args)

    avg, factors = [], []
    for delta in args.delta_list:
        rv = rv_from_ticks(ticks, calendar, delta)
        c = hl_factor(returns, rv)
        avg.append(float(rv.values.mean()))
        factors.append(c)
        rv_path = out / f"rv_{_fmt_delta(delta)}s.csv"
        write_rv_csv(rv.with_hl(c), rv_path, comments=comments)
        print(f"wrote {rv_path}")
    curve = SignatureCurve(
        np.array(args.delta_list), np.array(avg), np.array(factors)
    )
    signature_path = out / "signature.csv"
    write_signature_csv(curve, signature_path, comments=comments)

    hl_path = out / "hl.csv"
    buf = io.StringIO()
    for line in comments:
        buf.write(f"# {line}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["delta_seconds", "hl_factor"])
    for delta, c in zip(curve.deltas, curve.hl_factors):
        writer.writerow([repr(float(delta)), repr(float(c))])
    hl_path.write_text(buf.getvalue(), encoding="utf-8")

    print("delta_seconds  avg_rv        hl_factor")
    for delta, v, c in zip(curve.deltas, curve.avg_rv, curve.hl_factors):
        print(f"{_fmt_delta(delta):>13}  {v:.6e}  {c:.4f}")
    print(f"wrote {signature_path}")
    print(f"wrote {hl_path}")
    return 0


def cmd_rmspe(args):
    returns = _load_returns(args.data)
    ticks = load_ticks(args.ticks)
    calendar = _calendar(args)
    invocation = _invocation(args)
    out = _out_dir(args)
    mean_normalized = not args.paper_literal_rmspe

    if args.rv_as_vols:
        columns = ["rmspe_oracle"]
        scaled = {}
    else:
        chains = _fit_both(args, returns)
        for model in _MODELS:
            _export_chain(chains[model], args, out, invocation)
            _print_fit(chains[model])
            print()
        columns = [f"rmspe_{m.replace('-', '_')}" for m in _MODELS]
        scaled = {
            m: scale_to_daily_variance(
                volatility_recursion(chains[m].params_at_mean(), returns), returns
            )
            for m in _MODELS
        }

    rows = []
    for delta in args.delta_list:
        rv = rv_from_ticks(ticks, calendar, delta)
        c = hl_factor(returns, rv)
        adjusted = rv.with_hl(c)
        if args.rv_as_vols:
            forecast = VolSeries(adjusted.dates, adjusted.c_adjusted())
            errors = [rmspe(forecast, adjusted, mean_normalized=mean_normalized)]
        else:
            errors = [
                rmspe(scaled[m], adjusted, mean_normalized=mean_normalized)
                for m in _MODELS
            ]
        rows.append((delta, c, errors))

    rmspe_path = out / "rmspe.csv"
    buf = io.StringIO()
    for line in _comment_lines(invocation):
        buf.write(f"# {line}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["delta_seconds", "hl_factor"] + columns)
    for delta, c, errors in rows:
        writer.writerow(
            [repr(float(delta)), repr(float(c))] + [repr(float(e)) for e in errors]
        )
    rmspe_path.write_text(buf.getvalue(), encoding="utf-8")

    header = ["delta_seconds", "hl_factor"] + columns
    print("  ".join(header))
    for delta, c, errors in rows:
        cells = [f"{_fmt_delta(delta):>13}", f"{c:9.4f}"]
        cells += [f"{e:.6f}" for e in errors]
        print("  ".join(cells))
    print(f"wrote {rmspe_path}")
    return 0


def cmd_simulate(args):
    calendar = _calendar(args)
    if args.day_variance is not None:
        garch = None
        day_variances = args.day_variance
    else:
        law = RATIONAL if args.model == MODEL_RATIONAL else NORMAL
        a = args.a if law == RATIONAL else None
        garch = GarchParams(args.omega, args.alpha, args.beta, law=law, a=a)
        day_variances = None
    spec = DiffusionSpec(
        steps_per_day=args.steps_per_day,
        day_variances=day_variances,
        garch=garch,
        noise=NoiseModel(args.rho2),
        overnight_fraction=args.overnight_fraction,
        start_price=args.start_price,
        start_date=args.start_date,
    )
    sim = simulate_intraday(spec, args.days, np.random.default_rng(args.seed), calendar)

    invocation = _invocation(args)
    comments = _comment_lines(invocation)
    out = _out_dir(args)

    daily_path = out / "daily.csv"
    write_daily_csv(sim.daily_prices, daily_path, comments=comments)
    ticks_path = out / "ticks.csv"
    write_ticks_csv(sim.ticks, ticks_path, comments=comments)

    truth_path = out / "truth.csv"
    buf = io.StringIO()
    for line in comments:
        buf.write(f"# {line}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["date", "integrated_variance", "total_variance", "true_return"])
    for i, day in enumerate(sim.dates):
        writer.writerow(
            [
                day.isoformat(),
                repr(float(sim.session_variances[i])),
                repr(float(sim.total_variances[i])),
                repr(float(sim.true_daily_returns[i])),
            ]
        )
    truth_path.write_text(buf.getvalue(), encoding="utf-8")

    print(
        f"simulated {args.days} trading days, {len(sim.ticks)} ticks "
        f"from {sim.dates[0].isoformat()} to {sim.dates[-1].isoformat()}"
    )
    for path in (daily_path, ticks_path, truth_path):
        print(f"wrote {path}")
    return 0


def main(argv=None):
    logging.basicConfig(stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    logging.getLogger("regarch").setLevel(logging.INFO)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (NumericalError, AdaptationFailureError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (
        ParseError,
        ValidationError,
        DomainError,
        InsufficientDataError,
        FileNotFoundError,
        IsADirectoryError,
        NotADirectoryError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
