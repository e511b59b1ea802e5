"""End-to-end CLI runs: exit codes, artifacts, and byte determinism."""

import csv
import json

import numpy as np
import pytest

from regarch import cli
from regarch.data import daily_log_returns, load_daily_prices

_SIM_ARGS = [
    "simulate",
    "--days", "150",
    "--steps-per-day", "78",
    "--model", "garch-re",
    "--omega", "2.8e-4",
    "--alpha", "0.132",
    "--beta", "0.768",
    "--a", "1.57",
    "--rho2", "2.5e-7",
    "--seed", "3",
]
# small chains keep the CLI tests quick; determinism and flag plumbing do
# not depend on chain length
_FAST_CHAIN = ["--burn-in", "300", "--samples", "600", "--adapt-interval", "100"]


def _read_csv(path):
    """(header, data rows) of a CSV, with leading # comments separated."""
    comments, rows = [], []
    with open(path, newline="", encoding="utf-8") as stream:
        for line in stream:
            if line.startswith("#"):
                comments.append(line.rstrip("\n"))
            else:
                rows.append(next(csv.reader([line])))
    return comments, rows[0], rows[1:]


def _column(rows, idx):
    return np.array([float(r[idx]) for r in rows])


@pytest.fixture(scope="module")
def market(tmp_path_factory):
    out = tmp_path_factory.mktemp("market")
    assert cli.main(_SIM_ARGS + ["--out-dir", str(out)]) == 0
    return out


class TestParsing:
    def test_version(self, capsys):
        assert cli.main(["--version"]) == 0
        assert "regarch" in capsys.readouterr().out

    def test_no_command(self, capsys):
        assert cli.main([]) == 2

    def test_unknown_command(self, capsys):
        assert cli.main(["frobnicate"]) == 2

    @pytest.mark.parametrize(
        "deltas", ["30,abc", "30,-60", "0", ""],
    )
    def test_bad_delta_list(self, deltas, tmp_path, capsys):
        code = cli.main(["rv", "--ticks", "x.csv", "--delta-list", deltas])
        assert code == 2

    def test_bad_start_date(self, capsys):
        assert cli.main(["simulate", "--start-date", "01/02/2006"]) == 2

    def test_missing_required_flag(self, capsys):
        assert cli.main(["fit", "--data", "x.csv"]) == 2  # no --model

    def test_bad_model_choice(self, capsys):
        code = cli.main(["fit", "--model", "egarch", "--data", "x.csv"])
        assert code == 2


class TestSimulate:
    def test_artifacts(self, market):
        for name in ("daily.csv", "ticks.csv", "truth.csv"):
            assert (market / name).is_file()
        comments, header, rows = _read_csv(market / "truth.csv")
        assert header == [
            "date", "integrated_variance", "total_variance", "true_return"
        ]
        assert len(rows) == 150
        assert comments[0] == "# regarch simulate"
        assert "# seed = 3" in comments
        assert "# model = garch-re" in comments

    def test_deterministic_bytes(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        args = ["simulate", "--days", "40", "--steps-per-day", "78", "--seed", "9"]
        assert cli.main(args + ["--out-dir", str(a)]) == 0
        assert cli.main(args + ["--out-dir", str(b)]) == 0
        for name in ("daily.csv", "ticks.csv", "truth.csv"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_seed_changes_output(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        base = ["simulate", "--days", "40", "--steps-per-day", "78"]
        assert cli.main(base + ["--seed", "1", "--out-dir", str(a)]) == 0
        assert cli.main(base + ["--seed", "2", "--out-dir", str(b)]) == 0
        assert (a / "ticks.csv").read_bytes() != (b / "ticks.csv").read_bytes()

    def test_noise_free_round_trip(self, tmp_path):
        # without observation noise the written closes reproduce the true
        # close-to-close returns
        out = tmp_path / "clean"
        args = [
            "simulate", "--days", "60", "--steps-per-day", "78",
            "--rho2", "0.0", "--seed", "5", "--out-dir", str(out),
        ]
        assert cli.main(args) == 0
        returns = daily_log_returns(load_daily_prices(out / "daily.csv"))
        _, _, rows = _read_csv(out / "truth.csv")
        truth = _column(rows, 3)
        np.testing.assert_allclose(returns.values, truth[1:], rtol=0, atol=1e-12)

    def test_day_variance_mode(self, tmp_path):
        out = tmp_path / "flat"
        args = [
            "simulate", "--days", "10", "--steps-per-day", "78",
            "--day-variance", "1e-4", "--out-dir", str(out),
        ]
        assert cli.main(args) == 0
        _, _, rows = _read_csv(out / "truth.csv")
        assert (_column(rows, 1) == 1e-4).all()

    def test_invalid_days(self, tmp_path, capsys):
        assert cli.main(["simulate", "--days", "0"]) == 2
        assert "error:" in capsys.readouterr().err


class TestFit:
    def test_missing_data_file(self, capsys):
        code = cli.main(["fit", "--model", "garch-n", "--data", "/nope/void.csv"])
        assert code == 2
        assert "void.csv" in capsys.readouterr().err

    def test_fit_artifacts(self, market, tmp_path, capsys):
        out = tmp_path / "fit"
        args = [
            "fit", "--model", "garch-n", "--data", str(market / "daily.csv"),
            "--seed", "1", "--out-dir", str(out),
        ] + _FAST_CHAIN
        assert cli.main(args) == 0

        summary = json.loads((out / "summary_garch-n.json").read_text())
        assert summary["model"] == "garch-n"
        assert summary["invocation"]["command"] == "fit"
        assert summary["invocation"]["seed"] == 1
        assert set(summary["parameters"]) == {"omega", "alpha", "beta"}
        assert 0.0 < summary["acceptance_rate"] <= 1.0

        _, header, rows = _read_csv(out / "chain_garch-n.csv")
        assert header == ["omega", "alpha", "beta"]
        assert len(rows) == 600
        assert (_column(rows, 0) > 0).all()

        stdout = capsys.readouterr().out
        assert "tau_int" in stdout
        assert "garch-n fit" in stdout

    def test_rational_fit_has_shape_parameter(self, market, tmp_path):
        out = tmp_path / "fit_re"
        args = [
            "fit", "--model", "garch-re", "--data", str(market / "daily.csv"),
            "--out-dir", str(out),
        ] + _FAST_CHAIN
        assert cli.main(args) == 0
        _, header, _ = _read_csv(out / "chain_garch-re.csv")
        assert header == ["omega", "alpha", "beta", "a"]


class TestCompare:
    def test_comparison_artifacts(self, market, tmp_path, capsys):
        out = tmp_path / "cmp"
        args = [
            "compare", "--data", str(market / "daily.csv"),
            "--out-dir", str(out),
        ] + _FAST_CHAIN
        assert cli.main(args) == 0

        report = json.loads((out / "comparison.json").read_text())
        assert report["aic_preferred"] in ("garch-n", "garch-re")
        assert report["dic_preferred"] in ("garch-n", "garch-re")
        assert report["criteria_agree"] == (
            report["aic_preferred"] == report["dic_preferred"]
        )
        assert [s["model"] for s in report["scores"]] == ["garch-n", "garch-re"]
        assert report["invocation"]["command"] == "compare"
        for model in ("garch-n", "garch-re"):
            assert (out / f"chain_{model}.csv").is_file()
            assert (out / f"summary_{model}.json").is_file()

        stdout = capsys.readouterr().out
        assert "AIC" in stdout and "DIC" in stdout
        assert "criteria" in stdout


class TestRv:
    def test_rv_artifacts(self, market, tmp_path):
        out = tmp_path / "rv"
        args = [
            "rv", "--ticks", str(market / "ticks.csv"),
            "--data", str(market / "daily.csv"),
            "--delta-list", "300,900", "--out-dir", str(out),
        ]
        assert cli.main(args) == 0

        for name in ("rv_300s.csv", "rv_900s.csv", "signature.csv", "hl.csv"):
            assert (out / name).is_file()

        _, header, rows = _read_csv(out / "hl.csv")
        assert header == ["delta_seconds", "hl_factor"]
        assert _column(rows, 0).tolist() == [300.0, 900.0]
        hl = _column(rows, 1)

        _, sig_header, sig_rows = _read_csv(out / "signature.csv")
        assert sig_header == ["delta_seconds", "avg_rv", "hl_factor"]
        np.testing.assert_array_equal(_column(sig_rows, 2), hl)

        # per-period file: adjusted column is raw rv times the HL factor
        _, rv_header, rv_rows = _read_csv(out / "rv_300s.csv")
        assert rv_header == ["date", "rv", "c_adjusted_rv"]
        np.testing.assert_allclose(
            _column(rv_rows, 2), _column(rv_rows, 1) * hl[0], rtol=1e-12
        )

    def test_closes_default_to_last_tick(self, market, tmp_path):
        out = tmp_path / "rv_bare"
        args = [
            "rv", "--ticks", str(market / "ticks.csv"),
            "--delta-list", "900", "--out-dir", str(out),
        ]
        assert cli.main(args) == 0
        assert (out / "hl.csv").is_file()

    def test_calendar_flag(self, market, tmp_path):
        cal_path = tmp_path / "cal.json"
        sessions = [["09:00", "11:00"], ["12:30", "15:00"]]
        cal_path.write_text(json.dumps({
            "weekday_sessions": {
                d: sessions for d in ("mon", "tue", "wed", "thu", "fri")
            }
        }))
        out = tmp_path / "rv_cal"
        args = [
            "rv", "--ticks", str(market / "ticks.csv"),
            "--calendar", str(cal_path),
            "--delta-list", "900", "--out-dir", str(out),
        ]
        assert cli.main(args) == 0
        # the JSON calendar matches the default, so results agree
        default = tmp_path / "rv_default"
        assert cli.main([
            "rv", "--ticks", str(market / "ticks.csv"),
            "--delta-list", "900", "--out-dir", str(default),
        ]) == 0
        _, _, a = _read_csv(out / "hl.csv")
        _, _, b = _read_csv(default / "hl.csv")
        assert a == b

    def test_deterministic_bytes(self, market, tmp_path):
        dirs = [tmp_path / "a", tmp_path / "b"]
        for d in dirs:
            assert cli.main([
                "rv", "--ticks", str(market / "ticks.csv"),
                "--delta-list", "300,900", "--out-dir", str(d),
            ]) == 0
        for name in ("rv_300s.csv", "rv_900s.csv", "signature.csv", "hl.csv"):
            assert (dirs[0] / name).read_bytes() == (dirs[1] / name).read_bytes()

    def test_missing_ticks(self, capsys):
        assert cli.main(["rv", "--ticks", "/nope/ticks.csv"]) == 2


class TestRmspe:
    def test_rv_as_vols_oracle_is_zero(self, market, tmp_path):
        out = tmp_path / "oracle"
        args = [
            "rmspe", "--data", str(market / "daily.csv"),
            "--ticks", str(market / "ticks.csv"),
            "--delta-list", "300,900", "--rv-as-vols",
            "--out-dir", str(out),
        ]
        assert cli.main(args) == 0
        comments, header, rows = _read_csv(out / "rmspe.csv")
        assert header == ["delta_seconds", "hl_factor", "rmspe_oracle"]
        assert (_column(rows, 2) == 0.0).all()
        assert "# rv-as-vols = True" in comments

    def test_model_scores(self, market, tmp_path):
        out = tmp_path / "scores"
        args = [
            "rmspe", "--data", str(market / "daily.csv"),
            "--ticks", str(market / "ticks.csv"),
            "--delta-list", "300,900", "--out-dir", str(out),
        ] + _FAST_CHAIN
        assert cli.main(args) == 0
        _, header, rows = _read_csv(out / "rmspe.csv")
        assert header == [
            "delta_seconds", "hl_factor", "rmspe_garch_n", "rmspe_garch_re"
        ]
        assert len(rows) == 2
        for idx in (2, 3):
            col = _column(rows, idx)
            assert np.isfinite(col).all() and (col > 0).all()
        # both fits are exported alongside the score table
        for model in ("garch-n", "garch-re"):
            assert (out / f"chain_{model}.csv").is_file()
            assert (out / f"summary_{model}.json").is_file()

    def test_literal_form_flag_recorded(self, market, tmp_path):
        out = tmp_path / "literal"
        args = [
            "rmspe", "--data", str(market / "daily.csv"),
            "--ticks", str(market / "ticks.csv"),
            "--delta-list", "900", "--rv-as-vols", "--paper-literal-rmspe",
            "--out-dir", str(out),
        ]
        assert cli.main(args) == 0
        comments, _, rows = _read_csv(out / "rmspe.csv")
        assert "# paper-literal-rmspe = True" in comments
        assert (_column(rows, 2) == 0.0).all()
