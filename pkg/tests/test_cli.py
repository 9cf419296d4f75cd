import csv
import json
import statistics
import subprocess
import sys
from pathlib import Path

import pytest

from g2rbound.cli import (
    EXIT_FAIL,
    EXIT_IO,
    EXIT_OK,
    EXIT_USAGE,
    UsageError,
    aggregate,
    cmd_estimate,
    cmd_verify,
    load_config,
    main,
    read_reports_csv,
    write_reports_csv,
)
from g2rbound.errors import ParseError, ValidationError
from g2rbound.estimators import CSV_COLUMNS, BoundReport
from g2rbound.predictions import PREDICTION_COLUMNS, PredictionRecord, read_predictions, write_predictions

FIXTURES = Path(__file__).parent / "fixtures"

SMALL_CONFIG = """\
[scenario]
kind = "gaussian-pair"
n = 200
m = 100
dims = 4
arity = 4

[train]
max_steps = 200

[sweep]
knob = "gamma"
values = [0.0, 1.0]
seeds = [0, 1]
"""


def write_rows(path, rows, header=PREDICTION_COLUMNS):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    return path


def make_rows(m=5, true=0, pred_h=0, pred_hstar=0, hda=("", "")):
    """Test-split rows for both origins; hda is (synthetic value, real value)."""
    rows = []
    for origin, v in zip(("synthetic", "real"), hda):
        rows += [["test", origin, f"{origin[0]}{i}", true, pred_h, pred_hstar, v] for i in range(m)]
    return rows



class TestVerify:
    def test_clean(self):
        code, summary = cmd_verify(100, seed=3)
        assert code == EXIT_OK and summary["violations"] == 0
        assert summary["min_final_slack"] >= -1e-9
        assert summary["max_dhdh_minus_dHdH"] <= 1e-12

    def test_self_test_fails(self, tmp_path):
        code, summary = cmd_verify(50, self_test=True, out=tmp_path)
        assert code == EXIT_FAIL and summary["violations"] > 0
        dumped = sorted(tmp_path.glob("violation_*.json"))
        assert dumped
        doc = json.loads(dumped[0].read_text())
        assert "g2r-bound" in doc["problems"] and "dist_r" in doc["instance"]

    def test_zero_is_usage_error(self):
        with pytest.raises(UsageError):
            cmd_verify(0)
        assert main(["verify", "--fuzz", "0"]) == EXIT_USAGE


class TestEstimate:
    def test_fixture(self):
        expected = json.loads((FIXTURES / "predictions_40_expected.json").read_text())
        code, rep = cmd_estimate(FIXTURES / "predictions_40.csv")
        assert code == EXIT_OK
        for key in ("eps_test_g_h", "eps_test_r_h", "lambda_hat", "d_g2r_hat", "d_da_hat", "b_g2r_hat", "b_da_hat"):
            assert rep[key] == pytest.approx(expected[key], abs=1e-12), key
        assert rep["m"] == 20

    def test_all_correct(self, tmp_path):
        p = write_rows(tmp_path / "p.csv", make_rows(true=2, pred_h=2, pred_hstar=2))
        _, rep = cmd_estimate(p)
        assert rep["b_g2r_hat"] == 0.0 and rep["lambda_hat"] == 0.0 and rep["eps_test_r_h"] == 0.0
        assert rep["d_da_hat"] is None and rep["warnings"]

    def test_perfect_separator(self, tmp_path):
        p = write_rows(tmp_path / "p.csv", make_rows(hda=(1, 0)))
        _, rep = cmd_estimate(p)
        assert rep["d_da_hat"] == 1.0 and rep["warnings"] == []

    def test_writes_csv(self, tmp_path):
        out = tmp_path / "r.csv"
        cmd_estimate(FIXTURES / "predictions_40.csv", out=out)
        (r,) = read_reports_csv(out)
        assert r.b_da_hat == pytest.approx(1.0, abs=1e-12)

    def test_missing_test_split(self, tmp_path):
        rows = [r for r in make_rows() if r[1] == "real"]
        with pytest.raises(ValidationError):
            cmd_estimate(write_rows(tmp_path / "p.csv", rows))

    def test_duplicate_key(self, tmp_path):
        rows = make_rows()
        rows.append(rows[0])
        with pytest.raises(ValidationError):
            read_predictions(write_rows(tmp_path / "p.csv", rows))

    def test_malformed_row_reports_line(self, tmp_path):
        rows = make_rows()
        rows[3][3] = "x"
        with pytest.raises(ParseError) as err:
            read_predictions(write_rows(tmp_path / "p.csv", rows))
        assert err.value.line == 5
        assert main(["estimate", str(tmp_path / "p.csv")]) == EXIT_FAIL

    def test_short_row(self, tmp_path):
        rows = make_rows()
        rows[0] = rows[0][:4]
        with pytest.raises(ParseError):
            read_predictions(write_rows(tmp_path / "p.csv", rows))

    def test_bad_header(self, tmp_path):
        with pytest.raises(ParseError):
            read_predictions(write_rows(tmp_path / "p.csv", make_rows(), header=PREDICTION_COLUMNS[:-1]))

    def test_partial_hda(self, tmp_path):
        rows = make_rows(hda=(1, ""))
        with pytest.raises(ValidationError):
            read_predictions(write_rows(tmp_path / "p.csv", rows))

    def test_missing_file(self, tmp_path):
        assert main(["estimate", str(tmp_path / "nope.csv")]) == EXIT_IO

    def test_records_round_trip(self, tmp_path):
        recs = [PredictionRecord("test", "real", "a", 1, 0, 1, 0), PredictionRecord("train", "synthetic", "b", 3, 3, 2, 1)]
        write_predictions(recs, tmp_path / "p.csv")
        assert read_predictions(tmp_path / "p.csv") == recs


def _report(**kw):
    base = dict(eps_test_g_h=0.1, eps_test_r_h=0.2, lambda_hat=0.1, d_g2r_hat=0.05, d_da_hat=0.3,
                b_g2r_hat=0.25, b_da_hat=0.5, hoeffding_margin=0.03, n=100, m=50, seed=0)
    base.update(kw)
    return BoundReport(**base)


class TestReport:
    def test_single_row(self):
        series = aggregate([_report(gamma=0.5)])
        assert series["values"] == [0.5]
        assert series["curves"]["d_g2r_hat"] == {"mean": [0.05], "std": [0.0]}

    def test_matches_manual_mean_and_std(self, tmp_path):
        vals = [0.11, 0.17, 0.13, 0.29, 0.19]
        reports = [_report(gamma=g, seed=s, d_g2r_hat=v + g) for g in (0.0, 1.0) for s, v in enumerate(vals)]
        write_reports_csv(reports, tmp_path / "b.csv")
        out = tmp_path / "s.json"
        assert main(["report", str(tmp_path / "b.csv"), "--out", str(out)]) == EXIT_OK
        series = json.loads(out.read_text())
        assert series["knob"] == "gamma" and series["counts"] == [5, 5]
        curve = series["curves"]["d_g2r_hat"]
        # mean and sample standard deviation written out longhand
        for i, g in enumerate((0.0, 1.0)):
            xs = [v + g for v in vals]
            mean = sum(xs) / 5
            std = (sum((x - mean) ** 2 for x in xs) / 4) ** 0.5
            assert curve["mean"][i] == pytest.approx(mean, abs=1e-12)
            assert curve["std"][i] == pytest.approx(std, abs=1e-12)
            assert curve["std"][i] == pytest.approx(statistics.stdev(xs), abs=1e-15)

    def test_mixed_knobs(self):
        with pytest.raises(ValidationError):
            aggregate([_report(gamma=0.1, rho=0.0), _report(gamma=0.2, rho=0.5)])

    def test_mixed_files_exit_code(self, tmp_path):
        write_reports_csv([_report(gamma=0.1), _report(gamma=0.2)], tmp_path / "a.csv")
        write_reports_csv([_report(rho=0.1), _report(rho=0.3)], tmp_path / "b.csv")
        code = main(["report", str(tmp_path / "a.csv"), str(tmp_path / "b.csv"), "--out", str(tmp_path / "s.json")])
        assert code == EXIT_FAIL

    def test_schema_mismatch(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text(",".join(reversed(CSV_COLUMNS)) + "\n")
        with pytest.raises(ValidationError):
            read_reports_csv(p)

    def test_csv_round_trip(self, tmp_path):
        reports = [_report(gamma=0.25, d_da_hat=None, b_da_hat=None), _report(gamma=0.75)]
        write_reports_csv(reports, tmp_path / "b.csv")
        assert read_reports_csv(tmp_path / "b.csv") == reports


class TestConfig:
    def test_unknown_key(self, tmp_path):
        p = tmp_path / "c.toml"
        p.write_text("[scenario]\ngamma = 0.1\nsigma = 2.0\n")
        with pytest.raises(ValidationError):
            load_config(p)

    def test_unknown_section(self, tmp_path):
        p = tmp_path / "c.toml"
        p.write_text("[model]\nx = 1\n")
        with pytest.raises(ValidationError):
            load_config(p)

    def test_digest_input_is_raw_bytes(self, tmp_path):
        p = tmp_path / "c.toml"
        p.write_text(SMALL_CONFIG)
        doc, raw = load_config(p)
        assert raw == SMALL_CONFIG.encode() and doc["scenario"]["dims"] == 4


class TestSweep:
    def test_end_to_end(self, tmp_path):
        cfg = tmp_path / "c.toml"
        cfg.write_text(SMALL_CONFIG)
        out = tmp_path / "run"
        assert main(["sweep", "--config", str(cfg), "--out", str(out), "--save-predictions"]) == EXIT_OK
        reports = read_reports_csv(out / "bounds.csv")
        assert [(r.gamma, r.seed) for r in reports] == [(0.0, 0), (0.0, 1), (1.0, 0), (1.0, 1)]
        for r in reports:
            assert r.b_g2r_hat == r.eps_test_g_h + r.lambda_hat + r.d_g2r_hat
        series = json.loads((out / "series.json").read_text())
        assert series["values"] == [0.0, 1.0]
        manifest = json.loads((out / "manifest.json").read_text())
        import hashlib

        assert manifest["config_digest"] == hashlib.sha256(cfg.read_bytes()).hexdigest()
        # every saved prediction file reproduces its row
        for i, r in enumerate(reports):
            _, est = cmd_estimate(out / "predictions" / f"run_{i:04d}.csv")
            for key in CSV_COLUMNS[6:] + ("n", "m", "delta"):
                assert est[key] == getattr(r, key), (i, key)

        again = tmp_path / "again"
        main(["sweep", "--config", str(cfg), "--out", str(again), "--workers", "2"])
        assert (again / "bounds.csv").read_bytes() == (out / "bounds.csv").read_bytes()

    def test_empty_values(self, tmp_path):
        assert main(["sweep", "--values", "", "--out", str(tmp_path / "o")]) == EXIT_USAGE

    def test_invalid_knob(self, tmp_path):
        with pytest.raises(SystemExit) as err:
            main(["sweep", "--knob", "alpha", "--values", "0.1", "--out", str(tmp_path)])
        assert err.value.code == EXIT_USAGE

    def test_unwritable_dir(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("")
        assert main(["sweep", "--values", "0.1", "--out", str(blocker / "sub")]) == EXIT_IO


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "g2rbound", "verify", "--fuzz", "0"], capture_output=True, text=True)
    assert proc.returncode == EXIT_USAGE
    proc = subprocess.run([sys.executable, "-m", "g2rbound", "verify", "--fuzz", "20"], capture_output=True, text=True)
    assert proc.returncode == EXIT_OK
    assert json.loads(proc.stdout)["violations"] == 0
