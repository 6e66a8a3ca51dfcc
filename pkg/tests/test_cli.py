"""Command-line interface: exit codes, output files, determinism."""

import csv
import json

import numpy as np
import pytest

from glmstab import cli


def _read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def test_exit_code_config_errors(tmp_path, capsys):
    out = str(tmp_path / "o")
    assert cli.main(["run", "--method", "rk19", "--h", "0.1", "--tfinal", "1",
                     "--out", out]) == 2
    assert cli.main(["run", "--h", "-0.1", "--tfinal", "1", "--out", out]) == 2
    assert cli.main(["run", "--tfinal", "1", "--out", out]) == 2          # missing --h
    assert cli.main(["run", "--h", "0.1", "--tfinal", "1", "--out", out,
                     "--config", "{not json"]) == 2
    assert cli.main(["run", "--h", "0.1", "--tfinal", "1", "--out", out,
                     "--config", str(tmp_path / "missing.json")]) == 2
    capsys.readouterr()


def test_exit_code_numerical_failure(tmp_path, capsys):
    out = str(tmp_path / "o")
    # D+L outside the method's stability gap
    assert cli.main(["counterexample", "--D", "3.0", "--L", "-0.1",
                     "--out", out]) == 3
    capsys.readouterr()


def test_run_outputs(tmp_path, capsys):
    out = tmp_path / "run"
    rc = cli.main(["run", "--h", "0.1", "--tfinal", "4", "--out", str(out)])
    assert rc == 0
    header, rows = _read_csv(out / "run.csv")
    assert header == ["n", "t", "norm_x", "lte", "running_mu"]
    assert len(rows) == 41
    assert rows[0][3] != "" and rows[0][4] == ""      # no running average at n=0
    assert rows[-1][3] == "" and rows[-1][4] != ""    # no defect after the last step
    report = json.loads((out / "run_report.json").read_text())
    assert report["n_steps"] == 40
    assert report["lte_mean"] <= report["lte_max"]
    assert not report["diverged"]
    capsys.readouterr()


def test_run_config_file_and_inline_match(tmp_path, capsys):
    cfg = {"a1": 1.0, "a2": 1.0, "b1": -0.2, "b2": -0.3, "beta": 2.0}
    path = tmp_path / "prob.json"
    path.write_text(json.dumps(cfg))
    rc1 = cli.main(["run", "--h", "0.1", "--tfinal", "2", "--config", str(path),
                    "--out", str(tmp_path / "a")])
    rc2 = cli.main(["run", "--h", "0.1", "--tfinal", "2", "--config", json.dumps(cfg),
                    "--out", str(tmp_path / "b")])
    assert rc1 == rc2 == 0
    assert (tmp_path / "a" / "run.csv").read_bytes() == \
        (tmp_path / "b" / "run.csv").read_bytes()
    capsys.readouterr()


def test_run_deterministic(tmp_path, capsys):
    for sub in ("x", "y"):
        cli.main(["run", "--h", "0.05", "--tfinal", "3", "--out",
                  str(tmp_path / sub)])
    assert (tmp_path / "x" / "run.csv").read_bytes() == \
        (tmp_path / "y" / "run.csv").read_bytes()
    assert (tmp_path / "x" / "run_report.json").read_bytes() == \
        (tmp_path / "y" / "run_report.json").read_bytes()
    capsys.readouterr()


def test_counterexample_outputs(tmp_path, capsys):
    out = tmp_path / "cx"
    rc = cli.main(["counterexample", "--steps", "50", "--out", str(out)])
    assert rc == 0
    report = json.loads((out / "counterexample_report.json").read_text())
    assert report["growth_factor"] > 10.0
    assert report["exact_decay_factor"] < 1.0
    assert report["max_oscillatory_frozen_deviation"] <= 1e-12
    header, rows = _read_csv(out / "counterexample.csv")
    assert header == ["n", "t", "x_oscillatory", "x_frozen", "x_exact"]
    assert len(rows) == 51
    capsys.readouterr()


def test_spectrum_bundle_schema(tmp_path, capsys):
    out = tmp_path / "sp"
    rc = cli.main(["spectrum", "--h", "0.1", "--tfinal", "10", "--mode", "w",
                   "--denominator", "N0", "--out", str(out)])
    assert rc == 0
    bundle = json.loads((out / "spectrum.json").read_text())
    for key in ("mode", "eta", "mu", "alpha", "beta", "window", "h",
                "denominator_mode"):
        assert key in bundle
    assert bundle["mode"] == "w"
    assert bundle["denominator_mode"] == "N0"
    assert bundle["alpha"][0] <= bundle["beta"][0]
    assert bundle["eta"][0] <= bundle["mu"][0] + 1e-12
    capsys.readouterr()


def test_spectrum_frame_mode_with_oracle(tmp_path, capsys):
    out = tmp_path / "spf"
    rc = cli.main(["spectrum", "--h", "0.1", "--tfinal", "8", "--mode", "frame",
                   "--oracle-h", "0.01", "--out", str(out)])
    assert rc == 0
    bundle = json.loads((out / "spectrum.json").read_text())
    assert len(bundle["mu"]) == 4            # k*d modes for the two-step method
    assert len(bundle["oracle_mean_rates"]) == 2
    capsys.readouterr()


def test_converge_reports_slopes(tmp_path, capsys):
    out = tmp_path / "cv"
    rc = cli.main(["converge", "--method", "be", "--out", str(out)])
    assert rc == 0
    report = json.loads((out / "converge_report.json").read_text())
    assert report["global_slope"] == pytest.approx(1.0, abs=0.25)
    assert report["lte_slope"] == pytest.approx(2.0, abs=0.25)
    header, rows = _read_csv(out / "converge.csv")
    assert header == ["h", "global_error", "lte_max"]
    assert len(rows) == 3
    capsys.readouterr()


def test_csv_float_format(tmp_path, capsys):
    out = tmp_path / "fmt"
    cli.main(["run", "--h", "0.1", "--tfinal", "1", "--out", str(out)])
    _, rows = _read_csv(out / "run.csv")
    val = rows[1][1]
    assert "e" in val
    mantissa = val.split("e")[0].replace("-", "").replace(".", "")
    assert len(mantissa) == 17
    capsys.readouterr()
