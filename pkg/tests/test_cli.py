import csv
import json

import pytest

from segbreak.cli import main
from segbreak.ingest import synthesize, write_csv


@pytest.fixture
def synth_json(tmp_path, jump_config):
    cfg = jump_config.to_dict()
    path = tmp_path / "synthetic.json"
    path.write_text(json.dumps(cfg))
    return path


@pytest.fixture
def data_csv(tmp_path, jump_config):
    path = tmp_path / "data.csv"
    write_csv(synthesize(jump_config), path)
    return path


def _read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_scan_outputs(tmp_path, synth_json):
    out = tmp_path / "out"
    assert main(["scan", "--synthetic", str(synth_json), "--output-dir", str(out)]) == 0
    body = json.loads((out / "scan_profile.json").read_text())
    assert body["profile"]["equivalence_interval"] == [175000.0, 250000.0]
    meta = body["metadata"]
    assert meta["tau_convention"] == "left-inclusive"
    assert meta["seed"] == 11
    assert meta["solver"]["ols"]["rank_rtol"] == 1e-10
    rows = _read_csv(out / "scan_profile.csv")
    assert [float(r["tau"]) for r in rows] == [c["tau"] for c in body["profile"]["candidates"]]
    assert [float(r["objective"]) for r in rows] == [c["objective"] for c in body["profile"]["candidates"]]


def test_scan_from_csv_input(tmp_path, data_csv):
    out = tmp_path / "out"
    assert main(["scan", "--input", str(data_csv), "--output-dir", str(out), "--format", "json"]) == 0
    assert not (out / "scan_profile.csv").exists()
    body = json.loads((out / "scan_profile.json").read_text())
    assert body["profile"]["argmin"] == 175000.0


def test_fit_auto_matches_explicit(tmp_path, data_csv):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["fit", "--input", str(data_csv), "--tau", "auto", "--output-dir", str(a)]) == 0
    assert main(["fit", "--input", str(data_csv), "--tau", "175000", "--output-dir", str(b)]) == 0
    fa = json.loads((a / "fit.json").read_text())["fits"][0]
    fb = json.loads((b / "fit.json").read_text())["fits"][0]
    assert fa == fb


def test_fit_csv_matches_json(tmp_path, data_csv):
    out = tmp_path / "out"
    assert main(["fit", "--input", str(data_csv), "--tau", "100000", "--se", "hc1",
                 "--output-dir", str(out)]) == 0
    body = json.loads((out / "fit.json").read_text())
    assert body["metadata"]["se_flavor"] == "hc1"
    fit = body["fits"][0]
    rows = _read_csv(out / "fit.csv")
    for row in rows:
        assert float(row["estimate"]) == fit["coefficients"][row["coef"]]
        assert float(row["std_error"]) == fit["std_errors"][row["coef"]]
        assert float(row["t_stat"]) == fit["t_stats"][row["coef"]]
    plot = _read_csv(out / "fit_plot.csv")
    assert len(plot) == len(fit["plot"]) == 15
    assert [float(r["fitted"]) for r in plot] == [pt["fitted"] for pt in fit["plot"]]
    assert sum(pt["count"] for pt in fit["plot"]) == fit["n_left"] + fit["n_right"]


def test_fit_quantile_battery(tmp_path, data_csv):
    out = tmp_path / "out"
    rc = main(["fit", "--input", str(data_csv), "--tau", "100000", "--estimator", "quantile",
               "--p", "0.15,0.30,0.50,0.70,0.85", "--output-dir", str(out)])
    assert rc == 0
    fits = json.loads((out / "fit.json").read_text())["fits"]
    assert [f["estimator"] for f in fits] == [
        "quantile(0.15)", "quantile(0.3)", "quantile(0.5)", "quantile(0.7)", "quantile(0.85)"
    ]
    assert all(f["dependent"] == "raw" for f in fits)
    assert len(_read_csv(out / "fit.csv")) == 20


def test_groups_command(tmp_path, data_csv):
    out = tmp_path / "out"
    assert main(["groups", "--input", str(data_csv), "--statistic", "quantile", "--p", "0.3",
                 "--output-dir", str(out)]) == 0
    rows = _read_csv(out / "groups.csv")
    assert list(rows[0]) == ["income", "stat", "count"]
    assert len(json.loads((out / "groups.json").read_text())) == len(rows)


def test_simulate_command(tmp_path):
    out = tmp_path / "out"
    rc = main(["simulate", "--noise-sd", "0", "--n", "300", "--reps", "3", "--seed", "4",
               "--output-dir", str(out)])
    assert rc == 0
    report = json.loads((out / "simulate.json").read_text())["report"]
    assert report["recovery_rate"] == 1.0
    assert abs(report["mean"]["b"]["bias"]) < 1e-8
    assert len(_read_csv(out / "simulate.csv")) == 4


def test_replicate_bundle(tmp_path, data_csv):
    out = tmp_path / "out"
    assert main(["replicate", "--input", str(data_csv), "--output-dir", str(out)]) == 0
    body = json.loads((out / "replicate_fits.json").read_text())
    panels = [(f["panel"], f["estimator"]) for f in body["fits"]]
    assert panels[:2] == [("tau=100000", "mean"), ("tau=175000", "mean")]
    assert len(panels) == 12
    assert body["scan"]["equivalence_interval"] == [175000.0, 250000.0]


@pytest.mark.parametrize(
    "argv",
    [
        ["scan", "--input", "/nonexistent/file.csv"],
        ["fit", "--input", "/nonexistent/file.csv", "--tau", "1e5"],
        ["fit", "--synthetic", "/nonexistent/cfg.json", "--tau", "1e5"],
    ],
)
def test_missing_input_exit_2(tmp_path, argv):
    assert main(argv + ["--output-dir", str(tmp_path)]) == 2


def test_bad_schema_exit_2(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("inc,wb\n15000,1\n")
    assert main(["scan", "--input", str(path), "--output-dir", str(tmp_path)]) == 2
    assert main(["scan", "--input", str(path), "--income-col", "inc", "--wellbeing-col", "wb",
                 "--output-dir", str(tmp_path)]) == 2


def test_argparse_errors_exit_2(tmp_path, data_csv):
    with pytest.raises(SystemExit) as exc:
        main(["fit", "--input", str(data_csv), "--tau", "cheap"])
    assert exc.value.code == 2


def test_estimation_failure_exit_3(tmp_path, data_csv, capsys):
    rc = main(["fit", "--input", str(data_csv), "--tau", "10000", "--output-dir", str(tmp_path)])
    assert rc == 3
    assert "estimation error" in capsys.readouterr().err
