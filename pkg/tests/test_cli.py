import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from cpci.cli import fit_calibration, main, read_table
from cpci.config import ConfigError, RunConfig, load_config
from cpci.core import cpci_predict
from cpci.data import Dataset
from cpci.reporting import read_csv
from cpci.serialization import load_calibration
from cpci.simulation import AGGREGATE_COLUMNS, ScenarioSpec, generate

from uci_fixture import write_uci


def test_load_config_file_and_overrides(tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text("scenario: [linear, nonlinear]\nn: 1000\nreps: 7\nmethod: VCI,CPCI\nseed: 3\n")
    cfg = load_config(path, {"reps": "9", "alpha": None})
    assert cfg.scenario == ("linear", "nonlinear") and cfg.n == (1000,) and cfg.reps == 9
    assert cfg.method == ("VCI", "CPCI") and cfg.alpha == 0.9 and cfg.seed == 3


def test_config_errors(tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text("reps: 5\nbogus: 1\n")
    with pytest.raises(ConfigError, match="bogus"):
        load_config(path)
    path.write_text("reps: {a: 1}\n")
    with pytest.raises(ConfigError):
        load_config(path)
    for bad in ({"reps": "0"}, {"method": "FOO"}, {"c_const": "1"}, {"alpha": "1.5"}, {"n": "50"}, {"plot": "maybe"}):
        with pytest.raises(ConfigError):
            load_config(None, bad).validate()


def test_provenance_omits_output_only_keys():
    d = RunConfig().as_dict(results_only=True)
    assert "out" not in d and "workers" not in d and "seed" in d


def run_cli(*args):
    return main([str(a) for a in args])


def test_simulate_twice_identical(tmp_path, capsys):
    for name in ("a", "b"):
        assert run_cli("simulate", "--n", 400, "--reps", 3, "--seed", 7, "--method", "VCI,CPCI", "--out", tmp_path / name) == 0
    for f in ("records.csv", "aggregate.csv"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
    rows = read_csv(tmp_path / "a" / "records.csv")
    assert len(rows) == 6
    agg = read_csv(tmp_path / "a" / "aggregate.csv", AGGREGATE_COLUMNS)
    for row in agg:
        cov = [float(r["coverage"]) for r in rows if r["method"] == row["method"]]
        assert float(row["coverage_mean"]) == pytest.approx(np.mean(cov), abs=1e-15)


def test_simulate_config_file_and_plot(tmp_path):
    cfg = tmp_path / "run.yaml"
    cfg.write_text(f"n: [400, 800]\nreps: 2\nmethod: [VCI, CPCI]\nout: {tmp_path / 'o'}\nplot: true\n")
    assert run_cli("simulate", "--config", cfg) == 0
    assert (tmp_path / "o" / "summary.svg").is_file()
    assert "# config:" in (tmp_path / "o" / "records.csv").read_text()


def test_simulate_rejects_zero_reps(tmp_path, capsys):
    assert run_cli("simulate", "--reps", 0, "--out", tmp_path) != 0
    assert "reps" in capsys.readouterr().err


def write_table(path, X, y=None, ids=None):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow((["id"] if ids is not None else []) + [f"x{j}" for j in range(X.shape[1])] + (["y"] if y is not None else []))
        for i in range(X.shape[0]):
            w.writerow(([ids[i]] if ids is not None else []) + [repr(float(v)) for v in X[i]] + ([repr(float(y[i]))] if y is not None else []))


def test_fit_predict_round_trip(tmp_path, capsys):
    data = generate(ScenarioSpec("linear", n=2000, n_test=300), np.random.default_rng(2))
    train = tmp_path / "train.csv"
    write_table(train, data.X[:2000], data.y[:2000])
    feats = tmp_path / "feats.csv"
    write_table(feats, data.X[2000:], ids=[f"r{i}" for i in range(300)])
    assert run_cli("fit", train, "--out", tmp_path / "cal.json", "--seed", 5) == 0
    assert run_cli("predict", tmp_path / "cal.json", feats, "--out", tmp_path / "pred.csv") == 0
    cal, _ = load_calibration(tmp_path / "cal.json")
    _, _, X, _ = read_table(feats, require_y=False)
    sets = cpci_predict(X, cal)
    rows = list(csv.reader((tmp_path / "pred.csv").open()))
    assert rows[0] == ["id", "set_kind", "lo", "hi"]
    for row, s in zip(rows[1:], sets):
        if row[1] == "zero":
            assert row[2:] == ["", ""] and s.kind == 0
        else:
            assert row[1] == "interval" and (float(row[2]), float(row[3])) == (s.lo, s.hi)
    assert any(r[1] == "zero" for r in rows[1:])
    # the fitted calibration equals an in-process fit with the same settings
    _, _, Xt, yt = read_table(train, require_y=True)
    direct = fit_calibration(Dataset(Xt, yt), load_config(None, {"seed": "5"}))
    assert cpci_predict(X, direct) == sets


def test_predict_errors(tmp_path, capsys):
    data = generate(ScenarioSpec("linear", n=400, n_test=10), np.random.default_rng(3))
    write_table(tmp_path / "train.csv", data.X[:400], data.y[:400])
    assert run_cli("fit", tmp_path / "train.csv", "--out", tmp_path / "cal.json") == 0
    doc = json.loads((tmp_path / "cal.json").read_text())
    doc["version"] = 99
    (tmp_path / "old.json").write_text(json.dumps(doc))
    write_table(tmp_path / "f.csv", data.X[400:])
    assert run_cli("predict", tmp_path / "old.json", tmp_path / "f.csv") == 2
    assert "version" in capsys.readouterr().err
    write_table(tmp_path / "f3.csv", data.X[400:, :3])
    assert run_cli("predict", tmp_path / "cal.json", tmp_path / "f3.csv") == 2
    (tmp_path / "t.csv").write_text("x0,x1\n1,2\n")
    assert run_cli("fit", tmp_path / "t.csv") == 2


def test_plot_command(tmp_path):
    empty = tmp_path / "agg.csv"
    empty.write_text(",".join(AGGREGATE_COLUMNS) + "\n")
    assert run_cli("plot", empty, "--out", tmp_path / "e.svg") == 0
    assert (tmp_path / "e.svg").read_text().count('<g id="axes_') == 4
    bad = tmp_path / "bad.csv"
    bad.write_text("method\nVCI\n")
    assert run_cli("plot", bad, "--out", tmp_path / "b.svg") == 2


def test_airquality_command(tmp_path):
    path = tmp_path / "AirQualityUCI.csv"
    write_uci(path, n=800, seed=9)
    out = tmp_path / "aq"
    assert run_cli("airquality", path, "--reps", 2, "--tolerance-quantile", "0.4,0.7", "--method", "VCI,CPCI,CLASS-COND", "--out", out) == 0
    rows = read_csv(out / "records.csv")
    assert {r["scenario"] for r in rows} == {"airquality-q0.4", "airquality-q0.7"} and len(rows) == 12
    assert run_cli("airquality", tmp_path / "missing.csv", "--out", out) == 1


def test_console_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "cpci.cli", "simulate", "--reps", "0"], capture_output=True, text=True)
    assert res.returncode != 0 and "reps" in res.stderr
