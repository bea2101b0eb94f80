import json

import numpy as np
import pytest

from curveprob.curves import Curve, Grid
from curveprob.harness.cli import main
from curveprob.harness.io import load_curves, save_curves


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture
def series_csv(tmp_path):
    path = tmp_path / "series.csv"
    assert run("simulate", "--dgp", "far_paparoditis", "--n", 40, "--grid-d", 20,
               "--seed", 3, "--out", path) == 0
    return path


@pytest.fixture
def model_json(tmp_path, series_csv):
    path = tmp_path / "model.json"
    assert run("fit", "--series", series_csv, "--ar-order", 1,
               "--truncation", "pve:0.85", "--out", path) == 0
    return path


@pytest.fixture
def x_csv(tmp_path, series_csv):
    path = tmp_path / "x.csv"
    save_curves([load_curves(series_csv)[-1]], path)
    return path


class TestWorkflow:
    def test_fit_writes_versioned_model(self, model_json):
        doc = json.loads(model_json.read_text())
        assert doc["format"] == "curveprob-flm"
        assert doc["version"] == 1

    def test_estimate_boot_and_gauss(self, tmp_path, model_json, x_csv):
        out = tmp_path / "est.json"
        assert run("estimate", "--model", model_json, "--x", x_csv,
                   "--event", "level:alpha=0.5,z=0.5", "--method", "boot",
                   "--out", out) == 0
        boot = json.loads(out.read_text())
        assert 0.0 <= boot["value"] <= 1.0 and boot["method"] == "boot"

        assert run("estimate", "--model", model_json, "--x", x_csv,
                   "--event", "level:alpha=0.5,z=0.5", "--method", "gauss",
                   "--mc", 500, "--seed", 11, "--out", out) == 0
        gauss = json.loads(out.read_text())
        assert gauss["n_used"] == 500 and gauss["status"] == "ok"

    def test_quantile(self, tmp_path, model_json, x_csv):
        out = tmp_path / "q.json"
        assert run("quantile", "--model", model_json, "--x", x_csv,
                   "--family", "max-below:lo=-5,hi=5", "--p", 0.5,
                   "--method", "boot", "--out", out) == 0
        doc = json.loads(out.read_text())
        assert -5.0 <= doc["quantile"] <= 5.0

    def test_band(self, tmp_path, model_json, x_csv, capsys):
        out = tmp_path / "band.csv"
        assert run("band", "--model", model_json, "--x", x_csv,
                   "--nominal", 0.9, "--method", "boot", "--out", out) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["lower_quantile"] <= payload["upper_quantile"]
        center, floor, ceil = load_curves(out)
        assert np.all(floor.values <= ceil.values)

    def test_baseline_commands(self, tmp_path, series_csv, x_csv):
        out = tmp_path / "b.json"
        assert run("baseline", "nw", "--train-series", series_csv, "--x", x_csv,
                   "--event", "extremal:d=0.0", "--bandwidth", 1.0, "--out", out) == 0
        assert 0.0 <= json.loads(out.read_text())["value"] <= 1.0
        assert run("baseline", "glm", "--train-series", series_csv, "--x", x_csv,
                   "--event", "extremal:d=0.0", "--components", 2, "--out", out) == 0
        assert 0.0 < json.loads(out.read_text())["value"] < 1.0

    def test_deseasonalize_runs(self, tmp_path):
        g = Grid(8)
        n = 42
        series = [Curve.constant(g, 5.0 + (k % 7)) for k in range(n)]
        series_path = tmp_path / "daily.csv"
        save_curves(series, series_path)
        (tmp_path / "doy.csv").write_text("\n".join(str(k) for k in range(n)))
        (tmp_path / "dow.csv").write_text("\n".join(str(k % 7) for k in range(n)))
        out = tmp_path / "adj.csv"
        assert run("deseasonalize", "--series", series_path,
                   "--doy", tmp_path / "doy.csv", "--dow", tmp_path / "dow.csv",
                   "--out", out) == 0
        for c in load_curves(out):
            assert np.max(np.abs(c.values)) <= 1e-8


class TestExperimentCommands:
    def test_coverage_exp_writes_csv(self, tmp_path):
        out = tmp_path / "cov.csv"
        assert run("coverage-exp", "--n", 30, "--reps", 5, "--grid-d", 20,
                   "--mc", 200, "--seed", 5, "--out", out) == 0
        text = out.read_text()
        assert "# kind=coverage" in text
        assert "boot" in text and "gauss" in text

    def test_rmse_exp_json(self, tmp_path):
        out = tmp_path / "rmse.json"
        assert run("rmse-exp", "--n", 30, "--predictors", 3, "--reps", 3,
                   "--grid-d", 20, "--oracle-size", 300, "--mc", 200,
                   "--methods", "boot", "--seed", 2, "--out", out) == 0
        doc = json.loads(out.read_text())
        assert doc["kind"] == "rmse"
        assert "median_rmse_boot" in doc["summary"]

    def test_entropy_eval_runs(self, tmp_path):
        grid = Grid(8)
        rng = np.random.default_rng(4)
        n = 90
        base = 50.0 + 8.0 * np.sin(2 * np.pi * np.arange(n) / 30)
        series = [Curve(grid, b + 4.0 * rng.normal(size=grid.size)) for b in base]
        wind = [Curve(grid, rng.normal(size=grid.size)) for _ in range(n)]
        series_path = tmp_path / "price.csv"
        wind_path = tmp_path / "wind.csv"
        save_curves(series, series_path)
        save_curves(wind, wind_path)
        (tmp_path / "doy.csv").write_text("\n".join(str(k) for k in range(n)))
        (tmp_path / "dow.csv").write_text("\n".join(str(k % 7) for k in range(n)))
        out = tmp_path / "entropy.csv"
        assert run("entropy-eval", "--response", series_path,
                   "--exog", f"{wind_path}:no-weekly",
                   "--doy", tmp_path / "doy.csv", "--dow", tmp_path / "dow.csv",
                   "--ar-order", 2, "--alphas", "45,55", "--zs", "0.25,0.5",
                   "--methods", "boot,glm,nw", "--mc", 200, "--seed", 9,
                   "--out", out) == 0
        lines = [ln for ln in out.read_text().splitlines() if ln and not ln.startswith("#")]
        assert len(lines) == 1 + 2 * 2 * 3  # header + alphas x zs x methods


class TestDeterminism:
    def test_coverage_exp_rerun_is_byte_identical(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for out in (a, b):
            assert run("coverage-exp", "--n", 25, "--reps", 4, "--grid-d", 16,
                       "--mc", 100, "--seed", 77, "--out", out) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_simulate_rerun_is_byte_identical(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for out in (a, b):
            assert run("simulate", "--dgp", "far_synthetic", "--n", 12,
                       "--grid-d", 16, "--seed", 123, "--out", out) == 0
        assert a.read_bytes() == b.read_bytes()


class TestExitCodes:
    def test_usage_error_is_2(self, tmp_path, model_json, x_csv):
        assert run("estimate", "--model", model_json, "--x", x_csv,
                   "--event", "bogus:alpha=1", "--method", "boot") == 2

    def test_degenerate_input_is_3(self, tmp_path):
        g = Grid(8)
        flat = [Curve.constant(g, 1.0) for _ in range(10)]
        path = tmp_path / "flat.csv"
        save_curves(flat, path)
        assert run("fit", "--series", path, "--truncation", "pve:0.85",
                   "--out", tmp_path / "m.json") == 3

    def test_missing_subcommand_is_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            run()
        assert exc.value.code == 2
