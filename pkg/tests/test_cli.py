"""End-to-end tests of the batch commands on a small natural-scale run."""

import json

import numpy as np
import pandas as pd
import pytest
import yaml

from src.cli import main
from src.config.constants import (
    CONVERGENCE_FILE,
    EXIT_CONFIG_ERROR,
    EXIT_OK,
    REPORT_FILE,
    RESIDUALS_FILE,
    SURFACES_FILE,
    VALIDATION_FILE,
    VALUE_FILE,
)

SMALL_RUN = {
    "model": {"preset": "natural-scale", "truncation": [-2.0, 2.0]},
    "cost": {"kind": "constant", "c": 1.0},
    "grid": {"points": 9},
    "value": {"points": [[0.0, 0.0, 0.0], [-1.0, -0.9, 0.5]], "table_points": 9},
    "simulation": {"mode": "range", "rule": "range_threshold", "threshold": 0.5, "dt": 1.0e-3,
                   "horizon": 10.0, "n_paths": 200, "seed": 5},
    "validation": {"statistical": False, "dp_space_steps": 50},
}


def write_run(tmp_path, **changes):
    data = json.loads(json.dumps(SMALL_RUN))
    for section, values in changes.items():
        data.setdefault(section, {}).update(values)
    path = tmp_path / "run.yaml"
    path.write_text(yaml.safe_dump(data), encoding="utf-8")
    return str(path)


def run(tmp_path, command, config, *extra):
    out = tmp_path / "out"
    code = main([command, "--config", config, "--out", str(out), "--log-level", "WARNING", *extra])
    return code, out


class TestSurfacesCommand:
    def test_writes_closed_form_surfaces(self, tmp_path):
        code, out = run(tmp_path, "surfaces", write_run(tmp_path))
        assert code == EXIT_OK
        table = pd.read_csv(out / SURFACES_FILE)
        assert list(table.columns) == ["i", "s", "f_star", "g_star", "in_C0", "residual_f", "residual_g"]
        assert np.max(np.abs(table["f_star"] - np.minimum(table["i"] + 0.5, table["s"]))) < 1e-4
        assert np.max(np.abs(table["g_star"] - np.maximum(table["s"] - 0.5, table["i"]))) < 1e-4

        log = json.loads((out / CONVERGENCE_FILE).read_text(encoding="utf-8"))
        assert log["model"] == "natural-scale"
        assert log["grid_points"] == 9
        assert log["monotonicity_violations"] == 0
        assert log["config"]["grid"]["points"] == 9
        assert len(log["provenance"]["f_columns"]) == 8

    def test_empty_grid_is_a_config_error(self, tmp_path):
        code, out = run(tmp_path, "surfaces", write_run(tmp_path, grid={"points": 1}))
        assert code == EXIT_CONFIG_ERROR
        assert not (out / SURFACES_FILE).exists()

    def test_missing_config(self, tmp_path):
        code, _ = run(tmp_path, "surfaces", str(tmp_path / "absent.yaml"))
        assert code == EXIT_CONFIG_ERROR

    def test_missing_surfaces_file(self, tmp_path):
        code, _ = run(tmp_path, "value", write_run(tmp_path, value={"surfaces_file": "absent.csv"}))
        assert code == EXIT_CONFIG_ERROR

    def test_usage_error(self):
        assert main(["solve"]) == EXIT_CONFIG_ERROR
        assert main([]) == EXIT_CONFIG_ERROR


class TestValueCommand:
    def test_value_points_and_residuals(self, tmp_path):
        code, out = run(tmp_path, "value", write_run(tmp_path))
        assert code == EXIT_OK
        table = pd.read_csv(out / VALUE_FILE)
        assert table["region"].tolist() == ["C0", "Cminus"]
        assert table["value"].iloc[0] == pytest.approx(0.75, abs=1e-3)
        assert table["value"].iloc[1] == pytest.approx(1.66, abs=1e-6)
        residuals = json.loads((out / RESIDUALS_FILE).read_text(encoding="utf-8"))
        assert set(residuals) >= {"residuals", "sample_size", "fd_step", "coefficient_tables", "config"}

    def test_reuses_saved_surfaces(self, tmp_path):
        config = write_run(tmp_path)
        code, out = run(tmp_path, "surfaces", config)
        assert code == EXIT_OK
        reuse = write_run(tmp_path, value={"surfaces_file": str(out / SURFACES_FILE)})
        code, out = run(tmp_path, "value", reuse)
        assert code == EXIT_OK
        assert pd.read_csv(out / VALUE_FILE)["value"].iloc[1] == pytest.approx(1.66, abs=1e-6)


class TestSimulateCommand:
    def test_same_seed_same_report(self, tmp_path):
        config = write_run(tmp_path)
        code, out = run(tmp_path, "simulate", config)
        assert code == EXIT_OK
        first = (out / REPORT_FILE).read_bytes()
        code, out = run(tmp_path, "simulate", config)
        assert code == EXIT_OK
        assert (out / REPORT_FILE).read_bytes() == first
        report = json.loads(first)["report"]
        assert report["rule"] == "range_threshold(0.5)"
        assert report["seed"] == 5

    def test_seed_override(self, tmp_path):
        config = write_run(tmp_path)
        code, out = run(tmp_path, "simulate", config, "--seed", "6")
        assert code == EXIT_OK
        report = json.loads((out / REPORT_FILE).read_text(encoding="utf-8"))
        assert report["report"]["seed"] == 6
        assert report["config"]["simulation"]["seed"] == 6

    def test_detection_needs_observed_process(self, tmp_path):
        config = write_run(tmp_path, simulation={"mode": "detection"})
        code, _ = run(tmp_path, "simulate", config)
        assert code == EXIT_CONFIG_ERROR


class TestValidateCommand:
    def test_deterministic_checks(self, tmp_path, capsys):
        code, out = run(tmp_path, "validate", write_run(tmp_path))
        document = json.loads((out / VALIDATION_FILE).read_text(encoding="utf-8"))
        checks = {row["name"]: row for row in document["checks"]}
        for name in ("hitting_probabilities_sum", "green_symmetry", "expected_exit_time", "monotonicity",
                     "surface_recovery", "value_origin"):
            assert checks[name]["passed"], name
        assert "mc_optimality" not in checks
        assert code == (EXIT_OK if document["passed"] else 3)
        assert "surface_recovery" in capsys.readouterr().out
