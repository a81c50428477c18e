"""Tests for YAML configuration loading and validation."""

import os
from pathlib import Path

import pytest
import yaml

from src.config.constants import GRID_POINTS, THREADS_ENV_VAR
from src.config.settings import RunConfig, load_config, resolve_threads
from src.utils.errors import ConfigError

CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"


def write_config(tmp_path, data, name="run.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(data), encoding="utf-8")
    return str(path)


@pytest.fixture(autouse=True)
def no_thread_env(monkeypatch):
    monkeypatch.delenv(THREADS_ENV_VAR, raising=False)


class TestLoading:
    def test_defaults_without_file(self):
        config = load_config()
        assert isinstance(config, RunConfig)
        assert config.model.preset == "natural-scale"
        assert config.grid.points == GRID_POINTS
        assert config.threads == 1

    def test_sections_and_tuples(self, tmp_path):
        path = write_config(tmp_path, {
            "model": {"truncation": [-2, 2]},
            "value": {"points": [[0, 0, 0], [-1, -0.5, 0.5]]},
            "simulation": {"start": [0, 0, 0], "seed": 3},
        })
        config = load_config(path)
        assert config.model.truncation == (-2.0, 2.0)
        assert config.value.points == ((0.0, 0.0, 0.0), (-1.0, -0.5, 0.5))
        assert config.simulation.seed == 3

    def test_to_dict_is_plain(self, tmp_path):
        config = load_config(write_config(tmp_path, {"model": {"truncation": [-2, 2]}}))
        data = config.to_dict()
        assert data["model"]["truncation"] == [-2.0, 2.0]
        assert data["simulation"]["start"] == [0.0, 0.0, 0.0]

    def test_overrides(self, tmp_path):
        path = write_config(tmp_path, {"simulation": {"seed": 3}, "output_dir": "somewhere"})
        config = load_config(path, seed=11, threads=2, output_dir=str(tmp_path / "out"))
        assert config.simulation.seed == 11
        assert config.threads == 2
        assert config.output_dir == str(tmp_path / "out")

    def test_relative_table_resolved_against_config(self, tmp_path):
        (tmp_path / "cost.csv").write_text("x,c1,c2\n0,1,2\n", encoding="utf-8")
        path = write_config(tmp_path, {"cost": {"kind": "separable", "table_file": "cost.csv"}})
        config = load_config(path)
        assert config.cost.table_file == str(tmp_path / "cost.csv")


class TestRejections:
    @pytest.mark.parametrize("data, message", [
        ({"grid": {"points": 1}}, "grid.points"),
        ({"grid": {"pionts": 9}}, "unknown keys"),
        ({"extras": {}}, "unknown top-level"),
        ({"model": {"preset": "heston"}}, "unknown model preset"),
        ({"model": {"truncation": [2, -2]}}, "increasing"),
        ({"cost": {"kind": "quadratic"}}, "unknown cost kind"),
        ({"cost": {"c": 0}}, "cost.c"),
        ({"cost": {"kind": "general"}}, "table_file"),
        ({"simulation": {"rule": "never"}}, "unknown rule"),
        ({"simulation": {"start": [0, 0]}}, "3 entries"),
        ({"value": {"surfaces_file": "missing.csv"}}, "not found"),
        ({"validation": {"dp_space_steps": 51}}, "dp_space_steps"),
    ])
    def test_invalid_values(self, tmp_path, data, message):
        with pytest.raises(ConfigError, match=message):
            load_config(write_config(tmp_path, data))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            load_config(str(tmp_path / "absent.yaml"))

    def test_malformed_yaml(self, tmp_path):
        path = tmp_path / "broken.yaml"
        path.write_text("model: [unclosed\n", encoding="utf-8")
        with pytest.raises(ConfigError, match="not valid YAML"):
            load_config(str(path))

    def test_top_level_must_be_mapping(self, tmp_path):
        path = tmp_path / "list.yaml"
        path.write_text("- 1\n- 2\n", encoding="utf-8")
        with pytest.raises(ConfigError, match="mapping"):
            load_config(str(path))


class TestThreads:
    def test_cli_value_wins(self, monkeypatch):
        monkeypatch.setenv(THREADS_ENV_VAR, "5")
        assert resolve_threads(2, fallback=3) == 2

    def test_environment_before_file(self, monkeypatch):
        monkeypatch.setenv(THREADS_ENV_VAR, "5")
        assert resolve_threads(None, fallback=3) == 5

    def test_file_value_last(self):
        assert resolve_threads(None, fallback=3) == 3

    def test_zero_means_every_cpu(self):
        assert resolve_threads(0) == (os.cpu_count() or 1)

    def test_bad_environment(self, monkeypatch):
        monkeypatch.setenv(THREADS_ENV_VAR, "many")
        with pytest.raises(ConfigError, match=THREADS_ENV_VAR):
            resolve_threads(None)

    def test_negative(self):
        with pytest.raises(ConfigError):
            resolve_threads(-1)


class TestShippedConfigs:
    @pytest.mark.parametrize("name, preset", [
        ("natural_scale.yaml", "natural-scale"),
        ("bm_gaussian.yaml", "bm-gaussian"),
    ])
    def test_loads(self, name, preset):
        config = load_config(str(CONFIG_DIR / name))
        assert config.model.preset == preset
        assert config.grid.points == 257

    def test_value_points_of_natural_scale(self):
        config = load_config(str(CONFIG_DIR / "natural_scale.yaml"))
        assert config.value.points[0] == (0.0, 0.0, 0.0)
        assert len(config.value.points) == 4

    def test_value_points_must_be_a_list(self, tmp_path):
        with pytest.raises(ConfigError, match="value.points"):
            load_config(write_config(tmp_path, {"value": {"points": 5}}))
