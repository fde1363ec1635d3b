from __future__ import annotations

from pathlib import Path

import pytest
from confz import EnvSource

from mlrn.cli.session import RunSession
from mlrn.config import MetricConfig, RuntimeConfig
from mlrn.create_config import ConfigError, load_run_config, parse_overrides
from mlrn.json_utils import write_json


def test_parse_overrides_builds_nested_json_values():
    assert parse_overrides(
        ["model.g=8", "model.use_gff=false", "data.hr_dir=/data/DIV2K/HR"]
    ) == {"model": {"g": 8, "use_gff": False}, "data": {"hr_dir": "/data/DIV2K/HR"}}


@pytest.mark.parametrize(
    "items", [["model.g"], ["=3"], ["model.g=1", "model.g.x=2"]]
)
def test_parse_overrides_rejects_malformed_items(items):
    with pytest.raises(ConfigError):
        parse_overrides(items)


def test_file_values_are_overridden_from_the_command_line(tmp_path):
    config_file = tmp_path / "run.json"
    write_json(
        config_file,
        {
            "model": {"g": 16, "n_blocks": 4, "scale": 3},
            "train": {"patch_hr": 96},
            "data": {"hr_dir": "train/HR"},
        },
    )
    run = load_run_config(config_file, ["model.g=8", "train.seed=5"])
    assert run.model.g == 8
    assert run.model.n_blocks == 4
    assert run.model.scale == 3
    assert run.train.seed == 5
    assert run.train.lr0 == pytest.approx(1e-4)
    assert run.data.hr_dir == Path("train/HR")


def test_overrides_alone_are_enough():
    run = load_run_config(None, ["data.hr_dir=images"])
    assert run.model.g == 32
    assert run.metric.channel_mode == "y"


@pytest.mark.parametrize(
    "overrides",
    [
        [],
        ["data.hr_dir=x", "model.width=3"],
        ["data.hr_dir=x", "model.scale=5"],
        ["data.hr_dir=x", "model.scale=3", "train.patch_hr=64"],
        ["data.hr_dir=x", "train.beta1=1.0"],
    ],
)
def test_invalid_configurations_raise_config_error(overrides):
    with pytest.raises(ConfigError):
        load_run_config(None, overrides)


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError, match="does not exist"):
        load_run_config(tmp_path / "absent.json")


def test_metric_shave_defaults_to_scale():
    assert MetricConfig().shave_for(3) == 3
    assert MetricConfig(shave=0).shave_for(3) == 0


def test_runtime_threads_from_environment(monkeypatch):
    monkeypatch.setenv("MLRN_THREADS", "3")
    with RuntimeConfig.change_config_sources(EnvSource(prefix="MLRN_", allow_all=True)):
        assert RuntimeConfig().threads == 3


def test_echoed_config_loads_back_unchanged(tmp_path):
    run = load_run_config(
        None,
        [
            "data.hr_dir=train/HR",
            "data.mean_rgb=[110.5, 112.0, 99.25]",
            "model.scale=3",
            "model.use_gff=false",
            "train.patch_hr=48",
            "metric.boundary=antisymmetric",
        ],
    )
    with RunSession(tmp_path / "run", "train", run.model_dump(mode="json")) as session:
        echoed = session.config_path
    assert load_run_config(echoed) == run
