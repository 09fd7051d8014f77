#!/usr/bin/env python3
"""
Tests for scenario loading, merging and validation.
"""

import json

import pytest
import yaml

from core.config import ConfigManager, SimConfig, load_sim_config
from core.exceptions import ConfigurationError, ValidationError
from core.models import BestEffortMode, SchedulerKind, TrafficClass, VideoMode


def test_defaults(default_config):
    s = default_config.system
    assert s.n0 == pytest.approx(1.2589e-20, rel=1e-4)
    assert s.subchannel_bw == pytest.approx(312500)
    assert s.fast_block_frames == 5
    assert s.slow_block_frames == 300
    assert s.scheduler is SchedulerKind.DRA
    assert s.video_mode is VideoMode.FIXED
    assert s.user_count(TrafficClass.STREAMING) == 20
    assert default_config.be.mode is BestEffortMode.FULL_BUFFER
    assert default_config.voip.profile.delay_weight == pytest.approx(13.0103, rel=1e-4)
    assert default_config.be.profile.r_max == float("inf")
    assert len(s.mcs_table) == 9


def test_partial_file_merges_over_defaults(tmp_path):
    path = tmp_path / "scenario.yaml"
    path.write_text(yaml.safe_dump({"name": "short", "system": {"n_frames": 500}}), encoding="utf-8")
    config = load_sim_config(path)
    assert config.name == "short"
    assert config.system.n_frames == 500
    assert config.system.bandwidth_hz == 10e6
    assert config.video.profile.r0 == 128000.0


def test_json_scenarios(tmp_path):
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps({"system": {"seed": 42}}), encoding="utf-8")
    assert load_sim_config(path).system.seed == 42


def test_missing_and_malformed_files(tmp_path):
    with pytest.raises(ConfigurationError):
        load_sim_config(tmp_path / "nope.yaml")
    bad = tmp_path / "bad.yaml"
    bad.write_text("system: [1, 2\n", encoding="utf-8")
    with pytest.raises(ConfigurationError):
        load_sim_config(bad)
    scalar = tmp_path / "scalar.yaml"
    scalar.write_text("42\n", encoding="utf-8")
    with pytest.raises(ConfigurationError):
        load_sim_config(scalar)


def test_schema_version_check(tmp_path):
    path = tmp_path / "future.yaml"
    path.write_text("schema_version: '2.0'\n", encoding="utf-8")
    with pytest.raises(ConfigurationError):
        load_sim_config(path)
    path.write_text("schema_version: '1.3'\n", encoding="utf-8")
    assert load_sim_config(path).system.n_frames == 60000


def test_dot_path_access():
    manager = ConfigManager()
    data = {"system": {"seed": 1}}
    manager.set_config_value(data, "system.users.voip", 5)
    assert manager.get_config_value(data, "system.users.voip") == 5
    assert manager.get_config_value(data, "system.missing", "fallback") == "fallback"


def test_with_overrides_returns_new_config(default_config):
    changed = default_config.with_overrides(system__seed=7, scheduling__data_fraction=0.5)
    assert changed.system.seed == 7
    assert changed.scheduling.data_fraction == 0.5
    assert default_config.system.seed == 1
    assert changed.to_dict()["system"]["seed"] == 7


@pytest.mark.parametrize("key,value", [
    ("system__users", {"voip": 3, "video": 0, "be": 0}),
    ("system__users", {"voip": -5, "video": 0, "be": 0}),
    ("system__users", {"fax": 5}),
    ("system__distances_km", [0.3, 2.0]),
    ("system__distances_km", []),
    ("system__beta", 0.0),
    ("system__scheduler", "round_robin"),
    ("system__mcs_table", [{"threshold_db": 5.0, "efficiency": 2.0}, {"threshold_db": 3.0, "efficiency": 3.0}]),
    ("traffic__voip__alpha", 1.0),
    ("traffic__video__pareto_shape", 1.0),
    ("traffic__video__increase_below", 0.5),
    ("scheduling__data_fraction", 0.0),
    ("solver__tolerance", 0.0),
    ("advanced__log_level", "CHATTY"),
])
def test_invalid_values_rejected(default_config, key, value):
    with pytest.raises(ValidationError):
        default_config.with_overrides(**{key: value})


def test_save_and_reload(tmp_path, default_config):
    manager = ConfigManager()
    path = tmp_path / "saved.yaml"
    raw = default_config.with_overrides(system__seed=11).to_dict()
    manager.save_config(raw, path)
    reloaded = SimConfig.from_dict(manager.load_config(path))
    assert reloaded.system.seed == 11
    assert reloaded.system.distances_km == default_config.system.distances_km


@pytest.mark.parametrize("level", ["debug", "WARNING", "critical"])
def test_known_log_levels_accepted(default_config, level):
    assert default_config.with_overrides(advanced__log_level=level).log_level == level.upper()
