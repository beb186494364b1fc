#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""Tests for `nvllc.config`."""

import os

import pytest
from path import Path as path

from nvllc import config as cfg
from nvllc import trace as tr
from nvllc.endurance import Policy
from nvllc.trace import TraceKind

_here = path(os.path.dirname(os.path.abspath(__file__)))


@pytest.fixture(scope="function")
def temp(request, tmpdir):
    template_dir = 'root'

    tmpdir = path(tmpdir)
    (_here / template_dir).copytree(tmpdir / template_dir)
    cwd = os.getcwd()
    temp = tmpdir / template_dir
    os.chdir(temp)

    def fin():
        os.chdir(cwd)
    request.addfinalizer(fin)
    return temp


class TestDefaults:

    def test_packaged_defaults(self):
        config = cfg.load_config()
        assert config.geometry.total_size == 4 << 20
        assert config.geometry.associativity == 16
        assert config.geometry.block_size == 64
        assert config.policy is Policy.CMP
        assert config.endurance.mu == 1e11
        assert config.endurance.sigma == pytest.approx(2e10)
        assert config.forecast.k == 8
        assert config.forecast.stop_fraction == 0.5
        assert config.forecast.epoch_window is None
        assert config.latencies.hit == 20
        assert config.latencies.miss_penalty == 180
        assert config.event_rate == 1e8
        assert config.trace_path is None
        return

    @pytest.mark.parametrize("text, size", [
        ("512", 512), ("2K", 2048), ("4M", 4 << 20), ("1GiB", 1 << 30), ("64B", 64),
    ])
    def test_parse_size(self, text, size):
        assert cfg.parse_size(text) == size
        return


class TestLoad:

    def test_file_is_layered_over_defaults(self, temp):
        config = cfg.load_config(temp / 'tiny.ini')
        assert config.geometry.set_count == 2
        assert config.endurance.mu == 300
        assert config.endurance.seed == 1
        assert config.forecast.k == 4
        assert config.forecast.epoch_window == 400
        assert config.trace.footprint == 2048
        assert config.forecast.wb_mode == "auto"
        return

    def test_seed_overrides_both_streams(self, temp):
        config = cfg.load_config(temp / 'tiny.ini', seed=42)
        assert config.endurance.seed == 42
        assert config.trace.seed == 42
        assert config.seed == 42
        return

    def test_overrides(self):
        config = cfg.load_config(overrides={"policy": {"name": "FD+6"}, "forecast": {"k": 2}})
        assert config.policy is Policy.FD6
        assert config.forecast.k == 2
        return

    def test_missing_file(self, temp):
        with pytest.raises(cfg.ConfigError):
            cfg.load_config(temp / 'nope.ini')
        return

    def test_relative_trace_path(self, temp):
        (temp / 'sub').mkdir()
        with open(temp / 'sub' / 'exp.ini', 'w') as handle:
            handle.write("[trace]\npath = ../hand.csv\n")
        config = cfg.load_config(temp / 'sub' / 'exp.ini')
        assert os.path.samefile(config.trace_path, temp / 'hand.csv')
        return

    def test_effective_config_reloads_identically(self, temp):
        config = cfg.load_config(temp / 'tiny.ini', seed=7)
        with open(temp / 'effective.ini', 'w') as handle:
            handle.write(config.to_ini())
        assert cfg.load_config(temp / 'effective.ini') == config
        return


class TestValidation:

    @pytest.mark.parametrize("overrides, field_name", [
        ({"trace": {"value_zeros": "0.5"}}, "trace.value_model"),
        ({"forecast": {"stop_fraction": "0"}}, "forecast.stop_fraction"),
        ({"forecast": {"stop_fraction": "1.5"}}, "forecast.stop_fraction"),
        ({"forecast": {"mode": "fast"}}, "forecast.mode"),
        ({"forecast": {"k": "0"}}, "forecast.k"),
        ({"cache": {"stride": "2"}}, "cache.stride"),
        ({"cache": {"associativity": "many"}}, "cache.associativity"),
        ({"policy": {"name": "FD+7"}}, "policy.name"),
        ({"trace": {"path": "missing.bin"}}, "trace.path"),
    ])
    def test_errors_name_the_field(self, overrides, field_name):
        with pytest.raises(cfg.ConfigError) as info:
            cfg.load_config(overrides=overrides)
        assert info.value.field == field_name
        return

    def test_trace_file_block_size_must_match(self, temp):
        events = [tr.TraceEvent(TraceKind.READ, 0x20), tr.TraceEvent(TraceKind.READ, 0x40)]
        tr.write_trace(temp / 'narrow.bin', events, block_size=32)
        with pytest.raises(cfg.ConfigError) as info:
            cfg.load_config(temp / 'tiny.ini', overrides={"trace": {"path": "narrow.bin"}})
        assert info.value.field == "trace.path"
        assert "block size 32" in str(info.value)
        return

    def test_truncated_trace_file(self, temp):
        with open(temp / 'short.bin', 'wb') as handle:
            handle.write(b"NV")
        with pytest.raises(cfg.ConfigError) as info:
            cfg.load_config(temp / 'tiny.ini', overrides={"trace": {"path": "short.bin"}})
        assert info.value.field == "trace.path"
        return

    def test_matching_trace_file(self, temp):
        tr.write_trace(temp / 'trace.bin', [tr.TraceEvent(TraceKind.READ, 0x40)])
        config = cfg.load_config(temp / 'tiny.ini', overrides={"trace": {"path": "trace.bin"}})
        assert os.path.samefile(config.trace_path, temp / 'trace.bin')
        return

    def test_stop_fraction_one_is_valid(self):
        config = cfg.load_config(overrides={"forecast": {"stop_fraction": "1.0"}})
        assert config.forecast.stop_fraction == 1.0
        return

    def test_with_policy(self):
        config = cfg.load_config().with_policy("ECP6")
        assert config.policy is Policy.FD6
        return
