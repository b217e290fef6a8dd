#!/usr/bin/env python3
"""
Test config loader (.env substitution) và SettingsManager defaults
"""

import os
import sys
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import pytest

from modules import config_loader
from modules.bench import BenchConfig
from modules.config_loader import DEFAULT_CONFIG_PATH, load_config_with_env, replace_env_recursive
from modules.errors import ConfigurationError
from modules.settings_manager import DEFAULTS, SettingsManager, get_settings_manager


def test_env_substitution(monkeypatch):
    monkeypatch.setenv('PCC_TEST_DIR', '/data/runs')
    monkeypatch.delenv('PCC_TEST_MISSING', raising=False)
    config = replace_env_recursive({
        'out': '${PCC_TEST_DIR}/bench',
        'list': ['${PCC_TEST_DIR}', 3],
        'missing': 'x${PCC_TEST_MISSING}y',
    })
    assert config == {'out': '/data/runs/bench', 'list': ['/data/runs', 3], 'missing': 'xy'}


def test_default_config_file_loads():
    config = load_config_with_env()
    assert DEFAULT_CONFIG_PATH.exists()
    assert set(config) == set(DEFAULTS)


def test_missing_or_broken_config(tmp_path):
    with pytest.raises(ConfigurationError):
        load_config_with_env(tmp_path / 'nope.yaml')
    broken = tmp_path / 'broken.yaml'
    broken.write_text("codec: [1, 2\n")
    with pytest.raises(ConfigurationError):
        load_config_with_env(broken)
    with pytest.raises(ConfigurationError):
        SettingsManager(tmp_path / 'nope.yaml')


def test_partial_config_uses_defaults(tmp_path, monkeypatch):
    monkeypatch.setenv('PCC_TEST_SEED', '41')
    path = tmp_path / 'config.yaml'
    path.write_text("codec:\n  depth: 5\n  seed: ${PCC_TEST_SEED}\n  colour: red\ntrain:\n  lr: 0.01\n")
    settings = SettingsManager(path)
    codec = settings.get_codec_config()
    assert codec['depth'] == 5 and codec['seed'] == 41
    assert codec['p_bits'] == DEFAULTS['codec']['p_bits']
    assert 'colour' not in codec
    assert settings.get_train_config()['lr'] == 0.01
    assert settings.get_bench_config()['batches'] == [1, 10, 100]
    assert settings.model_path_for(5) == 'models/cvae_d5.bin'


def test_section_must_be_mapping(tmp_path):
    path = tmp_path / 'config.yaml'
    path.write_text("bench: [1, 2]\n")
    with pytest.raises(ConfigurationError):
        SettingsManager(path).get_bench_config()


def test_singleton_reloads_on_explicit_path(tmp_path):
    path = tmp_path / 'config.yaml'
    path.write_text("dataset:\n  clouds: 12\n")
    first = get_settings_manager(path)
    assert get_settings_manager() is first
    assert first.get_dataset_config()['clouds'] == 12
    assert get_settings_manager(DEFAULT_CONFIG_PATH) is not first


def test_bench_config_from_settings(tmp_path):
    path = tmp_path / 'config.yaml'
    path.write_text("codec:\n  p_bits: 10\nbench:\n  batches: [100, 1]\n")
    config = BenchConfig.from_settings(SettingsManager(path), clouds=9, depth=None)
    assert config.p_bits == 10 and config.clouds == 9
    assert config.batches == [1, 100]
    assert config.depth == DEFAULTS['codec']['depth']


def test_config_loader_exports():
    assert all(hasattr(config_loader, name) for name in config_loader.__all__)
    assert not hasattr(config_loader, 'get_env')
