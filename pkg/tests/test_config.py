from pathlib import Path

import pytest

from config import (CONFIGURATIONS, RunConfig, default_field_timesteps, default_snapshot_steps, load_settings,
                    parse_grid, rng_for, setup_logging)
from errors import ConfigError


def test_stage_streams_are_independent_and_reproducible():
    assert rng_for(42, 'train').random() == rng_for(42, 'train').random()
    assert rng_for(42, 'train').random() != rng_for(42, 'sample').random()
    assert rng_for(42, 'train').random() != rng_for(43, 'train').random()
    with pytest.raises(ConfigError):
        rng_for(42, 'nope')


def test_default_timesteps():
    assert default_field_timesteps(50) == [1, 13, 25, 38, 50]
    assert default_field_timesteps(1) == [1]
    assert default_snapshot_steps(50) == [10, 20, 30, 40, 50]


def test_run_config_defaults_and_paths():
    cfg = RunConfig(dataset='data/dino.csv', out_dir='runs')
    assert (cfg.T, cfg.epochs, cfg.batch_size, cfg.n_samples, cfg.k) == (50, 2000, 32, 1000, 5)
    assert (cfg.input_mode, cfg.time_mode, cfg.alpha_min) == ('fourier', 'fourier', 0.95)
    assert cfg.run_dir == Path('runs') / 'dino' / 'fourier-fourier-0.95'
    assert cfg.field_timesteps == [1, 13, 25, 38, 50]


def test_run_config_rejects_unknown_config_listing_valid_names():
    with pytest.raises(ConfigError) as info:
        RunConfig(dataset='d.csv', config_name='fourier-fourier-0.99')
    for name in CONFIGURATIONS:
        assert name in str(info.value)


@pytest.mark.parametrize('overrides', [
    {'T': 0}, {'k': 0}, {'epochs': -1}, {'grid_nx': 1}, {'train_fraction': 1.0},
    {'T': 10, 'field_timesteps': [11]},
])
def test_run_config_validation(overrides):
    with pytest.raises(ConfigError):
        RunConfig(dataset='d.csv', **overrides)


def test_load_settings(tmp_path):
    path = tmp_path / 'run.env'
    path.write_text("# small run\nT=20\nconfig_name=identity-zero-0.95\nfield_timesteps=1,5,20\n"
                    "learning_rate=0.001\nout_dir=out\n")
    settings = load_settings(path)
    assert settings == {'T': 20, 'config_name': 'identity-zero-0.95', 'field_timesteps': [1, 5, 20],
                        'learning_rate': 0.001, 'out_dir': Path('out')}
    cfg = RunConfig(dataset='d.csv', **settings)
    assert cfg.snapshot_steps == [4, 8, 12, 16, 20]


def test_load_settings_errors(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_settings(tmp_path / 'missing.env')
    bad_key = tmp_path / 'bad.env'
    bad_key.write_text("colour=blue\n")
    with pytest.raises(ConfigError, match="unknown setting"):
        load_settings(bad_key)
    bad_value = tmp_path / 'value.env'
    bad_value.write_text("epochs=many\n")
    with pytest.raises(ConfigError, match="epochs"):
        load_settings(bad_value)


def test_parse_grid():
    assert parse_grid('20x20') == (20, 20)
    assert parse_grid('8X5') == (8, 5)
    assert parse_grid('12') == (12, 12)
    with pytest.raises(ConfigError):
        parse_grid('big')


def test_setup_logging_rejects_unknown_level():
    with pytest.raises(ConfigError):
        setup_logging('LOUD', log_file='')
    setup_logging('warning', log_file='')
