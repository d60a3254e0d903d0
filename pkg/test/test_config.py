import math
import os

import numpy as np
import pytest

from distributed_tracking.harness.config import ScenarioConfig, load_config


def write_yaml(fname, text):
    with open(fname, 'w') as fid:
        fid.write(text)


def test_defaults():
    cfg = ScenarioConfig()
    assert cfg.n_sensors == 50 and cfg.n_targets == 50
    assert cfg.window == 20
    assert cfg.dt == 0.25
    assert cfg.method == 'drwt'
    drwt_cfg = cfg.drwt_config()
    assert drwt_cfg.rho == cfg.rho
    assert drwt_cfg.max_iters == cfg.max_iters
    assert drwt_cfg.on_disconnected == 'components'


def test_static_benchmark():
    cfg = ScenarioConfig.static_benchmark()
    assert (cfg.n_sensors, cfg.n_edges, cfg.window) == (20, 80, 1)
    assert cfg.graph == 'random' and cfg.static_sensors
    assert math.isinf(cfg.sensing_radius)
    large = ScenarioConfig.static_benchmark(large=True, n_steps=2)
    assert (cfg.rho, cfg.max_iters, cfg.residual_tol) == (0.07, 300, 1.e-9)
    assert cfg.drwt_config().penalty == 'nominal'
    assert cfg.nominal_sensor().R == pytest.approx(cfg.meas_sigma ** 2 * np.eye(2))
    assert (large.n_sensors, large.n_edges, large.n_steps) == (100, 400, 2)


def test_static_monte_carlo():
    cfg = ScenarioConfig.static_monte_carlo()
    assert (cfg.n_sensors, cfg.n_edges, cfg.n_steps) == (20, 80, 5)
    assert cfg.meas_sigma_spread == 3.0
    assert cfg.residual_tol is None
    assert (cfg.max_iters, cfg.ckf_rounds) == (4, 2)
    assert ScenarioConfig.static_monte_carlo(max_iters=14).ckf_rounds == 8
    assert ScenarioConfig.static_monte_carlo(ckf_rounds=5).ckf_rounds == 5
    assert ScenarioConfig.static_monte_carlo(large=True).n_sensors == 100
    with pytest.raises(ValueError):
        ScenarioConfig(penalty='scalar')


def test_replace_and_validation():
    cfg = ScenarioConfig()
    assert cfg.replace(seed=None, rho=2.0).rho == 2.0
    assert cfg.replace(seed=None) == cfg
    with pytest.raises(ValueError):
        cfg.replace(radius=1.0)
    with pytest.raises(ValueError):
        ScenarioConfig(window_seconds=0.1)
    with pytest.raises(ValueError):
        ScenarioConfig(dropout=1.0)
    with pytest.raises(ValueError):
        ScenarioConfig(method='kalman')
    with pytest.raises(ValueError):
        ScenarioConfig(rho=-1.0)


def test_config_hash():
    cfg = ScenarioConfig()
    assert cfg.config_hash() == ScenarioConfig().config_hash()
    assert cfg.config_hash() != cfg.replace(seed=1).config_hash()
    assert ScenarioConfig.static_benchmark().to_dict()['comm_radius'] == 'inf'


def test_load_config():
    fname = 'tmp_config.yaml'
    write_yaml(fname, 'n_sensors: 10\nsensing_radius: inf\nrho: 2\nmax_iters: 30.0\nstatic_sensors: true\n')
    cfg = load_config(fname)
    assert cfg.n_sensors == 10
    assert math.isinf(cfg.sensing_radius)
    assert cfg.rho == 2.0 and isinstance(cfg.rho, float)
    assert cfg.max_iters == 30 and isinstance(cfg.max_iters, int)
    assert cfg.static_sensors
    assert cfg.n_targets == 50

    base = ScenarioConfig.static_benchmark()
    assert load_config(fname, base).graph == 'random'

    write_yaml(fname, '')
    assert load_config(fname) == ScenarioConfig()

    for text in ('n_sensor: 10\n', 'n_sensors: [1, 2]\n', 'n_sensors: 1.5\n', 'static_sensors: 1\n',
                 '- 1\n', 'rho: true\n'):
        write_yaml(fname, text)
        with pytest.raises(ValueError):
            load_config(fname)
    os.remove(fname)
