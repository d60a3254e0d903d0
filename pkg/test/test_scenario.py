import math
import os

import numpy as np
import pytest

from distributed_tracking import io
from distributed_tracking.harness.config import ScenarioConfig
from distributed_tracking.harness import scenario as scn


def small_config(**overrides):
    cfg = ScenarioConfig(n_sensors=6, n_targets=2, n_steps=6, area_size=100.0, comm_radius=60.0,
                         sensing_radius=math.inf, window_seconds=0.5)
    return cfg.replace(**overrides)


def test_generate_scenario_shapes():
    cfg = small_config()
    scenario = scn.generate_scenario(cfg)
    assert scenario.truth.shape == (2, 6, 4)
    assert scenario.sensor_positions.shape == (6, 6, 2)
    assert scenario.prior_means.shape == (2, 4)
    assert scenario.n_steps == 6 and scenario.n_targets == 2 and scenario.n == 4
    assert len(scenario.graphs) == 6
    assert [g.t for g in scenario.graphs] == list(range(6))
    assert sorted(scenario.sensors) == list(range(6))
    assert scenario.seed == 0
    assert np.allclose(scenario.prior_cov, np.eye(4))


def test_generate_scenario_is_deterministic():
    cfg = small_config(dropout=0.3, sensing_radius=50.0)
    first, second = scn.generate_scenario(cfg, 7), scn.generate_scenario(cfg, 7)
    assert np.array_equal(first.truth, second.truth)
    assert np.array_equal(first.sensor_positions, second.sensor_positions)
    assert [g.edges for g in first.graphs] == [g.edges for g in second.graphs]
    for obs_1, obs_2 in zip(first.observations, second.observations):
        assert obs_1.keys() == obs_2.keys()
        for k in obs_1:
            assert obs_1[k].keys() == obs_2[k].keys()
            for i in obs_1[k]:
                assert np.array_equal(obs_1[k][i].y, obs_2[k][i].y)
    assert not np.array_equal(first.truth, scn.generate_scenario(cfg, 8).truth)


def test_unlimited_sensing_radius():
    scenario = scn.generate_scenario(small_config())
    for t in range(scenario.n_steps):
        for k in range(scenario.n_targets):
            assert scenario.observers(t, k) == set(range(6))
            assert scenario.members(t, k) == set(range(6))
            joint = scenario.joint(t, k)
            assert joint.sensor_ids == tuple(range(6))
            assert joint.m == 12
            assert sorted(scenario.own_joints(t, k)) == list(range(6))
    assert scenario.joint(0, 0, [4, 1]).sensor_ids == (1, 4)


def test_members_cover_the_window():
    cfg = small_config(dropout=0.5, n_steps=10)
    scenario = scn.generate_scenario(cfg, 1)
    assert cfg.window == 2
    for t in range(scenario.n_steps):
        for k in range(scenario.n_targets):
            expected = set()
            for s in range(max(0, t - 2), t + 1):
                expected |= scenario.observers(s, k)
            assert scenario.members(t, k) == expected
            assert scenario.observers(t, k) <= scenario.members(t, k)


def test_static_random_graph():
    cfg = ScenarioConfig.static_benchmark(n_steps=3)
    scenario = scn.generate_scenario(cfg, 2)
    assert np.array_equal(scenario.sensor_positions[0], scenario.sensor_positions[-1])
    assert len(scenario.graphs[0].edges) == 80
    assert scenario.graphs[0].edges == scenario.graphs[2].edges
    assert scenario.members(0, 0) == set(range(20))


def test_moving_sensors_disk_graph():
    cfg = small_config(sensor_speed=10.0)
    scenario = scn.generate_scenario(cfg, 3)
    steps = np.linalg.norm(np.diff(scenario.sensor_positions, axis=0), axis=-1)
    # Chords of a circle are at most as long as the arcs
    assert np.all(steps <= 10.0 * cfg.dt + 1.e-9)
    assert np.all(steps > 0)
    for t, graph in enumerate(scenario.graphs):
        for i, j in graph.edges:
            assert np.linalg.norm(scenario.sensor_positions[t, i] - scenario.sensor_positions[t, j]) <= 60.0


def test_no_observations():
    with pytest.raises(ValueError):
        scn.generate_scenario(small_config(sensing_radius=1.e-6))


def test_archive_round_trip():
    fname = 'tmp_scenario.hdf5'
    cfg = small_config(dropout=0.3, sensing_radius=50.0)
    scenario = scn.generate_scenario(cfg, 4)
    with io.ScenarioArchive(fname, 'w') as archive:
        archive.add_scenario('seed_4', scn.scenario_arrays(scenario), scn.scenario_attrs(scenario))
    with io.ScenarioArchive(fname) as archive:
        data, attrs = archive.get_data_by_group('seed_4')
    os.remove(fname)

    loaded = scn.scenario_from_archive(data, attrs)
    assert loaded.config == cfg
    assert loaded.seed == 4
    assert np.array_equal(loaded.truth, scenario.truth)
    assert np.array_equal(loaded.prior_means, scenario.prior_means)
    assert [g.edges for g in loaded.graphs] == [g.edges for g in scenario.graphs]
    for t in range(scenario.n_steps):
        for k in range(scenario.n_targets):
            assert loaded.observers(t, k) == scenario.observers(t, k)
            assert np.array_equal(loaded.joint(t, k).y, scenario.joint(t, k).y)
            assert np.allclose(loaded.joint(t, k).R, scenario.joint(t, k).R)
