import numpy as np
import pytest
from pytest import approx

from distributed_tracking import ckf, central, models, netgraph
from distributed_tracking.central import JointMeasurement, WindowGaussian
from test.utils_for_test import random_spd, random_dynamics, random_sensor, random_joint, relative_error, \
    path_graph


def test_local_information():
    sensor = models.SensorModel(0, np.eye(2), np.eye(2))
    meas = models.Measurement(0, 0, 3, [1.5, -2.0])
    local = ckf.local_information(sensor, meas, num_steps=2)
    assert local.info == approx(np.eye(2))
    assert local.vec == approx([1.5, -2.0])
    mat, vec = local.dense()
    assert mat[2:, 2:] == approx(np.eye(2))
    assert vec == approx([0.0, 0.0, 1.5, -2.0])

    empty = ckf.local_information(sensor, None)
    assert empty.info == approx(np.zeros((2, 2)))
    assert empty.vec == approx(np.zeros(2))


def test_local_information_sums_to_joint():
    rng = np.random.default_rng(0)
    s1, s2 = random_sensor(rng, 1, 3), random_sensor(rng, 2, 3)
    m1, m2 = random_joint(rng, s1, 0)[0], random_joint(rng, s2, 0)[0]
    info, vec = JointMeasurement.stack([(s1, m1), (s2, m2)], 3, 0).information()
    l1, l2 = ckf.local_information(s1, m1), ckf.local_information(s2, m2)
    assert l1.info + l2.info == approx(info)
    assert l1.vec + l2.vec == approx(vec)


def test_consensus_round():
    graph = path_graph(2)
    weights = netgraph.metropolis_weights(graph)
    values = {0: ckf.LocalInformation(0, np.eye(1), np.array([2.0])),
              1: ckf.LocalInformation(1, 3 * np.eye(1), np.array([4.0]))}
    ledger = netgraph.CommLedger()
    ledger.use_graph(graph)
    new = ckf.consensus_round(values, weights, ledger)
    for i in (0, 1):
        assert new[i].info == approx(2 * np.eye(1))
        assert new[i].vec == approx([3.0])
    assert ledger.total_bits(netgraph.CKF_INFO) == 2 * 64 * netgraph.ckf_scalars(1)

    same = {i: ckf.LocalInformation(i, np.eye(1), np.ones(1)) for i in (0, 1)}
    assert ckf.consensus_round(same, weights)[1].vec == approx([1.0])
    with pytest.raises(ValueError):
        ckf.consensus_round({0: values[0]}, weights)


def test_consensus_converges_to_average():
    rng = np.random.default_rng(1)
    graph = netgraph.random_connected_graph(10, 20, rng)
    weights = netgraph.metropolis_weights(graph)
    values = {i: ckf.LocalInformation(i, random_spd(rng, 2), rng.standard_normal(2)) for i in range(10)}
    average = np.mean([v.vec for v in values.values()], axis=0)
    for _ in range(200):
        values = ckf.consensus_round(values, weights)
    assert max(np.max(np.abs(v.vec - average)) for v in values.values()) < 1.e-9


def test_consensus_round_conserves_sums():
    rng = np.random.default_rng(1)
    graph = netgraph.random_connected_graph(7, 10, rng)
    weights = netgraph.metropolis_weights(graph)
    values = {i: ckf.LocalInformation(i, random_spd(rng, 3), rng.standard_normal(3)) for i in graph.vertices}
    info_sum = sum(v.info for v in values.values())
    vec_sum = sum(v.vec for v in values.values())
    for _ in range(50):
        values = ckf.consensus_round(values, weights)
        assert sum(v.info for v in values.values()) == approx(info_sum, rel=1.e-12, abs=1.e-12)
        assert sum(v.vec for v in values.values()) == approx(vec_sum, rel=1.e-12, abs=1.e-12)


def ckf_problem(rng, num_nodes, n=2):
    dyn = random_dynamics(rng, n)
    prior = WindowGaussian((0, 0), rng.standard_normal(n), cov=random_spd(rng, n))
    sensors = {i: random_sensor(rng, i, n) for i in range(num_nodes)}
    meas = {i: random_joint(rng, s, 1)[0] for i, s in sensors.items()}
    joint = JointMeasurement.stack([(sensors[i], meas[i]) for i in sorted(sensors)], n, 1)
    reference = central.solve_map_window(central.assemble_block_system(prior, dyn, joint))
    local = {i: ckf.local_information(sensors[i], meas[i], num_steps=2) for i in sensors}
    return prior, dyn, local, reference


def test_ckf_estimate():
    rng = np.random.default_rng(2)
    prior, dyn, local, reference = ckf_problem(rng, 1)
    estimates = ckf.ckf_estimate({0: prior}, dyn, local, path_graph(1), 0, 1, 1)
    assert estimates[0].mean == approx(reference.mean)

    prior, dyn, local, reference = ckf_problem(rng, 6)
    priors = {i: prior for i in local}
    graph = path_graph(6)
    one_round = ckf.ckf_estimate(priors, dyn, local, graph, 1, 6, 1)
    assert relative_error(one_round[0].mean, reference.mean) > 1.e-8

    converged = ckf.ckf_estimate(priors, dyn, local, path_graph(6), 300, 6, 1)
    for estimate in converged.values():
        assert relative_error(estimate.mean, reference.mean) < 1.e-6

    with pytest.raises(ValueError):
        ckf.ckf_estimate(priors, dyn, local, graph, 1, None, 1)
    with pytest.raises(ValueError):
        ckf.ckf_estimate(priors, dyn, local, path_graph(4), 1, 6, 1)


def test_fuse_local_without_prior_information():
    dyn = models.double_integrator(0.25, 1.0)
    prior = WindowGaussian((0, 0), np.ones(4), info=np.zeros((4, 4)))
    local = ckf.LocalInformation(0, np.zeros((4, 4)), np.zeros(4), 2)
    posterior = ckf.fuse_local(prior, dyn, local, 3, 1)
    assert posterior.cov is None
    assert posterior.mean == approx(np.concatenate((np.ones(4), dyn.A @ np.ones(4))), rel=1.e-3)


def test_ckf_network():
    rng = np.random.default_rng(3)
    dyn = models.double_integrator(0.25, 1.0)
    sensors = {i: models.position_sensor(i, 1.0) for i in range(4)}
    network = ckf.CkfNetwork(0, np.zeros(4), np.eye(4), dyn, 2, rounds=3)
    graph = path_graph(4)

    assert network.step(0, set(), sensors, {}, graph) == {}
    assert network.pending is not None

    truth = models.TargetState(np.zeros(4), 1)
    measurements = {i: models.observe(truth, sensors[i], rng) for i in (0, 1)}
    ledger = netgraph.CommLedger()
    posteriors = network.step(1, {0, 1}, sensors, measurements, graph, ledger)
    assert set(posteriors) == {0, 1}
    assert network.pending is None
    assert posteriors[0].span == (0, 1)
    assert ledger.total_bits() == 3 * 2 * 64 * netgraph.ckf_scalars(4)

    # Sensor 2 joins and copies the prior of its tracking neighbor 1
    truth = models.TargetState(np.zeros(4), 2)
    measurements = {i: models.observe(truth, sensors[i], rng) for i in (1, 2)}
    posteriors = network.step(2, {1, 2}, sensors, measurements, graph, ledger)
    assert set(posteriors) == {1, 2}
    assert set(network.priors) == {1, 2}
