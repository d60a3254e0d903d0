""" Synthetic multi-target tracking scenarios: sensors driving scripted loops (or
standing still), targets following double integrator dynamics, limited sensing
radius with random dropouts and a communication graph per timestep.
"""
import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from distributed_tracking import models, netgraph
from distributed_tracking.central import JointMeasurement
from distributed_tracking.harness.config import ScenarioConfig

logger = logging.getLogger(__name__)


@dataclass
class Scenario:
    """ Generated scenario

    :param config: Generating configuration
    :param seed: Seed of the scenario
    :param dyn: Dynamics assumed by the estimators
    :param truth: True states, shape (n_targets, n_steps, n)
    :param sensor_positions: Sensor positions, shape (n_steps, n_sensors, 2)
    :param sensors: Sensor model per sensor id
    :param prior_means: Prior mean of the initial state per target, shape (n_targets, n)
    :param prior_cov: Prior covariance of the initial state
    :param observations: Per timestep, measurement per target and observing sensor
    :param graphs: Communication graph per timestep
    """
    config: ScenarioConfig
    seed: int
    dyn: models.LinearDynamics
    truth: np.ndarray
    sensor_positions: np.ndarray
    sensors: dict
    prior_means: np.ndarray
    prior_cov: np.ndarray
    observations: list
    graphs: list
    _members: dict = field(default_factory=dict, repr=False)

    @property
    def n_steps(self):
        return self.truth.shape[1]

    @property
    def n_targets(self):
        return self.truth.shape[0]

    @property
    def n(self):
        return self.truth.shape[2]

    def observers(self, t, target_id):
        return set(self.observations[t].get(target_id, {}))

    def members(self, t, target_id):
        """ Sensors that observed the target at any timestep of the window ending at ``t``"""
        key = (t, target_id)
        if key not in self._members:
            t0 = max(0, t - self.config.window)
            self._members[key] = set().union(*(self.observers(k, target_id) for k in range(t0, t + 1)))
        return set(self._members[key])

    def joint(self, t, target_id, sensor_ids=None):
        """ Stacked measurements of the target at ``t``, of all observers or of ``sensor_ids``"""
        meas = self.observations[t].get(target_id, {})
        ids = sorted(meas) if sensor_ids is None else sorted(i for i in sensor_ids if i in meas)
        return JointMeasurement.stack([(self.sensors[i], meas[i]) for i in ids], self.n, t)

    def own_joints(self, t, target_id):
        """ Each observer's own measurement of the target at ``t``"""
        meas = self.observations[t].get(target_id, {})
        return {i: JointMeasurement.stack([(self.sensors[i], meas[i])], self.n, t) for i in sorted(meas)}


def _seed_sequence(seed):
    return seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)


def _sensor_tracks(cfg, rng):
    n_steps, n_sensors, size = cfg.n_steps, cfg.n_sensors, cfg.area_size
    if cfg.static_sensors:
        positions = rng.uniform(0, size, (n_sensors, 2))
        return np.repeat(positions[None, :, :], n_steps, axis=0)
    centers = rng.uniform(0, size, (n_sensors, 2))
    radii = rng.uniform(0.1, 0.3, n_sensors) * size
    phases = rng.uniform(0, 2 * np.pi, n_sensors)
    directions = rng.choice([-1.0, 1.0], n_sensors)
    times = np.arange(n_steps) * cfg.dt
    angles = phases[None, :] + directions[None, :] * cfg.sensor_speed / radii[None, :] * times[:, None]
    return centers[None, :, :] + radii[None, :, None] * np.stack((np.cos(angles), np.sin(angles)), axis=-1)


def _graphs(cfg, sensor_positions, rng):
    if cfg.graph == 'random':
        static = netgraph.random_connected_graph(cfg.n_sensors, cfg.n_edges, rng)
        return [netgraph.CommGraph(static.graph, t) for t in range(cfg.n_steps)]
    return [netgraph.disk_graph(dict(enumerate(sensor_positions[t])), cfg.comm_radius, t)
            for t in range(cfg.n_steps)]


def generate_scenario(cfg, seed=None):
    """ Generate a scenario. The same configuration and seed always give the same scenario.

    :param cfg: Configuration
    :type cfg: ScenarioConfig

    :param seed: Seed, ``cfg.seed`` if None
    :type seed: int, np.random.SeedSequence

    :raises ValueError: If no target is ever observed

    :returns: The scenario
    :rtype: Scenario
    """
    seed = cfg.seed if seed is None else seed
    layout_rng, truth_rng, meas_rng, dropout_rng = [np.random.default_rng(s)
                                                    for s in _seed_sequence(seed).spawn(4)]
    dyn = models.double_integrator(cfg.dt, cfg.q_accel)
    truth_dyn = models.double_integrator(cfg.dt, cfg.q_accel * cfg.q_mismatch)

    # Log-uniform noise levels in [meas_sigma, meas_sigma * meas_sigma_spread]
    sigmas = cfg.meas_sigma * cfg.meas_sigma_spread ** layout_rng.uniform(0, 1, cfg.n_sensors)
    sensors = {i: models.position_sensor(i, sigmas[i]) for i in range(cfg.n_sensors)}
    sensor_positions = _sensor_tracks(cfg, layout_rng)
    graphs = _graphs(cfg, sensor_positions, layout_rng)

    prior_cov = np.diag([cfg.prior_sigma ** 2] * 2 + [cfg.prior_vel_sigma ** 2] * 2)
    positions = layout_rng.uniform(0.2 * cfg.area_size, 0.8 * cfg.area_size, (cfg.n_targets, 2))
    headings = layout_rng.uniform(0, 2 * np.pi, cfg.n_targets)
    velocities = cfg.target_speed * np.stack((np.cos(headings), np.sin(headings)), axis=-1)
    prior_means = np.hstack((positions, velocities))
    chol = np.linalg.cholesky(prior_cov)
    truth = np.array([models.simulate_trajectory(prior_means[k] + chol @ truth_rng.standard_normal(4),
                                                 truth_dyn, cfg.n_steps, truth_rng)
                      for k in range(cfg.n_targets)])

    observations = []
    for t in range(cfg.n_steps):
        dist = np.linalg.norm(truth[:, t, None, :2] - sensor_positions[t][None, :, :], axis=-1)
        dropped = dropout_rng.uniform(0, 1, dist.shape) < cfg.dropout
        seen = (dist <= cfg.sensing_radius) & ~dropped
        step = {}
        for k in range(cfg.n_targets):
            state = models.TargetState(truth[k, t], t)
            meas = {int(i): models.observe(state, sensors[int(i)], meas_rng, target_id=k)
                    for i in np.flatnonzero(seen[k])}
            if meas:
                step[k] = meas
        observations.append(step)

    observed = {k for step in observations for k in step}
    if not observed:
        raise ValueError('No target is ever observed, check sensing_radius and dropout')
    for k in sorted(set(range(cfg.n_targets)) - observed):
        logger.warning('Target ' + str(k) + ' is never observed')

    seed_value = seed.entropy if isinstance(seed, np.random.SeedSequence) else seed
    return Scenario(cfg, seed_value, dyn, truth, sensor_positions, sensors, prior_means, prior_cov,
                    observations, graphs)


def scenario_arrays(scenario):
    """ Datasets describing a scenario, see :py:class:`distributed_tracking.io.ScenarioArchive`"""
    edges = [(t, i, j) for t, g in enumerate(scenario.graphs) for i, j in sorted(g.edges)]
    obs = [(t, k, i, meas.y) for t, step in enumerate(scenario.observations)
           for k in sorted(step) for i, meas in sorted(step[k].items())]
    return {'truth': scenario.truth,
            'sensor_positions': scenario.sensor_positions,
            'sensor_sigmas': np.array([math.sqrt(scenario.sensors[i].R[0, 0]) for i in sorted(scenario.sensors)]),
            'prior_means': scenario.prior_means,
            'prior_cov': scenario.prior_cov,
            'edges': np.array(edges, dtype=np.int64).reshape(-1, 3),
            'obs_index': np.array([o[:3] for o in obs], dtype=np.int64).reshape(-1, 3),
            'obs_values': np.array([o[3] for o in obs], dtype=float).reshape(len(obs), -1)}


def scenario_attrs(scenario):
    return {'config': json.dumps(scenario.config.to_dict(), sort_keys=True),
            'seed': int(scenario.seed)}


def scenario_from_archive(data, attrs):
    """ Rebuild a scenario from the datasets and attributes of an archive group"""
    values = json.loads(attrs['config'])
    cfg = ScenarioConfig(**{k: (math.inf if v == 'inf' else v) for k, v in values.items()})
    n_steps = data['truth'].shape[1]
    sensors = {i: models.position_sensor(i, s) for i, s in enumerate(data['sensor_sigmas'])}
    edges = data['edges']
    graphs = [netgraph.CommGraph.from_edges(sensors, [(int(i), int(j)) for _, i, j in edges[edges[:, 0] == t]], t)
              for t in range(n_steps)]
    observations = [{} for _ in range(n_steps)]
    for (t, k, i), y in zip(data['obs_index'], data['obs_values']):
        observations[t].setdefault(int(k), {})[int(i)] = models.Measurement(int(i), int(k), int(t), y)
    return Scenario(cfg, int(attrs['seed']), models.double_integrator(cfg.dt, cfg.q_accel), data['truth'],
                    data['sensor_positions'], sensors, data['prior_means'], data['prior_cov'],
                    observations, graphs)
