""" Scenario and method configuration, loaded from a flat YAML mapping."""
import dataclasses
import hashlib
import json
import logging
import math
from dataclasses import dataclass

import yaml

from distributed_tracking import models, netgraph
from distributed_tracking.drwt import DrwtConfig

logger = logging.getLogger(__name__)

METHODS = ('centralized', 'ckf', 'drwt', 'local')
GRAPHS = ('disk', 'random')


@dataclass(frozen=True)
class ScenarioConfig:
    """ All parameters of a scenario and of the estimators run on it. The defaults
    describe the synthetic urban scenario: 50 sensors and 50 targets, a 200 m disk
    communication graph, a 100 m sensing radius, 4 Hz updates and a 5 s window.
    """
    # Scenario
    n_sensors: int = 50
    n_targets: int = 50
    n_steps: int = 40
    area_size: float = 600.0
    comm_radius: float = 200.0
    sensing_radius: float = 100.0
    rate: float = 4.0
    window_seconds: float = 5.0
    graph: str = 'disk'
    n_edges: int = 80
    static_sensors: bool = False
    sensor_speed: float = 8.0
    target_speed: float = 8.0
    # Models
    q_accel: float = 1.0
    q_mismatch: float = 1.0
    meas_sigma: float = 1.0
    meas_sigma_spread: float = 1.0
    prior_sigma: float = 1.0
    prior_vel_sigma: float = 1.0
    dropout: float = 0.0
    # Estimators
    method: str = 'drwt'
    rho: float = 1.0
    max_iters: int = 50
    residual_tol: float = None
    primal_update: str = 'dense'
    penalty: str = 'identity'
    ckf_rounds: int = 10
    on_disconnected: str = 'components'
    bits_per_scalar: int = 64
    # Benchmarks
    seed: int = 0
    mc_runs: int = 200
    workers: int = 1
    sweep_rounds: int = 1000

    def __post_init__(self):
        for key in ('comm_radius', 'sensing_radius', 'rate', 'window_seconds', 'area_size',
                    'q_accel', 'q_mismatch', 'meas_sigma', 'prior_sigma', 'prior_vel_sigma'):
            if not getattr(self, key) > 0:
                raise ValueError(key + ' must be positive, got ' + str(getattr(self, key)))
        if self.meas_sigma_spread < 1:
            raise ValueError('meas_sigma_spread must be at least 1')
        if not 0 <= self.dropout < 1:
            raise ValueError('dropout must be in [0, 1)')
        if self.n_sensors < 1 or self.n_targets < 1 or self.n_steps < 1:
            raise ValueError('n_sensors, n_targets and n_steps must be at least 1')
        if self.window < 1:
            raise ValueError('Window of ' + str(self.window_seconds) + ' s at ' + str(self.rate)
                             + ' Hz is shorter than one step')
        if self.graph not in GRAPHS:
            raise ValueError('graph must be one of ' + str(GRAPHS))
        if self.method not in METHODS:
            raise ValueError('method must be one of ' + str(METHODS))
        if self.ckf_rounds < 0 or self.mc_runs < 1 or self.workers < 1 or self.sweep_rounds < 1:
            raise ValueError('ckf_rounds, mc_runs, workers and sweep_rounds are out of range')
        self.drwt_config()

    @property
    def window(self):
        """ Window length T in timesteps"""
        return int(round(self.window_seconds * self.rate))

    @property
    def dt(self):
        return 1.0 / self.rate

    def drwt_config(self):
        return DrwtConfig(rho=self.rho, max_iters=self.max_iters, residual_tol=self.residual_tol,
                          primal_update=self.primal_update, on_disconnected=self.on_disconnected,
                          penalty=self.penalty)

    def nominal_sensor(self):
        """ Position sensor with the lowest noise level of the scenario, behind the nominal penalty"""
        return models.position_sensor(-1, self.meas_sigma)

    def replace(self, **overrides):
        """ Copy with the given fields changed; None values are ignored"""
        overrides = {k: v for k, v in overrides.items() if v is not None}
        unknown = set(overrides) - {f.name for f in dataclasses.fields(self)}
        if unknown:
            raise ValueError('Unknown configuration keys ' + str(sorted(unknown)))
        return dataclasses.replace(self, **overrides)

    def to_dict(self):
        values = dataclasses.asdict(self)
        # json has no infinity
        return {k: ('inf' if isinstance(v, float) and math.isinf(v) else v) for k, v in values.items()}

    def config_hash(self):
        """ SHA-256 of the canonical json of the configuration"""
        text = json.dumps(self.to_dict(), sort_keys=True, separators=(',', ':'))
        return hashlib.sha256(text.encode('utf-8')).hexdigest()

    @classmethod
    def static_benchmark(cls, large=False, **overrides):
        """ Static network comparison: one target seen by every sensor, a random
        connected graph of 20 nodes and 80 edges (100 and 400 with ``large``),
        planar double integrator (n = 4), window T = 1.

        All sensors share one noise level, so the nominal penalty matrix equals
        every local Hessian. With ``rho = 0.07`` the rounds stop at a relative
        residual of 1e-9 well inside the budget of 300 rounds per timestep.
        """
        cfg = cls(n_sensors=100 if large else 20, n_targets=1, n_steps=10,
                  graph='random', n_edges=400 if large else 80, static_sensors=True,
                  sensing_radius=math.inf, comm_radius=math.inf, window_seconds=0.25,
                  q_accel=100.0, meas_sigma=1.0, meas_sigma_spread=1.0, prior_sigma=0.5, prior_vel_sigma=0.5,
                  rho=0.07, max_iters=300, residual_tol=1.e-9, penalty='nominal', on_disconnected='error',
                  sweep_rounds=7700)
        return cfg.replace(**overrides)

    @classmethod
    def static_monte_carlo(cls, large=False, **overrides):
        """ Static network with noise levels spread over a factor 3 and the same
        bandwidth limit per timestep for both distributed methods: 4 DRWT rounds and
        as many CKF rounds as fit into the bits they send.
        """
        cfg = cls.static_benchmark(large, n_steps=5, meas_sigma_spread=3.0, max_iters=4)
        cfg = dataclasses.replace(cfg, residual_tol=None).replace(**overrides)
        if 'ckf_rounds' in overrides:
            return cfg
        return cfg.replace(ckf_rounds=netgraph.matched_ckf_rounds(cfg.max_iters, 4, cfg.window + 1))


def _parse_value(key, value, default):
    if isinstance(value, (dict, list)):
        raise ValueError('Configuration key ' + key + ' must be a scalar')
    if value is None:
        return None
    if isinstance(value, str) and value.lower() in ('inf', '.inf', 'infinity'):
        return math.inf
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ValueError('Configuration key ' + key + ' must be true or false')
        return value
    if isinstance(default, int) and not isinstance(default, bool):
        if isinstance(value, float) and value.is_integer():
            return int(value)
        if not isinstance(value, int) or isinstance(value, bool):
            raise ValueError('Configuration key ' + key + ' must be an integer')
        return value
    if isinstance(default, float) or default is None:
        if isinstance(value, bool):
            raise ValueError('Configuration key ' + key + ' must be a number')
        return float(value) if isinstance(value, (int, float)) else value
    return value


def load_config(path, base=None):
    """ Read a configuration file. The file is a flat YAML mapping of field names of
    :py:class:`ScenarioConfig` to values; fields not given keep the value of ``base``.

    :param path: Path to the YAML file
    :type path: str

    :param base: Configuration providing the defaults, ``ScenarioConfig()`` if None
    :type base: ScenarioConfig

    :raises ValueError: For unknown keys, nested values or values of the wrong type

    :returns: The configuration
    :rtype: ScenarioConfig
    """
    base = ScenarioConfig() if base is None else base
    with open(path, 'r') as fid:
        content = yaml.safe_load(fid)
    if content is None:
        return base
    if not isinstance(content, dict):
        raise ValueError('Configuration file ' + str(path) + ' must contain a mapping')
    defaults = {f.name: getattr(base, f.name) for f in dataclasses.fields(base)}
    unknown = sorted(set(content) - set(defaults))
    if unknown:
        raise ValueError('Unknown configuration keys ' + str(unknown) + ' in ' + str(path))
    values = {key: _parse_value(key, value, defaults[key]) for key, value in content.items()}
    logger.info('Loaded configuration ' + str(path))
    return dataclasses.replace(base, **values)
