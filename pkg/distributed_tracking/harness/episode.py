""" Run one estimation method over a scenario, timestep by timestep, with the
centralized rolling window estimator computed alongside as the reference.
"""
import copy
import logging
from dataclasses import dataclass, field

import numpy as np

from distributed_tracking import io, netgraph
from distributed_tracking.central import JointMeasurement, RollingWindowEstimator
from distributed_tracking.ckf import CkfNetwork
from distributed_tracking.drwt import DrwtNetwork
from distributed_tracking.harness.config import METHODS
from distributed_tracking.utils import linalg as la

logger = logging.getLogger(__name__)

# Sensor id of rows that describe the whole network
AGGREGATE = -1


@dataclass(frozen=True)
class MetricsRow:
    run: int
    t: int
    method: str
    target_id: int
    sensor_id: int
    mse_to_centralized: float
    mse_to_truth: float
    trace_cov: float
    cumulative_bits: float


@dataclass(frozen=True)
class InfoBandRow:
    """ Trace of an information matrix at a timestep. ``band`` is ``'sensor'`` for a
    local posterior, ``'sum'`` for the sum over the relevant sensors and
    ``'centralized'`` for the centralized posterior.
    """
    run: int
    t: int
    target_id: int
    sensor_id: int
    band: str
    info_trace: float


@dataclass
class EpisodeResult:
    """ Output of :py:func:`run_episode`

    :param method: Estimation method
    :param rows: One row per timestep, target and estimating sensor
    :param errors: Signed error to the truth of the estimate of every row, shape (len(rows), n)
    :param ledger: Messages sent during the episode
    :param bands: Information traces (DRWT only)
    :param handoffs: Hand-off events (DRWT only)
    :param conservativeness: (t, target, smallest eigenvalue of the difference between the
                             network prior covariance and the centralized one) (DRWT only)
    :param dropped_info_trace: Information lost per target because no neighbor could receive it
    """
    method: str
    rows: list
    errors: np.ndarray
    ledger: netgraph.CommLedger
    bands: list = field(default_factory=list)
    handoffs: list = field(default_factory=list)
    conservativeness: list = field(default_factory=list)
    dropped_info_trace: dict = field(default_factory=dict)


def _mse(a, b):
    return float(np.mean((a - b) ** 2))


def _block_trace(cov, s):
    return float(np.trace(cov[s, s]))


def _network_trace(info, s):
    """ Trace of the covariance block ``s`` of the information ``info``, inf if singular"""
    try:
        return _block_trace(la.cho_inverse(info), s)
    except np.linalg.LinAlgError:
        return float('inf')


def _conservativeness(network_info, central_prior):
    """ Smallest eigenvalue of the network prior covariance minus the centralized
    one. If the network information is singular the difference of the information
    matrices (centralized minus network) is used instead.
    """
    if network_info is None or network_info.shape != central_prior.mean.shape * 2:
        return None
    try:
        diff = la.cho_inverse(network_info) - central_prior.covariance()
    except np.linalg.LinAlgError:
        diff = central_prior.information() - network_info
    return float(np.linalg.eigvalsh(la.symmetrize(diff))[0])


class _LocalOnly:
    """ Every relevant sensor runs the centralized estimator on its own measurements.
    A joining sensor starts from the prediction of the initial prior without
    measurements; a leaving sensor forgets the target.
    """

    def __init__(self, prior_mean, prior_cov, dyn, window):
        self.predictor = RollingWindowEstimator(prior_mean, prior_cov, dyn, window)
        self.estimators = {}

    def step(self, t, members, joints, n):
        self.estimators = {i: e for i, e in self.estimators.items() if i in members}
        for i in sorted(set(members) - set(self.estimators)):
            self.estimators[i] = copy.deepcopy(self.predictor)
        self.predictor.step(JointMeasurement.empty(n, t))
        return {i: self.estimators[i].step(joints.get(i, JointMeasurement.empty(n, t)))
                for i in sorted(self.estimators)}


def _make_estimator(method, scenario, cfg, k):
    args = (scenario.prior_means[k], scenario.prior_cov, scenario.dyn, cfg.window)
    if method == 'drwt':
        return DrwtNetwork(k, *args, config=cfg.drwt_config(), nominal_sensor=cfg.nominal_sensor())
    if method == 'ckf':
        return CkfNetwork(k, *args, rounds=cfg.ckf_rounds)
    if method == 'local':
        return _LocalOnly(*args)
    return None


def run_episode(scenario, method=None, run=0, cfg=None):
    """ Run an estimation method over all timesteps and targets of a scenario

    :param scenario: The scenario
    :type scenario: Scenario

    :param method: One of ``'centralized'``, ``'ckf'``, ``'drwt'``, ``'local'``;
                   ``cfg.method`` if None
    :type method: str

    :param run: Run id written to the rows
    :type run: int

    :param cfg: Method parameters, the scenario's configuration if None
    :type cfg: ScenarioConfig

    :returns: Metrics, ledger and diagnostics of the episode
    :rtype: EpisodeResult
    """
    cfg = scenario.config if cfg is None else cfg
    method = cfg.method if method is None else method
    if method not in METHODS:
        raise ValueError('Unknown method ' + str(method) + ', expected one of ' + str(METHODS))
    n = scenario.n
    targets = range(scenario.n_targets)
    ledger = netgraph.CommLedger(cfg.bits_per_scalar)
    central = {k: RollingWindowEstimator(scenario.prior_means[k], scenario.prior_cov, scenario.dyn, cfg.window)
               for k in targets}
    estimators = {k: _make_estimator(method, scenario, cfg, k) for k in targets}
    result = EpisodeResult(method, [], None, ledger)
    errors = []

    for t in range(scenario.n_steps):
        graph = scenario.graphs[t]
        for k in targets:
            post_c = central[k].step(scenario.joint(t, k))
            s = post_c.block(t)
            truth = scenario.truth[k, t]
            x_c = post_c.mean[s]
            cov_c = post_c.covariance()
            members = scenario.members(t, k)
            estimates = {}

            if method == 'centralized':
                estimates[AGGREGATE] = (x_c, _block_trace(cov_c, s))
            elif method == 'drwt':
                net = estimators[k]
                next_members = scenario.members(t + 1, k) if t + 1 < scenario.n_steps else None
                posts = net.step(t, members, scenario.own_joints(t, k), graph, next_members, ledger)
                if posts:
                    trace = _network_trace(net.information_sum(), s)
                    estimates = {i: (p.mean[s], trace) for i, p in posts.items()}
                    _add_bands(result, run, t, k, posts, post_c)
                gap = _conservativeness(net.prior_information_sum(), central[k].prior)
                if gap is not None:
                    result.conservativeness.append((t, k, gap))
            elif method == 'ckf':
                posts = estimators[k].step(t, members, scenario.sensors, scenario.observations[t].get(k, {}),
                                           graph, ledger)
                for i, p in posts.items():
                    estimates[i] = (p.mean[s], _network_trace(p.information(), s) if p.cov is None
                                    else _block_trace(p.cov, s))
            else:
                posts = estimators[k].step(t, members, scenario.own_joints(t, k), n)
                estimates = {i: (p.mean[s], _block_trace(p.covariance(), s)) for i, p in posts.items()}

            bits = ledger.mean_bits_per_node(scenario.config.n_sensors)
            for i, (x, trace) in sorted(estimates.items()):
                result.rows.append(MetricsRow(run, t, method, k, i, _mse(x, x_c), _mse(x, truth), trace, bits))
                errors.append(x - truth)

    if method == 'drwt':
        for k, net in estimators.items():
            result.handoffs.extend(net.handoffs)
            result.dropped_info_trace[k] = net.dropped_info_trace
    result.errors = np.array(errors).reshape(-1, n)
    sent = ledger.bits_per_node()
    busiest = max(sent, key=sent.get) if sent else None
    logger.debug('Episode ' + str(run) + ' (' + method + '): ' + str(len(result.rows)) + ' rows, '
                 + str(ledger.total_bits()) + ' bits, most by sensor ' + str(busiest))
    return result


def _add_bands(result, run, t, k, posts, post_c):
    traces = {i: float(np.trace(p.info)) for i, p in posts.items()}
    for i, trace in sorted(traces.items()):
        result.bands.append(InfoBandRow(run, t, k, i, 'sensor', trace))
    result.bands.append(InfoBandRow(run, t, k, AGGREGATE, 'sum', float(sum(traces.values()))))
    result.bands.append(InfoBandRow(run, t, k, AGGREGATE, 'centralized', float(np.trace(post_c.information()))))


def emit_info_bands(result):
    """ Per-sensor information traces of a DRWT episode with their sum and the
    centralized trace, one group of rows per timestep and target
    """
    if result.method != 'drwt':
        raise ValueError('Information bands are only recorded for drwt episodes, got ' + result.method)
    return list(result.bands)


def emit_csv(rows, path, row_type=MetricsRow):
    """ Write rows as a csv table with a fixed column order; no rows give a header-only file"""
    io.write_rows(path, row_type, rows)
