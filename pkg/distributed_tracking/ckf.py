""" Consensus Kalman filter baseline. Every node diffuses its measurement information
by average consensus with Metropolis weights, scales the result by the number of
relevant sensors to approximate the network sum and solves the window problem with
its own copy of the prior and dynamics.
"""
import logging
from dataclasses import dataclass

import numpy as np

from distributed_tracking import central, netgraph
from distributed_tracking.central import JointMeasurement, WindowGaussian
from distributed_tracking.models import dynamics_at
from distributed_tracking.utils import linalg as la

logger = logging.getLogger(__name__)


@dataclass
class LocalInformation:
    """ Measurement information of one sensor in a window of ``num_steps`` timesteps.
    Only the newest timestep block is nonzero, so only that block is stored.

    :param sensor_id: Owning sensor
    :type sensor_id: int

    :param info: :math:`C^T R^{-1} C` (n x n)
    :type info: np.ndarray

    :param vec: :math:`C^T R^{-1} y` (n)
    :type vec: np.ndarray

    :param num_steps: Number of timesteps of the window
    :type num_steps: int
    """
    sensor_id: int
    info: np.ndarray
    vec: np.ndarray
    num_steps: int = 1

    @property
    def n(self):
        return self.vec.size

    def dense(self):
        """ Information matrix and vector over the full window"""
        size = self.n * self.num_steps
        mat = np.zeros((size, size))
        vec = np.zeros(size)
        last = la.block_slice(self.num_steps - 1, self.n)
        mat[last, last] = self.info
        vec[last] = self.vec
        return mat, vec

    def scaled(self, factor):
        return LocalInformation(self.sensor_id, factor * self.info, factor * self.vec, self.num_steps)


def local_information(sensor, meas, num_steps=1):
    """ Measurement information of a sensor

    :param sensor: The sensor
    :type sensor: SensorModel

    :param meas: Its measurement, None if it did not observe the target
    :type meas: Measurement, None

    :param num_steps: Number of timesteps of the window
    :type num_steps: int

    :returns: Information placed in the newest timestep
    :rtype: LocalInformation
    """
    n = sensor.n
    if meas is None:
        return LocalInformation(sensor.sensor_id, np.zeros((n, n)), np.zeros(n), num_steps)
    info, vec = JointMeasurement.stack([(sensor, meas)], n, meas.t).information()
    return LocalInformation(sensor.sensor_id, info, vec, num_steps)


def consensus_round(values, weights, ledger=None, round_index=None):
    """ One synchronous round of weighted averaging, :math:`v_i \\leftarrow \\sum_j w_{ij} v_j`

    :param values: Current value per node
    :type values: dict[ int, LocalInformation ]

    :param weights: Metropolis weights of the graph connecting the nodes
    :type weights: dict[ tuple[ int, int ], float ]

    :param ledger: If given, one message per directed edge is recorded
    :type ledger: CommLedger

    :param round_index: Round of the recorded messages, a new ledger round if None
    :type round_index: int

    :returns: Value per node after the round
    :rtype: dict[ int, LocalInformation ]
    """
    inbound = {i: [] for i in values}
    for (i, j), w in weights.items():
        if i not in values or j not in values:
            raise ValueError('Weight (' + str(i) + ', ' + str(j) + ') refers to a node without a value')
        inbound[i].append((j, w))
    for i in values:
        if (i, i) not in weights:
            raise ValueError('Node ' + str(i) + ' has no self weight')

    new_values = {}
    for i in sorted(values):
        info = sum(w * values[j].info for j, w in inbound[i])
        vec = sum(w * values[j].vec for j, w in inbound[i])
        new_values[i] = LocalInformation(i, info, vec, values[i].num_steps)

    if ledger is not None:
        if round_index is None:
            round_index = ledger.new_round()
        for i in sorted(values):
            for j, _ in sorted(inbound[i]):
                if j != i:
                    ledger.record_message(round_index, (j, i), netgraph.CKF_INFO, netgraph.ckf_scalars(values[j].n))
    return new_values


def fuse_local(prior, dyn, local, n_members, t, epsilon=1e-9):
    """ Solve the window problem of one node with its consensus information scaled by ``n_members``.
    If the result is singular (a node without prior information), ``epsilon * I``
    regularizes the solve towards the predicted prior mean.

    :returns: Posterior of the node
    :rtype: WindowGaussian
    """
    info, vec, span = central.window_information(prior, dyn, None, t)
    last = la.block_slice(span[1] - span[0], local.n)
    info[last, last] += n_members * local.info
    vec[last] += n_members * local.vec
    if not la.is_singular(info):
        return central.solve_information(info, vec, span)
    logger.debug('Regularizing singular window of sensor ' + str(local.sensor_id) + ' at t=' + str(t))
    anchor = central.extend_mean(prior, dyn, t)
    posterior = central.solve_information(info + epsilon * np.eye(info.shape[0]), vec + epsilon * anchor, span)
    return WindowGaussian(span, posterior.mean, info=info)


def ckf_estimate(priors, dyn, local, graph, rounds, n_members=None, t=None, ledger=None):
    """ CKF estimate of every node after ``rounds`` consensus rounds

    :param priors: Each node's own copy of the window prior
    :type priors: dict[ int, WindowGaussian ]

    :param dyn: Dynamics of the transition into ``t``
    :type dyn: LinearDynamics

    :param local: Measurement information per node
    :type local: dict[ int, LocalInformation ]

    :param graph: Graph connecting the nodes
    :type graph: CommGraph

    :param rounds: Number of consensus rounds L
    :type rounds: int

    :param n_members: Number of relevant sensors :math:`|V'_t|`
    :type n_members: int

    :param t: Timestep of the estimate
    :type t: int

    :param ledger: Message ledger
    :type ledger: CommLedger

    :returns: Posterior per node
    :rtype: dict[ int, WindowGaussian ]
    """
    if n_members is None:
        raise ValueError('The number of relevant sensors must be known')
    if set(local) != set(graph.vertices) or set(priors) != set(local):
        raise ValueError('Priors, local information and graph vertices must refer to the same nodes')
    weights = netgraph.metropolis_weights(graph)
    values = dict(local)
    for _ in range(rounds):
        values = consensus_round(values, weights, ledger)
    return {i: fuse_local(priors[i], dyn, values[i], n_members, t) for i in sorted(values)}


class CkfNetwork:
    """ CKF for one target across timesteps. Every relevant sensor keeps its own
    window prior. A joining sensor copies the prior of its lowest-id neighbor that
    is already tracking the target. Until the target first has relevant sensors the
    network holds the shared initial prior; a sensor joining after all others have
    left starts without prior information.

    :param target_id: The target
    :type target_id: int

    :param prior_mean: Prior mean of the initial state
    :type prior_mean: np.ndarray

    :param prior_cov: Prior covariance of the initial state
    :type prior_cov: np.ndarray

    :param dyn: Dynamics (fixed or per timestep)
    :type dyn: LinearDynamics, Callable

    :param window: Window length T
    :type window: int

    :param rounds: Consensus rounds per timestep
    :type rounds: int
    """

    def __init__(self, target_id, prior_mean, prior_cov, dyn, window, rounds):
        self.target_id = target_id
        self.dyn = dyn
        self.window = window
        self.rounds = rounds
        self.priors = {}
        self.pending = WindowGaussian((0, 0), prior_mean, cov=np.asarray(prior_cov, dtype=float))
        self.reference = self.pending
        self.posteriors = {}

    def _join(self, i, graph):
        trackers = [j for j in graph.neighbors(i) if j in self.priors]
        if trackers:
            source = self.priors[trackers[0]]
            return WindowGaussian(source.span, source.mean.copy(), cov=source.cov, info=source.info)
        if self.pending is not None:
            return self.pending
        ref = self.reference
        return WindowGaussian(ref.span, ref.mean.copy(), info=np.zeros((ref.mean.size, ref.mean.size)))

    def step(self, t, members, sensors, measurements, graph, ledger=None):
        """ Estimate the window ending at ``t``

        :param t: Timestep
        :type t: int

        :param members: Relevant sensors :math:`V'_t`
        :type members: set[ int ]

        :param sensors: Sensor model per id
        :type sensors: dict[ int, SensorModel ]

        :param measurements: Measurement of the target per observing sensor at ``t``
        :type measurements: dict[ int, Measurement ]

        :param graph: Communication graph at ``t``
        :type graph: CommGraph

        :param ledger: Message ledger
        :type ledger: CommLedger

        :returns: Posterior per relevant sensor
        :rtype: dict[ int, WindowGaussian ]
        """
        dyn = dynamics_at(self.dyn, t)
        members = set(members)
        staying = {i: p for i, p in self.priors.items() if i in members}
        joined = {i: None for i in sorted(members - set(staying))}
        self.priors = staying
        for i in joined:
            joined[i] = self._join(i, graph)
        self.priors.update(joined)

        if not members:
            self.posteriors = {}
            if self.pending is not None:
                self.pending = central.predict_window(self.pending, dyn, t, self.window)
                self.reference = self.pending
            else:
                self.reference = central.predict_window(self.reference, dyn, t, self.window)
            return {}
        self.pending = None

        sub = netgraph.relevant_subgraph(graph, members, self.target_id).graph
        if not netgraph.is_connected(sub):
            logger.warning('Relevant subgraph of target ' + str(self.target_id) + ' at t=' + str(t)
                           + ' is disconnected, consensus runs per component')
        if ledger is not None:
            ledger.use_graph(sub)
        num_steps = t - self.priors[min(members)].span[0] + 1
        local = {i: local_information(sensors[i], measurements.get(i), num_steps) for i in sorted(members)}
        self.posteriors = ckf_estimate(self.priors, dyn, local, sub, self.rounds, len(members), t, ledger)
        self.priors = {i: central.shift_window(p, self.window) for i, p in self.posteriors.items()}
        self.reference = self.priors[min(self.priors)]
        return self.posteriors
