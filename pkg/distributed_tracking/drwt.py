""" Distributed rolling window tracking: every relevant sensor holds a local version
of the window MAP problem and the sensors agree on the centralized solution through
ADMM iterations exchanged with their neighbors.

Agent i minimizes

.. math::

    J_i(x) = \\frac{1}{2} x^T \\Lambda_i x - \\eta_i^T x, \\quad
    \\Lambda_i = H_i^T W_i^{-1} H_i, \\quad \\eta_i = H_i^T W_i^{-1} z_i

where :math:`W_i` holds :math:`|V'| Q`, the sensor's own :math:`R_i` and its share
:math:`\\bar{P}_i` of the prior. One ADMM round is

.. math::

    p_i &\\leftarrow p_i + \\rho \\sum_{j \\in N_i} (x_i - x_j)

    (\\Lambda_i + 2 \\rho |N_i| I) x_i &\\leftarrow \\eta_i - p_i + \\rho \\sum_{j \\in N_i} (x_i + x_j)

With the ``'nominal'`` penalty the identity is replaced by a matrix :math:`M` that all
sensors compute alike: the local Hessian of a sensor with the nominal measurement
model. The agreement constraints and the fixed point stay the same, but the rounds
no longer slow down when :math:`\\Lambda_i` is badly conditioned.

Sensors that stop observing a target hand their local information over to a
neighbor that keeps tracking it before every sensor marginalizes the oldest
timestep of its window.
"""
import logging
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from distributed_tracking import central, netgraph
from distributed_tracking.central import JointMeasurement, WindowGaussian
from distributed_tracking.models import Measurement, dynamics_at
from distributed_tracking.utils import linalg as la

logger = logging.getLogger(__name__)

PRIMAL_UPDATES = ('dense', 'fast')
DISCONNECTED_POLICIES = ('error', 'components')
PENALTIES = ('identity', 'nominal')


class StaleFactorizationError(RuntimeError):
    pass


@dataclass
class DrwtConfig:
    """ Parameters of the ADMM iterations

    :param rho: Penalty parameter
    :type rho: float

    :param max_iters: Number of rounds per timestep (exactly this many if ``residual_tol`` is None)
    :type max_iters: int

    :param residual_tol: Stop once the largest difference between neighboring iterates and the
                         largest change of an iterate in the last round are both below this
                         value times the largest iterate entry (at least 1)
    :type residual_tol: float, None

    :param primal_update: ``'dense'`` Cholesky solve or ``'fast'`` block-tridiagonal solve
    :type primal_update: str

    :param on_disconnected: ``'error'`` raises on a disconnected relevant subgraph,
                            ``'components'`` iterates on each component separately
    :type on_disconnected: str

    :param joiner_epsilon: Regularization making singular local problems solvable
    :type joiner_epsilon: float

    :param penalty: ``'identity'`` penalizes disagreement with :math:`I`, ``'nominal'`` with the
                    shared matrix of :py:func:`penalty_metric`
    :type penalty: str
    """
    rho: float = 1.0
    max_iters: int = 50
    residual_tol: float = None
    primal_update: str = 'dense'
    on_disconnected: str = 'error'
    joiner_epsilon: float = 1.e-9
    penalty: str = 'identity'

    def __post_init__(self):
        if not self.rho > 0:
            raise ValueError('rho must be positive, got ' + str(self.rho))
        if self.max_iters < 1:
            raise ValueError('max_iters must be at least 1, got ' + str(self.max_iters))
        if self.primal_update not in PRIMAL_UPDATES:
            raise ValueError('primal_update must be one of ' + str(PRIMAL_UPDATES))
        if self.on_disconnected not in DISCONNECTED_POLICIES:
            raise ValueError('on_disconnected must be one of ' + str(DISCONNECTED_POLICIES))
        if self.penalty not in PENALTIES:
            raise ValueError('penalty must be one of ' + str(PENALTIES))


@dataclass
class AgentState:
    """ One sensor's state for one target during one timestep

    :param sensor_id: The sensor
    :param prior: Local window prior (mean and information)
    :param span: Timesteps of the window
    :param p: Dual variable
    :param x: Current iterate
    :param local_info: :math:`\\Lambda_i`, Hessian of the local cost
    :param local_vec: :math:`\\eta_i`
    :param anchor: Prior mean predicted over the window, target of the regularization
    :param epsilon: Regularization added in the local initialization (0 if not needed)
    :param metric: Penalty matrix shared by all agents, None for the identity
    """
    sensor_id: int
    prior: WindowGaussian
    span: tuple
    p: np.ndarray
    x: np.ndarray
    local_info: np.ndarray
    local_vec: np.ndarray
    anchor: np.ndarray
    epsilon: float = 0.0
    factor: object = None
    factor_key: tuple = None
    system_epsilon: float = 0.0
    metric: np.ndarray = None

    @property
    def n(self):
        return self.x.size // (self.span[1] - self.span[0] + 1)

    def posterior(self):
        """ Local estimate with the local information as its precision"""
        return WindowGaussian(self.span, self.x.copy(), info=self.local_info.copy())


@dataclass(frozen=True)
class HandoffEvent:
    t: int
    target_id: int
    leaver: int
    receiver: int
    info_trace: float
    conservation_error: float


def split_prior(central_prior, members):
    """ Split a prior equally among the relevant sensors: every sensor keeps the
    mean and gets :math:`\\bar{P}_i^{-1} = \\bar{P}^{-1} / |V'|`, so the local
    information sums to the central information.

    :param central_prior: The central window prior
    :type central_prior: WindowGaussian

    :param members: Relevant sensors
    :type members: Iterable[ int ]

    :returns: Local prior per sensor, with covariance and information
    :rtype: dict[ int, WindowGaussian ]
    """
    members = sorted(members)
    if len(members) == 0:
        raise ValueError('Cannot split a prior among zero sensors')
    k = len(members)
    info = central_prior.information() / k
    cov = central_prior.covariance() * k
    return {i: WindowGaussian(central_prior.span, central_prior.mean.copy(), cov=cov.copy(), info=info.copy())
            for i in members}


def local_init(sensor_id, prior, dyn, joint, n_members, t=None, epsilon=1.e-9):
    """ Local MAP estimate that starts the iterations, with zero dual.
    The dynamics are weighted by :math:`Q^{-1} / |V'|`. If the local normal matrix is
    singular (a sensor holding no prior information), ``epsilon * I`` pulls the
    unobserved directions towards the predicted prior mean; the stored local
    information excludes it.

    :param sensor_id: The sensor
    :type sensor_id: int

    :param prior: Local prior of the window
    :type prior: WindowGaussian

    :param dyn: Dynamics of the transition into ``t``
    :type dyn: LinearDynamics

    :param joint: Own measurement at ``t``, None if the sensor did not observe the target
    :type joint: JointMeasurement, None

    :param n_members: Number of relevant sensors :math:`|V'_t|`
    :type n_members: int

    :param t: Timestep, only needed if ``joint`` is None
    :type t: int

    :param epsilon: Regularization of singular local problems
    :type epsilon: float

    :returns: Initialized agent
    :rtype: AgentState
    """
    if n_members < 1:
        raise ValueError('n_members must be at least 1, got ' + str(n_members))
    t = joint.t if joint is not None else t
    local_dyn = dyn.scaled(n_members) if dyn is not None else None
    info, vec, span = central.window_information(prior, local_dyn, joint, t)
    anchor = central.extend_mean(prior, dyn, t)
    used_epsilon = epsilon if la.is_singular(info) else 0.0
    if used_epsilon > 0:
        logger.debug('Sensor ' + str(sensor_id) + ' has a singular local problem at t=' + str(t))
    try:
        factor = linalg.cho_factor(info + used_epsilon * np.eye(info.shape[0]), lower=True)
    except np.linalg.LinAlgError as err:
        raise np.linalg.LinAlgError('Local normal matrix of sensor ' + str(sensor_id) + ' at t=' + str(t)
                                    + ' is not positive definite (' + str(err) + ')')
    x = linalg.cho_solve(factor, vec + used_epsilon * anchor)
    return AgentState(sensor_id, prior, span, np.zeros(vec.size), x, info, vec, anchor, used_epsilon)


def nominal_information(prior, dyn, sensor, n_members, t):
    """ Local Hessian of a sensor holding ``prior`` and measuring with ``sensor`` at ``t``.
    Only the sensor's ``C`` and ``R`` enter, so no measurement value is needed.

    :returns: Information matrix and span of the window
    :rtype: np.ndarray, tuple[ int, int ]
    """
    joint = None
    if sensor is not None:
        meas = Measurement(sensor.sensor_id, -1, t, np.zeros(sensor.m))
        joint = JointMeasurement.stack([(sensor, meas)], sensor.n, t)
    local_dyn = dyn.scaled(n_members) if dyn is not None else None
    info, _, span = central.window_information(prior, local_dyn, joint, t)
    return info, span


def penalty_metric(info):
    """ Penalty matrix from a nominal local Hessian, None (identity penalty) if it is singular"""
    if la.is_singular(info):
        return None
    return la.symmetrize(info)


def factorize(agent, rho, n_neighbors, mode='dense', epsilon=1.e-9, metric=None):
    """ Factor :math:`\\Lambda_i + 2 \\rho |N_i| M` once for the timestep, with
    :math:`M = I` if ``metric`` is None

    :param agent: The agent, updated in place
    :type agent: AgentState

    :param rho: Penalty parameter
    :type rho: float

    :param n_neighbors: :math:`|N_i|` in the relevant subgraph
    :type n_neighbors: int

    :param mode: ``'dense'`` or ``'fast'``
    :type mode: str

    :param epsilon: Regularization if the matrix is singular (only possible without neighbors)
    :type epsilon: float

    :param metric: Penalty matrix, the same for every agent of the round; block-tridiagonal
                   for the ``'fast'`` mode
    :type metric: np.ndarray, None
    """
    if mode not in PRIMAL_UPDATES:
        raise ValueError('Unknown primal update ' + str(mode))
    size = agent.x.size
    if metric is not None and metric.shape != (size, size):
        raise ValueError('Penalty matrix of shape ' + str(metric.shape) + ' for agent ' + str(agent.sensor_id)
                         + ' with iterate of size ' + str(size))
    penalty = np.eye(size) if metric is None else metric
    mat = agent.local_info + 2 * rho * n_neighbors * penalty
    agent.system_epsilon = epsilon if n_neighbors == 0 and la.is_singular(mat) else 0.0
    mat = mat + agent.system_epsilon * np.eye(size)
    if mode == 'dense':
        agent.factor = linalg.cho_factor(mat, lower=True)
    else:
        agent.factor = la.BlockTridiagonalCholesky.from_dense(mat, agent.n)
    agent.metric = metric
    agent.factor_key = (rho, n_neighbors, mode)
    return agent


def _penalize(agent, vec):
    return vec if agent.metric is None else agent.metric @ vec


def _check_dims(agent, vectors):
    for v in vectors:
        if np.shape(v) != agent.x.shape:
            raise ValueError('Iterate of shape ' + str(np.shape(v)) + ' for agent ' + str(agent.sensor_id)
                             + ' with iterate of shape ' + str(agent.x.shape))


def dual_update(agent, neighbor_iterates, rho):
    """ :math:`p_i + \\rho \\sum_j (x_i - x_j)`, multiplied by the agent's penalty matrix if it has one

    :param agent: The agent
    :type agent: AgentState

    :param neighbor_iterates: Neighbors' iterates of the current round
    :type neighbor_iterates: list[ np.ndarray ]

    :param rho: Penalty parameter
    :type rho: float

    :returns: Updated dual
    :rtype: np.ndarray
    """
    _check_dims(agent, neighbor_iterates)
    diff = np.zeros_like(agent.x)
    for x_j in neighbor_iterates:
        diff += agent.x - x_j
    return agent.p + rho * _penalize(agent, diff)


def _primal_rhs(agent, p_new, neighbor_iterates, rho, mode):
    _check_dims(agent, neighbor_iterates)
    if agent.factor_key != (rho, len(neighbor_iterates), mode):
        raise StaleFactorizationError('Factorization of sensor ' + str(agent.sensor_id) + ' was made for '
                                      + str(agent.factor_key) + ', needed ' + str((rho, len(neighbor_iterates), mode)))
    total = np.zeros_like(agent.x)
    for x_j in neighbor_iterates:
        total += agent.x + x_j
    return agent.local_vec - p_new + agent.system_epsilon * agent.anchor + rho * _penalize(agent, total)


def primal_update_dense(agent, p_new, neighbor_iterates, rho):
    """ Closed form primal update using the cached dense Cholesky factor

    :param agent: The agent, factorized with :py:func:`factorize` in ``'dense'`` mode
    :type agent: AgentState

    :param p_new: Dual after this round's dual update
    :type p_new: np.ndarray

    :param neighbor_iterates: Neighbors' iterates of the current round
    :type neighbor_iterates: list[ np.ndarray ]

    :param rho: Penalty parameter
    :type rho: float

    :returns: New iterate
    :rtype: np.ndarray
    """
    rhs = _primal_rhs(agent, p_new, neighbor_iterates, rho, 'dense')
    return linalg.cho_solve(agent.factor, rhs)


def primal_update_fast(agent, p_new, neighbor_iterates, rho):
    """ Same update as :py:func:`primal_update_dense`, solved with the block-tridiagonal
    Cholesky factor of the window Hessian (forward pass over the timesteps, then
    backward substitution). Cost is linear in the window length.
    """
    rhs = _primal_rhs(agent, p_new, neighbor_iterates, rho, 'fast')
    return agent.factor.solve(rhs)


def primal_residual(agents, graph):
    """ :math:`\\max_{(i,j)} \\|x_i - x_j\\|_\\infty` over the edges of ``graph``, 0 without edges"""
    residual = 0.0
    for i, j in graph.edges:
        residual = max(residual, float(np.max(np.abs(agents[i].x - agents[j].x))))
    return residual


def iterate_change(agents, previous):
    """ Largest entry of the change of any iterate since ``previous``"""
    return max((float(np.max(np.abs(a.x - previous[i]))) for i, a in agents.items()), default=0.0)


def iterate_scale(agents):
    """ Largest iterate entry, at least 1; the stopping tolerance is relative to it"""
    return max([1.0] + [float(np.max(np.abs(a.x))) for a in agents.values()])


def admm_round(agents, graph, config, ledger=None):
    """ One synchronous round: every agent updates its dual and then its iterate from
    the neighbors' iterates of the previous round.

    :param agents: Agent per sensor of the relevant subgraph, updated in place
    :type agents: dict[ int, AgentState ]

    :param graph: Relevant subgraph
    :type graph: CommGraph

    :param config: ADMM parameters
    :type config: DrwtConfig

    :param ledger: If given, the iterate sent over every directed edge is recorded
    :type ledger: CommLedger

    :returns: The agents and the largest difference between neighboring iterates after the round
    :rtype: dict[ int, AgentState ], float
    """
    if set(agents) != set(graph.vertices):
        raise ValueError('Agents and graph vertices differ')
    if config.on_disconnected == 'error' and not netgraph.is_connected(graph):
        raise netgraph.DisconnectedGraphError('ADMM round on a disconnected relevant subgraph')
    update = primal_update_fast if config.primal_update == 'fast' else primal_update_dense

    if ledger is not None:
        round_index = ledger.new_round()
        for i in sorted(agents):
            for j in graph.neighbors(i):
                ledger.record_message(round_index, (i, j), netgraph.DRWT_ITERATE, agents[i].x.size)

    updates = {}
    for i in sorted(agents):
        neighbor_iterates = [agents[j].x for j in graph.neighbors(i)]
        p_new = dual_update(agents[i], neighbor_iterates, config.rho)
        updates[i] = (p_new, update(agents[i], p_new, neighbor_iterates, config.rho))
    for i, (p_new, x_new) in updates.items():
        agents[i].p = p_new
        agents[i].x = x_new
    return agents, primal_residual(agents, graph)


def saddle_point_duals(agents, x_star):
    """ Set the duals to :math:`p_i = \\eta_i - \\Lambda_i x^*` and all iterates to ``x_star``.
    With local priors summing to the central prior and ``x_star`` the centralized
    estimate, this is a fixed point of the iterations.
    """
    for agent in agents.values():
        agent.x = np.array(x_star, dtype=float)
        agent.p = agent.local_vec - agent.local_info @ agent.x
    return agents


def handoff(leaver, receiver, ledger=None):
    """ Fuse the local information of a sensor that stops tracking the target into a
    neighbor that keeps tracking it. The receiver's iterate is not changed.

    :param leaver: Agent leaving the relevant subgraph
    :type leaver: AgentState

    :param receiver: Neighboring agent that stays
    :type receiver: AgentState

    :param ledger: If given, the transferred symmetric matrix is recorded
    :type ledger: CommLedger

    :returns: The receiver
    :rtype: AgentState
    """
    if leaver.local_info.shape != receiver.local_info.shape or leaver.span != receiver.span:
        raise ValueError('Sensors ' + str(leaver.sensor_id) + ' and ' + str(receiver.sensor_id)
                         + ' do not estimate the same window')
    receiver.local_info = la.symmetrize(receiver.local_info + leaver.local_info)
    receiver.factor = None
    receiver.factor_key = None
    if ledger is not None:
        ledger.record_message(ledger.new_round(), (leaver.sensor_id, receiver.sensor_id), netgraph.HANDOFF_INFO,
                              netgraph.symmetric_scalars(leaver.x.size))
    return receiver


class DrwtNetwork:
    """ DRWT of one target across timesteps.

    The shared initial prior is held by the network until the target first has
    relevant sensors, where it is split equally among them. A sensor joining later
    starts without prior information and copies the prior mean of its lowest-id
    neighbor that already tracks the target.

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

    :param config: ADMM parameters
    :type config: DrwtConfig

    :param nominal_sensor: Measurement model behind the ``'nominal'`` penalty. Its
                           information is propagated alongside the local windows so that
                           every sensor derives the same penalty matrix.
    :type nominal_sensor: SensorModel
    """

    def __init__(self, target_id, prior_mean, prior_cov, dyn, window, config=None, nominal_sensor=None):
        self.target_id = target_id
        self.dyn = dyn
        self.window = window
        self.config = DrwtConfig() if config is None else config
        if self.config.penalty == 'nominal' and nominal_sensor is None:
            raise ValueError('The nominal penalty needs a nominal sensor')
        self.nominal_sensor = nominal_sensor
        self.nominal_prior = None
        self.nominal_info = None
        self.nominal_span = None
        self.pending = WindowGaussian((0, 0), prior_mean, cov=np.asarray(prior_cov, dtype=float))
        self.reference = self.pending
        self.priors = {}
        self.agents = {}
        self.posteriors = {}
        self.handoffs = []
        self.dropped_info_trace = 0.0
        self.iterations = []

    def _join(self, i, graph):
        trackers = [j for j in graph.neighbors(i) if j in self.priors]
        source = self.priors[trackers[0]] if trackers else self.reference
        size = source.mean.size
        return WindowGaussian(source.span, source.mean.copy(), info=np.zeros((size, size)))

    def _metric(self, dyn, n_members, t):
        """ Penalty matrix of the step, None for the identity"""
        self.nominal_info, self.nominal_span = None, None
        if self.config.penalty != 'nominal':
            return None
        self.nominal_info, self.nominal_span = nominal_information(self.nominal_prior, dyn, self.nominal_sensor,
                                                                   n_members, t)
        metric = penalty_metric(self.nominal_info)
        if metric is None:
            logger.debug('Nominal information of target ' + str(self.target_id) + ' at t=' + str(t)
                         + ' is singular, using the identity penalty')
        return metric

    def _drop(self, agent, t, reason):
        trace = float(np.trace(agent.local_info))
        logger.warning('Target ' + str(self.target_id) + ' loses the information of sensor ' + str(agent.sensor_id)
                       + ' at t=' + str(t) + ': ' + reason)
        self.dropped_info_trace += trace
        return trace

    def step(self, t, members, joints, graph, next_members=None, ledger=None):
        """ Run one timestep: local initialization, ADMM rounds, hand-offs and window shift

        :param t: Timestep
        :type t: int

        :param members: Relevant sensors :math:`V'_t`
        :type members: set[ int ]

        :param joints: Own measurement of the target per sensor observing it at ``t``
        :type joints: dict[ int, JointMeasurement ]

        :param graph: Communication graph at ``t``
        :type graph: CommGraph

        :param next_members: Relevant sensors :math:`V'_{t+1}`; sensors not in it hand
                             off their information. None if unknown (nobody leaves)
        :type next_members: set[ int ], None

        :param ledger: Message ledger
        :type ledger: CommLedger

        :returns: Local posterior per relevant sensor
        :rtype: dict[ int, WindowGaussian ]
        """
        dyn = dynamics_at(self.dyn, t)
        cfg = self.config
        members = set(members)
        for i in sorted(set(self.priors) - members):
            logger.warning('Sensor ' + str(i) + ' left target ' + str(self.target_id) + ' without hand-off')
            self.dropped_info_trace += float(np.trace(self.priors[i].information()))
            del self.priors[i]

        if not members:
            self.agents = {}
            self.posteriors = {}
            self.nominal_prior = None
            if self.pending is not None:
                self.pending = central.predict_window(self.pending, dyn, t, self.window)
                self.reference = self.pending
            else:
                self.reference = central.predict_window(self.reference, dyn, t, self.window)
            return {}

        if self.pending is not None:
            self.priors = split_prior(self.pending, members)
            self.pending = None
            self.nominal_prior = self.priors[min(members)]
        else:
            for i in sorted(members - set(self.priors)):
                self.priors[i] = self._join(i, graph)
            if self.nominal_prior is None:
                self.nominal_prior = self.priors[min(members)]

        sub = netgraph.relevant_subgraph(graph, members, self.target_id).graph
        if not netgraph.is_connected(sub):
            if cfg.on_disconnected == 'error':
                raise netgraph.DisconnectedGraphError('Relevant subgraph of target ' + str(self.target_id)
                                                      + ' is disconnected at t=' + str(t))
            logger.warning('Relevant subgraph of target ' + str(self.target_id) + ' at t=' + str(t)
                           + ' has ' + str(len(sub.components())) + ' components, iterating on each')

        metric = self._metric(dyn, len(members), t)
        agents = {}
        for i in sorted(members):
            agents[i] = local_init(i, self.priors[i], dyn, joints.get(i), len(members), t, cfg.joiner_epsilon)
            factorize(agents[i], cfg.rho, sub.degree(i), cfg.primal_update, cfg.joiner_epsilon, metric)
        if ledger is not None:
            ledger.use_graph(sub)

        rounds, residual = 0, primal_residual(agents, sub)
        if sub.edges:
            for _ in range(cfg.max_iters):
                previous = {i: a.x for i, a in agents.items()}
                _, residual = admm_round(agents, sub, cfg, ledger)
                rounds += 1
                residual = max(residual, iterate_change(agents, previous))
                if cfg.residual_tol is not None and residual < cfg.residual_tol * iterate_scale(agents):
                    break
        self.iterations.append((t, rounds, residual))
        logger.debug('Target ' + str(self.target_id) + ' t=' + str(t) + ': ' + str(rounds)
                     + ' rounds, residual ' + str(residual))
        self.posteriors = {i: a.posterior() for i, a in agents.items()}

        staying = set(members)
        if next_members is not None:
            staying = members & set(next_members)
            for i in sorted(members - staying):
                self._handoff(t, agents, i, sub, staying, ledger)
        self.agents = agents

        self.priors = {i: central.shift_window(WindowGaussian(agents[i].span, agents[i].x, info=agents[i].local_info),
                                               self.window)
                       for i in sorted(staying)}
        if self.nominal_info is not None:
            self.nominal_prior = central.shift_window(
                WindowGaussian(self.nominal_span, np.zeros(self.nominal_info.shape[0]), info=self.nominal_info),
                self.window)
        if self.priors:
            self.reference = self.priors[min(self.priors)]
        else:
            first = self.posteriors[min(self.posteriors)]
            zero = np.zeros_like(first.info)
            self.reference = central.shift_window(WindowGaussian(first.span, first.mean, info=zero), self.window)
        return self.posteriors

    def _handoff(self, t, agents, i, sub, staying, ledger):
        before = sum(a.local_info for a in agents.values())
        eligible = [j for j in sub.neighbors(i) if j in staying]
        leaver = agents.pop(i)
        info_trace = float(np.trace(leaver.local_info))
        if eligible:
            handoff(leaver, agents[eligible[0]], ledger)
            after = sum(a.local_info for a in agents.values())
            error = float(np.linalg.norm(before - after) / max(np.linalg.norm(before), 1.e-300))
            receiver = eligible[0]
        else:
            self._drop(leaver, t, 'no neighbor keeps tracking the target')
            error, receiver = 0.0, None
        self.handoffs.append(HandoffEvent(t, self.target_id, i, receiver, info_trace, error))

    def information_sum(self):
        """ :math:`\\sum_i \\hat{P}_i^{-1}` over the local posteriors of the last step, before hand-off"""
        if not self.posteriors:
            return None
        return sum(p.info for p in self.posteriors.values())

    def prior_information_sum(self):
        """ :math:`\\sum_i \\bar{P}_i^{-1}` of the priors for the next step"""
        if self.pending is not None:
            return self.pending.information()
        if not self.priors:
            return None
        return sum(p.information() for p in self.priors.values())

    def network_posterior(self):
        """ Average of the agents' estimates with the summed local information"""
        if not self.posteriors:
            return None
        posteriors = list(self.posteriors.values())
        mean = np.mean([p.mean for p in posteriors], axis=0)
        return WindowGaussian(posteriors[0].span, mean, info=self.information_sum())


def drwt_step(network, t, members, joints, graph, next_members=None, ledger=None):
    """ One DRWT timestep of ``network``, see :py:meth:`DrwtNetwork.step`"""
    return network.step(t, members, joints, graph, next_members, ledger)
