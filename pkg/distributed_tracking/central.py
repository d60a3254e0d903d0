""" Centralized MAP estimation of a single target: the rolling window estimator
and the batch, Kalman filter and Rauch-Tung-Striebel references it is checked
against.

A window posterior over timesteps :math:`[t-T, t]` is obtained from the block
system

.. math::

    H = \\begin{bmatrix} F_t \\\\ G_t \\\\ \\Pi_t \\end{bmatrix}, \\quad
    z = \\begin{bmatrix} 0 \\\\ y_t \\\\ \\bar{x} \\end{bmatrix}, \\quad
    W = \\mathrm{blkdiag}(Q, R, \\bar{P})

as :math:`\\hat{x} = (H^T W^{-1} H)^{-1} H^T W^{-1} z` with covariance
:math:`(H^T W^{-1} H)^{-1}`. Marginalizing the oldest timestep gives the prior of
the next step.
"""
import logging
from collections import namedtuple
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from distributed_tracking.models import dynamics_at
from distributed_tracking.utils import linalg as la

logger = logging.getLogger(__name__)


@dataclass
class WindowGaussian:
    """ Gaussian over the stacked states of the timesteps ``span[0], ..., span[1]``.
    Either the covariance, the information matrix, or both must be given. A
    window kept in information form may have singular (even zero) information.

    :param span: First and last timestep covered
    :type span: tuple[ int, int ]

    :param mean: Stacked mean, oldest timestep first
    :type mean: np.ndarray

    :param cov: Covariance matrix
    :type cov: np.ndarray, None

    :param info: Information (inverse covariance) matrix
    :type info: np.ndarray, None
    """
    span: tuple
    mean: np.ndarray
    cov: np.ndarray = None
    info: np.ndarray = None

    def __post_init__(self):
        self.span = (int(self.span[0]), int(self.span[1]))
        if self.span[1] < self.span[0]:
            raise ValueError('Invalid span ' + str(self.span))
        self.mean = np.asarray(self.mean, dtype=float).ravel()
        if self.cov is None and self.info is None:
            raise ValueError('A WindowGaussian needs a covariance or an information matrix')
        if self.mean.size % self.num_steps != 0:
            raise ValueError('Mean of length ' + str(self.mean.size) + ' cannot cover '
                             + str(self.num_steps) + ' timesteps')
        for mat in (self.cov, self.info):
            if mat is not None and mat.shape != (self.mean.size, self.mean.size):
                raise ValueError('Matrix of shape ' + str(mat.shape) + ' does not match mean of length '
                                 + str(self.mean.size))

    @property
    def num_steps(self):
        return self.span[1] - self.span[0] + 1

    @property
    def state_dim(self):
        return self.mean.size // self.num_steps

    def covariance(self):
        return self.cov if self.cov is not None else la.cho_inverse(self.info)

    def information(self):
        return self.info if self.info is not None else la.cho_inverse(self.cov)

    def block(self, t):
        """ Slice of timestep ``t`` in the stacked vectors"""
        if not self.span[0] <= t <= self.span[1]:
            raise ValueError('Timestep ' + str(t) + ' outside span ' + str(self.span))
        return la.block_slice(t - self.span[0], self.state_dim)

    def marginal(self, t):
        """ Mean and covariance of the state at timestep ``t``"""
        s = self.block(t)
        return self.mean[s], self.covariance()[s, s]


@dataclass(frozen=True)
class JointMeasurement:
    """ Measurements of all observers at timestep ``t`` stacked row-wise:
    :math:`C = [C_1; C_2; ...]`, :math:`R = \\mathrm{blkdiag}(R_1, R_2, ...)`, :math:`y = [y_1; y_2; ...]`.
    ``m = 0`` (no observers) is allowed.
    """
    t: int
    C: np.ndarray
    R: np.ndarray
    y: np.ndarray
    sensor_ids: tuple = field(default=())

    @property
    def m(self):
        return self.y.size

    @property
    def n(self):
        return self.C.shape[1]

    @classmethod
    def empty(cls, n, t):
        return cls(t, np.zeros((0, n)), np.zeros((0, 0)), np.zeros(0))

    @classmethod
    def stack(cls, pairs, n, t):
        """ Stack measurements of several sensors

        :param pairs: Sensor and its measurement at timestep ``t``
        :type pairs: Iterable[ tuple[ SensorModel, Measurement ] ]

        :param n: State dimension
        :type n: int

        :param t: Timestep all measurements must belong to
        :type t: int

        :returns: The joint measurement
        :rtype: JointMeasurement
        """
        pairs = list(pairs)
        if len(pairs) == 0:
            return cls.empty(n, t)
        for sensor, meas in pairs:
            if meas.t != t:
                raise ValueError('Measurement of sensor ' + str(meas.sensor_id) + ' is from timestep '
                                 + str(meas.t) + ', expected ' + str(t))
            if sensor.sensor_id != meas.sensor_id:
                raise ValueError('Measurement of sensor ' + str(meas.sensor_id) + ' paired with sensor '
                                 + str(sensor.sensor_id))
            if sensor.n != n or meas.y.size != sensor.m:
                raise ValueError('Dimension mismatch for sensor ' + str(sensor.sensor_id))
        C = np.vstack([sensor.C for sensor, _ in pairs])
        R = linalg.block_diag(*[sensor.R for sensor, _ in pairs])
        y = np.concatenate([meas.y for _, meas in pairs])
        return cls(t, C, R, y, tuple(sensor.sensor_id for sensor, _ in pairs))

    def information(self):
        """ Information contribution :math:`C^T R^{-1} C` and :math:`C^T R^{-1} y`.
        Raises ``np.linalg.LinAlgError`` if R is singular.
        """
        n = self.n
        if self.m == 0:
            return np.zeros((n, n)), np.zeros(n)
        factor = linalg.cho_factor(self.R, lower=True)
        ct_ri = linalg.cho_solve(factor, self.C).T
        return la.symmetrize(ct_ri @ self.C), ct_ri @ self.y


@dataclass
class BlockSystem:
    """ The block matrices of the window MAP problem. Row blocks of ``H`` and ``z``
    are (dynamics, measurements, prior); absent blocks are left out. ``W`` is
    kept blockwise, a block may be given by its inverse only (prior in information form).
    """
    H: np.ndarray
    z: np.ndarray
    W_blocks: list
    W_info_blocks: list
    span: tuple

    @property
    def W(self):
        blocks = [w if w is not None else la.cho_inverse(w_info)
                  for w, w_info in zip(self.W_blocks, self.W_info_blocks)]
        return linalg.block_diag(*blocks)

    def row_slices(self):
        start = 0
        for w, w_info in zip(self.W_blocks, self.W_info_blocks):
            size = (w if w is not None else w_info).shape[0]
            yield slice(start, start + size)
            start += size


def _window_span(prior, t):
    """ Window span and whether it contains a dynamics transition"""
    t0, t1 = prior.span
    if t1 == t - 1:
        return (t0, t), True
    if t1 == t:
        return (t0, t), False
    raise ValueError('Prior over ' + str(prior.span) + ' cannot be used for a window ending at ' + str(t))


def assemble_block_system(prior, dyn, joint):
    """ Assemble :math:`H`, :math:`z` and :math:`W` for the window ending at ``joint.t``.

    :param prior: Prior over :math:`[t-T, t-1]`, or over a span ending at ``t``
                  (first window only, no dynamics band)
    :type prior: WindowGaussian

    :param dyn: Dynamics of the transition into ``t``
    :type dyn: LinearDynamics

    :param joint: All measurements at ``t``
    :type joint: JointMeasurement

    :returns: The block system
    :rtype: BlockSystem
    """
    t = joint.t
    span, has_dynamics = _window_span(prior, t)
    n = prior.state_dim
    if joint.n != n or (has_dynamics and dyn.n != n):
        raise ValueError('Dimension mismatch between prior (n=' + str(n) + '), dynamics and measurements')
    if not has_dynamics and joint.m == 0:
        raise ValueError('Window ending at ' + str(t) + ' has neither a dynamics band nor measurements')

    num_steps = span[1] - span[0] + 1
    size = n * num_steps
    H_rows, z_rows, W_blocks, W_info_blocks = [], [], [], []
    if has_dynamics:
        F = np.zeros((n, size))
        F[:, la.block_slice(num_steps - 2, n)] = -dyn.A
        F[:, la.block_slice(num_steps - 1, n)] = np.eye(n)
        H_rows.append(F)
        z_rows.append(np.zeros(n))
        W_blocks.append(dyn.Q)
        W_info_blocks.append(None)
    if joint.m > 0:
        G = np.zeros((joint.m, size))
        G[:, la.block_slice(num_steps - 1, n)] = joint.C
        H_rows.append(G)
        z_rows.append(joint.y)
        W_blocks.append(joint.R)
        W_info_blocks.append(None)
    Pi = np.zeros((prior.mean.size, size))
    Pi[:, :prior.mean.size] = np.eye(prior.mean.size)
    H_rows.append(Pi)
    z_rows.append(prior.mean)
    W_blocks.append(prior.cov)
    W_info_blocks.append(prior.info if prior.cov is None else None)

    return BlockSystem(np.vstack(H_rows), np.concatenate(z_rows), W_blocks, W_info_blocks, span)


def normal_equations(system):
    """ :math:`H^T W^{-1} H` and :math:`H^T W^{-1} z`, applying :math:`W^{-1}` block by block"""
    size = system.H.shape[1]
    info = np.zeros((size, size))
    vec = np.zeros(size)
    for rows, w, w_info in zip(system.row_slices(), system.W_blocks, system.W_info_blocks):
        H_b = system.H[rows]
        z_b = system.z[rows]
        if w_info is not None:
            wi_H, wi_z = w_info @ H_b, w_info @ z_b
        else:
            factor = linalg.cho_factor(w, lower=True)
            wi_H, wi_z = linalg.cho_solve(factor, H_b), linalg.cho_solve(factor, z_b)
        info += H_b.T @ wi_H
        vec += H_b.T @ wi_z
    return la.symmetrize(info), vec


def window_information(prior, dyn, joint=None, t=None):
    """ Normal equations of the window problem built block by block, without
    forming ``H``. Gives the same result as ``normal_equations(assemble_block_system(...))``
    but also accepts a window with neither measurements nor dynamics (prior only) and
    priors with singular information.

    :param prior: Prior of the window
    :type prior: WindowGaussian

    :param dyn: Dynamics of the transition into ``t``
    :type dyn: LinearDynamics

    :param joint: Measurements at ``t``; None for no measurements
    :type joint: JointMeasurement, None

    :param t: Last timestep of the window, only needed if ``joint`` is None
    :type t: int

    :returns: Information matrix, information vector and span of the window
    :rtype: np.ndarray, np.ndarray, tuple[ int, int ]
    """
    t = joint.t if joint is not None else t
    span, has_dynamics = _window_span(prior, t)
    n = prior.state_dim
    num_steps = span[1] - span[0] + 1
    size = n * num_steps
    info = np.zeros((size, size))
    vec = np.zeros(size)

    prior_info = prior.information()
    info[:prior.mean.size, :prior.mean.size] += prior_info
    vec[:prior.mean.size] += prior_info @ prior.mean

    last = la.block_slice(num_steps - 1, n)
    if has_dynamics:
        prev = la.block_slice(num_steps - 2, n)
        q_inv = la.cho_inverse(dyn.Q)
        qi_A = q_inv @ dyn.A
        info[prev, prev] += dyn.A.T @ qi_A
        info[prev, last] -= qi_A.T
        info[last, prev] -= qi_A
        info[last, last] += q_inv
    if joint is not None and joint.m > 0:
        if joint.n != n:
            raise ValueError('Measurement of state dimension ' + str(joint.n) + ' for window with n=' + str(n))
        meas_info, meas_vec = joint.information()
        info[last, last] += meas_info
        vec[last] += meas_vec
    return la.symmetrize(info), vec, span


def solve_information(info, vec, span):
    """ Solve the normal equations by Cholesky factorization

    :returns: The posterior, carrying both covariance and information
    :rtype: WindowGaussian
    """
    try:
        factor = linalg.cho_factor(info, lower=True)
    except np.linalg.LinAlgError as err:
        raise np.linalg.LinAlgError('Normal matrix of window ' + str(span) + ' is not positive definite ('
                                    + str(err) + ')')
    mean = linalg.cho_solve(factor, vec)
    cov = la.symmetrize(linalg.cho_solve(factor, np.eye(info.shape[0])))
    return WindowGaussian(span, mean, cov=cov, info=info)


def solve_map_window(system):
    """ MAP estimate and covariance of the window

    :param system: The assembled block system
    :type system: BlockSystem

    :returns: Posterior over the window
    :rtype: WindowGaussian
    """
    info, vec = normal_equations(system)
    return solve_information(info, vec, system.span)


def shift_window(posterior, window=None):
    """ Drop the oldest timestep of a window posterior to obtain the prior of the
    next step. In covariance form the lower right block of the covariance is
    retained, in information form the oldest block is eliminated by its Schur complement.

    :param posterior: Posterior over :math:`[t-T, t]`
    :type posterior: WindowGaussian

    :param window: Window length T. If given, a posterior covering at most T steps
                   (warm-up) is returned unchanged as the next prior
    :type window: int, None

    :returns: Prior over :math:`[t-T+1, t]`
    :rtype: WindowGaussian
    """
    if window is not None:
        if window < 1:
            raise ValueError('Window length must be at least 1, got ' + str(window))
        if posterior.num_steps <= window:
            return posterior
    if posterior.num_steps < 2:
        raise ValueError('Cannot shift a window of a single timestep')
    n = posterior.state_dim
    span = (posterior.span[0] + 1, posterior.span[1])
    mean = posterior.mean[n:].copy()
    if posterior.cov is not None:
        return WindowGaussian(span, mean, cov=posterior.cov[n:, n:].copy())
    info, _ = la.marginalize_first_block(posterior.info, None, n)
    return WindowGaussian(span, mean, info=info)


def extend_mean(prior, dyn, t):
    """ Prior mean extended to the window ending at ``t`` by predicting the newest timestep"""
    _, has_dynamics = _window_span(prior, t)
    if not has_dynamics:
        return prior.mean.copy()
    n = prior.state_dim
    return np.concatenate((prior.mean, dyn.A @ prior.mean[-n:]))


def predict_window(prior, dyn, t, window):
    """ Prior of the step after ``t`` when nothing is measured at ``t``.
    A prior in information form only is moved forward by extending its mean with the dynamics.

    :param prior: Prior of the window ending at ``t``
    :type prior: WindowGaussian

    :param dyn: Dynamics of the transition into ``t``
    :type dyn: LinearDynamics

    :param t: Last timestep of the window
    :type t: int

    :param window: Window length T
    :type window: int

    :returns: Prior of the window ending at ``t+1``
    :rtype: WindowGaussian
    """
    info, vec, span = window_information(prior, dyn, None, t)
    if prior.cov is not None:
        posterior = solve_information(info, vec, span)
    else:
        posterior = WindowGaussian(span, extend_mean(prior, dyn, t), info=info)
    return shift_window(posterior, window)


def kalman_step(mean, cov, dyn, joint):
    """ Kalman filter predict and update

    :param mean: Filtered mean at t-1 (or the prior of x_t if ``dyn`` is None)
    :type mean: np.ndarray

    :param cov: Filtered covariance at t-1
    :type cov: np.ndarray

    :param dyn: Dynamics into t. If None, no prediction is made
    :type dyn: LinearDynamics, None

    :param joint: Measurements at t, None or ``m = 0`` for prediction only
    :type joint: JointMeasurement, None

    :returns: Filtered mean and covariance at t
    :rtype: np.ndarray, np.ndarray
    """
    mean = np.asarray(mean, dtype=float)
    if dyn is not None:
        mean = dyn.A @ mean
        cov = dyn.A @ cov @ dyn.A.T + dyn.Q
    if joint is None or joint.m == 0:
        return mean, la.symmetrize(cov)

    C = joint.C
    innovation_cov = C @ cov @ C.T + joint.R
    try:
        factor = linalg.cho_factor(innovation_cov, lower=True)
    except np.linalg.LinAlgError as err:
        raise np.linalg.LinAlgError('Singular innovation covariance at t=' + str(joint.t) + ' (' + str(err) + ')')
    gain = linalg.cho_solve(factor, C @ cov).T
    mean = mean + gain @ (joint.y - C @ mean)
    # Joseph form
    i_kc = np.eye(mean.size) - gain @ C
    cov = i_kc @ cov @ i_kc.T + gain @ joint.R @ gain.T
    return mean, la.symmetrize(cov)


FilterResult = namedtuple('FilterResult', ['means', 'covs', 'predicted_means', 'predicted_covs'])


def kalman_filter(prior_mean, prior_cov, dyn, joints):
    """ Run the Kalman filter over ``joints[0], joints[1], ...``, where the prior
    is that of the state at the first timestep.

    :returns: Filtered and predicted means and covariances per timestep
    :rtype: FilterResult
    """
    means, covs, pred_means, pred_covs = [], [], [], []
    mean, cov = np.asarray(prior_mean, dtype=float), np.asarray(prior_cov, dtype=float)
    for k, joint in enumerate(joints):
        if k > 0:
            d = dynamics_at(dyn, joint.t)
            mean, cov = d.A @ mean, la.symmetrize(d.A @ cov @ d.A.T + d.Q)
        pred_means.append(mean)
        pred_covs.append(cov)
        mean, cov = kalman_step(mean, cov, None, joint)
        means.append(mean)
        covs.append(cov)
    return FilterResult(means, covs, pred_means, pred_covs)


def rts_smooth(means, covs, dyn, t0=0):
    """ Rauch-Tung-Striebel backward pass over filtered estimates

    :param means: Filtered means of timesteps ``t0, t0+1, ...``
    :type means: list[ np.ndarray ]

    :param covs: Filtered covariances
    :type covs: list[ np.ndarray ]

    :param dyn: Dynamics (fixed or per timestep)
    :type dyn: LinearDynamics, Callable

    :param t0: Timestep of the first entry
    :type t0: int

    :returns: Smoothed means and covariances
    :rtype: list[ np.ndarray ], list[ np.ndarray ]
    """
    s_means = [np.array(m, dtype=float) for m in means]
    s_covs = [np.array(c, dtype=float) for c in covs]
    for k in range(len(means) - 2, -1, -1):
        d = dynamics_at(dyn, t0 + k + 1)
        pred_cov = la.symmetrize(d.A @ covs[k] @ d.A.T + d.Q)
        gain = linalg.cho_solve(linalg.cho_factor(pred_cov, lower=True), d.A @ covs[k]).T
        s_means[k] = means[k] + gain @ (s_means[k + 1] - d.A @ means[k])
        s_covs[k] = la.symmetrize(covs[k] + gain @ (s_covs[k + 1] - pred_cov) @ gain.T)
    return s_means, s_covs


def batch_map(prior_mean, prior_cov, dyn, joints):
    """ Full horizon MAP estimate of the trajectory over ``0, ..., len(joints)-1``
    given the prior of the first state and all measurements, solved densely.

    :returns: Posterior over the whole horizon
    :rtype: WindowGaussian
    """
    n = np.asarray(prior_mean).size
    num_steps = len(joints)
    size = n * num_steps
    info = np.zeros((size, size))
    vec = np.zeros(size)
    prior_info = la.cho_inverse(np.asarray(prior_cov, dtype=float))
    info[:n, :n] += prior_info
    vec[:n] += prior_info @ prior_mean
    for k, joint in enumerate(joints):
        cur = la.block_slice(k, n)
        if k > 0:
            d = dynamics_at(dyn, joint.t)
            prev = la.block_slice(k - 1, n)
            band = np.zeros((n, size))
            band[:, prev] = -d.A
            band[:, cur] = np.eye(n)
            info += band.T @ linalg.cho_solve(linalg.cho_factor(d.Q, lower=True), band)
        meas_info, meas_vec = joint.information()
        info[cur, cur] += meas_info
        vec[cur] += meas_vec
    t_first = joints[0].t if num_steps > 0 else 0
    return solve_information(la.symmetrize(info), vec, (t_first, t_first + num_steps - 1))


class RollingWindowEstimator:
    """ Centralized rolling window MAP estimator. While fewer than T+1 timesteps have
    passed the window spans ``[0, t]`` and grows; afterwards it spans ``[t-T, t]``.

    :param prior_mean: Prior mean of the state at timestep 0
    :type prior_mean: np.ndarray

    :param prior_cov: Prior covariance of the state at timestep 0
    :type prior_cov: np.ndarray

    :param dyn: Dynamics (fixed or per timestep)
    :type dyn: LinearDynamics, Callable

    :param window: Window length T >= 1
    :type window: int
    """

    def __init__(self, prior_mean, prior_cov, dyn, window):
        if window < 1:
            raise ValueError('Window length must be at least 1, got ' + str(window))
        self.prior = WindowGaussian((0, 0), prior_mean, cov=np.asarray(prior_cov, dtype=float))
        self.dyn = dyn
        self.window = window
        self.posterior = None
        self.t = -1

    def step(self, joint):
        """ Estimate the window ending at ``joint.t``, which must be the next timestep"""
        if joint.t != self.t + 1:
            raise ValueError('Expected measurements of timestep ' + str(self.t + 1) + ', got ' + str(joint.t))
        if joint.t == 0 and joint.m == 0:
            prior = self.prior
            posterior = WindowGaussian(prior.span, prior.mean, cov=prior.covariance(), info=prior.information())
        else:
            system = assemble_block_system(self.prior, dynamics_at(self.dyn, joint.t), joint)
            posterior = solve_map_window(system)
        self.posterior = posterior
        self.prior = shift_window(posterior, self.window)
        self.t = joint.t
        return posterior
