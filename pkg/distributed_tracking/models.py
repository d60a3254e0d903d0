""" Linear-Gaussian target dynamics and sensor models together with sampling of
ground truth trajectories and measurements.

All sampling functions take an explicit ``numpy.random.Generator`` so that runs
are reproducible and independent workers can own their own random streams.
Passing ``noise=False`` gives the exact noise free response.
"""
from dataclasses import dataclass

import numpy as np

from distributed_tracking.utils import linalg as la


@dataclass(frozen=True)
class TargetState:
    """ State vector ``x`` of a target at timestep ``t``"""
    x: np.ndarray
    t: int = 0

    def __post_init__(self):
        object.__setattr__(self, 'x', np.asarray(self.x, dtype=float).ravel())


@dataclass(frozen=True)
class LinearDynamics:
    """ Discrete dynamics :math:`x_{t} = A x_{t-1} + w`, :math:`w \\sim N(0, Q)`

    :param A: State transition matrix (n x n)
    :type A: np.ndarray

    :param Q: Process noise covariance (n x n), symmetric positive definite
    :type Q: np.ndarray
    """
    A: np.ndarray
    Q: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        Q = np.atleast_2d(np.asarray(self.Q, dtype=float))
        if A.shape[0] != A.shape[1] or Q.shape != A.shape:
            raise ValueError('A and Q must be square and of equal size, got '
                             + str(A.shape) + ' and ' + str(Q.shape))
        assert la.is_spd(Q), 'Process noise covariance Q must be symmetric positive definite'
        object.__setattr__(self, 'A', A)
        object.__setattr__(self, 'Q', Q)

    @property
    def n(self):
        return self.A.shape[0]

    def scaled(self, factor):
        """ Same transition with the process noise covariance multiplied by ``factor``"""
        return LinearDynamics(self.A, factor * self.Q)


@dataclass(frozen=True)
class SensorModel:
    """ Linear sensor :math:`y = C x + v`, :math:`v \\sim N(0, R)`

    :param sensor_id: Identifier of the sensor
    :type sensor_id: int

    :param C: Observation matrix (m x n), m >= 1
    :type C: np.ndarray

    :param R: Measurement noise covariance (m x m)
    :type R: np.ndarray
    """
    sensor_id: int
    C: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        C = np.atleast_2d(np.asarray(self.C, dtype=float))
        R = np.atleast_2d(np.asarray(self.R, dtype=float))
        if C.shape[0] < 1:
            raise ValueError('A sensor must measure at least one quantity')
        if R.shape != (C.shape[0], C.shape[0]):
            raise ValueError('R must be (m x m) with m=' + str(C.shape[0]) + ', got ' + str(R.shape))
        assert la.is_spd(R), 'Measurement noise covariance R must be symmetric positive definite'
        object.__setattr__(self, 'C', C)
        object.__setattr__(self, 'R', R)

    @property
    def m(self):
        return self.C.shape[0]

    @property
    def n(self):
        return self.C.shape[1]


@dataclass(frozen=True)
class Measurement:
    sensor_id: int
    target_id: int
    t: int
    y: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'y', np.asarray(self.y, dtype=float).ravel())


def _sample(cov, rng):
    return np.linalg.cholesky(cov) @ rng.standard_normal(cov.shape[0])


def dynamics_at(dyn, t):
    """ Dynamics for the transition from timestep ``t-1`` to ``t``.

    :param dyn: Either fixed dynamics or a function of the timestep returning the
                dynamics of that transition (time-varying :math:`A_t, Q_t`)
    :type dyn: LinearDynamics, Callable[[int], LinearDynamics]

    :param t: Timestep the transition ends in
    :type t: int

    :returns: The dynamics for that transition
    :rtype: LinearDynamics
    """
    if isinstance(dyn, LinearDynamics):
        return dyn
    return dyn(t)


def propagate(state, dyn, rng, noise=True):
    """ Propagate a target state one timestep through the dynamics

    :param state: State at timestep t
    :type state: TargetState

    :param dyn: Dynamics of the transition
    :type dyn: LinearDynamics

    :param rng: Random stream used for the process noise
    :type rng: np.random.Generator

    :param noise: If False, no process noise is added
    :type noise: bool

    :returns: State at timestep t+1
    :rtype: TargetState
    """
    if state.x.size != dyn.n:
        raise ValueError('State of length ' + str(state.x.size) + ' does not match dynamics with n=' + str(dyn.n))
    x = dyn.A @ state.x
    if noise:
        x = x + _sample(dyn.Q, rng)
    return TargetState(x, state.t + 1)


def observe(state, sensor, rng, noise=True, target_id=0):
    """ Measure a target state with a sensor

    :param state: Target state
    :type state: TargetState

    :param sensor: The measuring sensor
    :type sensor: SensorModel

    :param rng: Random stream used for the measurement noise
    :type rng: np.random.Generator

    :param noise: If False, no measurement noise is added
    :type noise: bool

    :param target_id: Label of the measured target
    :type target_id: int

    :returns: The measurement at the timestep of ``state``
    :rtype: Measurement
    """
    if state.x.size != sensor.n:
        raise ValueError('State of length ' + str(state.x.size) + ' does not match sensor '
                         + str(sensor.sensor_id) + ' with n=' + str(sensor.n))
    y = sensor.C @ state.x
    if noise:
        y = y + _sample(sensor.R, rng)
    return Measurement(sensor.sensor_id, target_id, state.t, y)


def double_integrator(dt, q_accel, dim=2):
    """ Double integrator (constant velocity) dynamics driven by white acceleration noise.
    The state is ordered as ``[position; velocity]``, each of length ``dim``, and

    .. math::

        A = \\begin{bmatrix} I & \\Delta t I \\\\ 0 & I \\end{bmatrix}, \\quad
        Q = q \\begin{bmatrix} \\Delta t^3/3 I & \\Delta t^2/2 I \\\\ \\Delta t^2/2 I & \\Delta t I \\end{bmatrix}

    :param dt: Timestep [s]
    :type dt: float

    :param q_accel: Acceleration noise intensity [m^2/s^3]
    :type q_accel: float

    :param dim: Spatial dimension
    :type dim: int

    :returns: The dynamics
    :rtype: LinearDynamics
    """
    if dt <= 0:
        raise ValueError('dt must be positive, got ' + str(dt))
    if q_accel <= 0:
        raise ValueError('q_accel must be positive, got ' + str(q_accel))
    eye = np.eye(dim)
    A = np.block([[eye, dt * eye], [np.zeros((dim, dim)), eye]])
    Q = q_accel * np.block([[dt ** 3 / 3 * eye, dt ** 2 / 2 * eye],
                            [dt ** 2 / 2 * eye, dt * eye]])
    return LinearDynamics(A, Q)


def position_sensor(sensor_id, sigma, dim=2):
    """ Sensor measuring the position part of a double integrator state with
    isotropic noise of standard deviation ``sigma`` [m]
    """
    if sigma <= 0:
        raise ValueError('sigma must be positive, got ' + str(sigma))
    C = np.hstack((np.eye(dim), np.zeros((dim, dim))))
    return SensorModel(sensor_id, C, sigma ** 2 * np.eye(dim))


def simulate_trajectory(x0, dyn, num_steps, rng, noise=True):
    """ Ground truth states for timesteps ``0, ..., num_steps-1`` starting in ``x0``

    :returns: Array of shape (num_steps, n)
    :rtype: np.ndarray
    """
    state = TargetState(x0, 0)
    states = [state.x]
    for t in range(1, num_steps):
        state = propagate(state, dynamics_at(dyn, t), rng, noise=noise)
        states.append(state.x)
    return np.array(states)
