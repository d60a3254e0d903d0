""" Programmatic acceptance checks: estimator equivalences on random instances,
ADMM fixed point and convergence, the block-tridiagonal primal update, the
bits-versus-error ordering, Monte Carlo unbiasedness and conservativeness,
hand-off conservation and determinism of the output files.
"""
import copy
import dataclasses
import logging
import math
import os
import tempfile
import time
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from distributed_tracking import central, drwt, io, models, netgraph
from distributed_tracking.central import JointMeasurement, WindowGaussian
from distributed_tracking.harness import benchmark, episode
from distributed_tracking.harness.config import ScenarioConfig
from distributed_tracking.harness.scenario import generate_scenario
from distributed_tracking.utils import linalg as la

logger = logging.getLogger(__name__)

# Checks that depend on the speed of the machine; they are logged but not written
TIMED_CHECKS = ('fast_primal_update_linear_cost',)

# Instance counts of the full run and of a quick run
COUNTS = {'full': {'oracle': 100, 'fixed_point': 50, 'fast': 200, 'timing_repeats': 30, 'convergence': 100,
                   'sweep': 100, 'mc': 200, 'mc_steps': 5},
          'quick': {'oracle': 10, 'fixed_point': 5, 'fast': 20, 'timing_repeats': 5, 'convergence': 3,
                    'sweep': 2, 'mc': 10, 'mc_steps': 3}}


@dataclass(frozen=True)
class CheckResult:
    check: int
    name: str
    passed: bool
    value: float
    threshold: float


def random_spd(rng, size, scale=1.0):
    """ Well conditioned random symmetric positive definite matrix"""
    B = rng.standard_normal((size, size))
    return scale * la.symmetrize(B @ B.T / size + np.eye(size))


def random_dynamics(rng, n):
    A = np.eye(n) + 0.3 * rng.standard_normal((n, n)) / math.sqrt(n)
    return models.LinearDynamics(A, random_spd(rng, n, 0.5))


def random_sensor(rng, sensor_id, n, m=None):
    m = int(rng.integers(1, n + 1)) if m is None else m
    return models.SensorModel(sensor_id, rng.standard_normal((m, n)), random_spd(rng, m))


def random_joint(rng, sensor, t, target_id=0):
    """ Measurement of ``sensor`` at ``t`` and its stacked form"""
    meas = models.Measurement(sensor.sensor_id, target_id, t, rng.standard_normal(sensor.m))
    return meas, JointMeasurement.stack([(sensor, meas)], sensor.n, t)


def random_block_tridiagonal_spd(rng, n, num_blocks):
    """ :math:`L L^T + I` with ``L`` lower block-bidiagonal"""
    size = n * num_blocks
    L = np.zeros((size, size))
    for k in range(num_blocks):
        L[la.block_slice(k, n), la.block_slice(k, n)] = rng.standard_normal((n, n))
        if k > 0:
            L[la.block_slice(k, n), la.block_slice(k - 1, n)] = rng.standard_normal((n, n))
    return la.symmetrize(L @ L.T / n + np.eye(size))


def relative_error(a, b):
    return float(np.linalg.norm(np.asarray(a) - np.asarray(b)) / max(np.linalg.norm(b), 1.e-300))


def _whitened_lstsq(system):
    chol = np.linalg.cholesky(system.W)
    H = linalg.solve_triangular(chol, system.H, lower=True)
    z = linalg.solve_triangular(chol, system.z, lower=True)
    return np.linalg.lstsq(H, z, rcond=None)[0]


def check_oracle_equivalence(rng, n_instances=100):
    """ Window MAP against whitened least squares, its newest marginal against the
    Kalman filter and the whole window against the RTS smoother
    """
    worst = {'lstsq': 0.0, 'kalman': 0.0, 'rts': 0.0}
    for _ in range(n_instances):
        n = int(rng.integers(1, 7))
        window = int(rng.integers(1, 9))
        dyn = random_dynamics(rng, n)
        prior_mean, prior_cov = rng.standard_normal(n), random_spd(rng, n)
        sensor = random_sensor(rng, 0, n)
        estimator = central.RollingWindowEstimator(prior_mean, prior_cov, dyn, window)
        joints = []
        for t in range(window + int(rng.integers(1, 4))):
            joints.append(random_joint(rng, sensor, t)[1])
            system = central.assemble_block_system(estimator.prior, dyn, joints[-1])
            posterior = estimator.step(joints[-1])
            worst['lstsq'] = max(worst['lstsq'], relative_error(posterior.mean, _whitened_lstsq(system)))

            filtered = central.kalman_filter(prior_mean, prior_cov, dyn, joints)
            mean, cov = posterior.marginal(t)
            worst['kalman'] = max(worst['kalman'], relative_error(mean, filtered.means[-1]),
                                  relative_error(cov, filtered.covs[-1]))

            t0 = posterior.span[0]
            s_means, _ = central.rts_smooth(filtered.means[t0:], filtered.covs[t0:], dyn, t0)
            worst['rts'] = max(worst['rts'], relative_error(posterior.mean, np.concatenate(s_means)))
    return [CheckResult(1, 'window_map_vs_whitened_lstsq', worst['lstsq'] <= 1.e-9, worst['lstsq'], 1.e-9),
            CheckResult(1, 'window_marginal_vs_kalman', worst['kalman'] <= 1.e-10, worst['kalman'], 1.e-10),
            CheckResult(1, 'rolling_window_vs_rts', worst['rts'] <= 1.e-8, worst['rts'], 1.e-8)]


def random_consensus_problem(rng, n_nodes, n, window):
    """ Random prior over ``[0, window-1]``, dynamics into ``window`` and a measurement
    at ``window`` for about two thirds of the nodes

    :returns: Prior, dynamics, own joint measurement per observing node and the stacked joint
    :rtype: WindowGaussian, LinearDynamics, dict[ int, JointMeasurement ], JointMeasurement
    """
    size = n * window
    prior = WindowGaussian((0, window - 1), rng.standard_normal(size), cov=random_spd(rng, size))
    dyn = random_dynamics(rng, n)
    pairs, joints = [], {}
    for i in range(n_nodes):
        if rng.uniform() < 2 / 3:
            sensor = random_sensor(rng, i, n)
            meas, joints[i] = random_joint(rng, sensor, window)
            pairs.append((sensor, meas))
    return prior, dyn, joints, JointMeasurement.stack(pairs, n, window)


def check_fixed_point(rng, n_graphs=50, rho=1.0):
    """ One ADMM round started at the centralized estimate with the saddle point
    duals must not move any iterate
    """
    worst_move, worst_dual, worst_hessian = 0.0, 0.0, 0.0
    config = drwt.DrwtConfig(rho=rho, max_iters=1)
    for _ in range(n_graphs):
        n_nodes = int(rng.integers(2, 21))
        n_edges = int(rng.integers(n_nodes - 1, min(n_nodes * (n_nodes - 1) // 2, 3 * n_nodes) + 1))
        graph = netgraph.random_connected_graph(n_nodes, n_edges, rng)
        n, window = int(rng.integers(1, 5)), int(rng.integers(1, 4))
        prior, dyn, joints, joint = random_consensus_problem(rng, n_nodes, n, window)
        system = central.assemble_block_system(prior, dyn, joint)
        info_c, vec_c = central.normal_equations(system)
        x_c = central.solve_map_window(system).mean

        agents = {i: drwt.local_init(i, p, dyn, joints.get(i), n_nodes, window)
                  for i, p in drwt.split_prior(prior, graph.vertices).items()}
        for i, agent in agents.items():
            drwt.factorize(agent, rho, graph.degree(i))
        drwt.saddle_point_duals(agents, x_c)
        worst_hessian = max(worst_hessian, relative_error(sum(a.local_info for a in agents.values()), info_c))
        worst_dual = max(worst_dual, float(np.linalg.norm(sum(a.p for a in agents.values()))
                                           / max(np.linalg.norm(vec_c), 1.e-300)))
        drwt.admm_round(agents, graph, config)
        worst_move = max(worst_move, max(relative_error(a.x, x_c) for a in agents.values()))
    return [CheckResult(2, 'fixed_point_iterate_change', worst_move <= 1.e-10, worst_move, 1.e-10),
            CheckResult(2, 'local_hessians_sum_to_central', worst_hessian <= 1.e-10, worst_hessian, 1.e-10),
            CheckResult(2, 'saddle_point_duals_sum_to_zero', worst_dual <= 1.e-10, worst_dual, 1.e-10)]


def random_tridiagonal_agent(rng, n, window):
    """ Agent whose window covers ``window + 1`` timesteps with a block-tridiagonal local Hessian"""
    if window == 0:
        prior = WindowGaussian((0, 0), rng.standard_normal(n), cov=random_spd(rng, n))
        dyn = None
    else:
        info = random_block_tridiagonal_spd(rng, n, window)
        prior = WindowGaussian((0, window - 1), rng.standard_normal(n * window), info=info)
        dyn = random_dynamics(rng, n)
    joint = random_joint(rng, random_sensor(rng, 0, n), window)[1] if rng.uniform() < 0.8 else None
    return drwt.local_init(0, prior, dyn, joint, int(rng.integers(1, 6)), window)


def check_fast_primal_update(rng, n_instances=200, timing_repeats=30):
    """ Block-tridiagonal primal update against the dense one, and its cost scaling in the window length"""
    worst = 0.0
    for _ in range(n_instances):
        agent = random_tridiagonal_agent(rng, int(rng.integers(1, 7)), int(rng.integers(0, 11)))
        degree, rho = int(rng.integers(1, 5)), float(10 ** rng.uniform(-2, 1))
        agent.p = rng.standard_normal(agent.x.size)
        neighbors = [rng.standard_normal(agent.x.size) for _ in range(degree)]
        p_new = drwt.dual_update(agent, neighbors, rho)
        dense, fast = agent, copy.deepcopy(agent)
        drwt.factorize(dense, rho, degree, 'dense')
        drwt.factorize(fast, rho, degree, 'fast')
        worst = max(worst, relative_error(drwt.primal_update_fast(fast, p_new, neighbors, rho),
                                          drwt.primal_update_dense(dense, p_new, neighbors, rho)))

    windows = (5, 10, 20, 40)
    costs = []
    for window in windows:
        agent = random_tridiagonal_agent(rng, 4, window)
        neighbors = [rng.standard_normal(agent.x.size) for _ in range(2)]
        best = math.inf
        for _ in range(timing_repeats):
            start = time.perf_counter()
            drwt.factorize(agent, 1.0, 2, 'fast')
            drwt.primal_update_fast(agent, agent.p, neighbors, 1.0)
            best = min(best, time.perf_counter() - start)
        costs.append(best)
    exponent = float(np.polyfit(np.log(windows), np.log(costs), 1)[0])
    logger.info('Fast primal update cost exponent in the window length: ' + str(exponent))
    return [CheckResult(3, 'fast_vs_dense_primal_update', worst <= 1.e-8, worst, 1.e-8),
            CheckResult(3, 'fast_primal_update_linear_cost', 0.8 <= exponent <= 1.2, None, None)]


def saddle_point(agents):
    """ Minimizer of the summed local costs, the point the iterations converge to"""
    info = sum(a.local_info for a in agents.values())
    vec = sum(a.local_vec for a in agents.values())
    return central.solve_information(info, vec, next(iter(agents.values())).span).mean


def run_to_convergence(cfg, seed):
    """ Run DRWT and the centralized estimator over a static scenario. Every step is
    compared to the minimizer of the summed local costs; while no sensor has
    marginalized a timestep yet, also to the centralized estimate.

    :returns: Largest relative error of an agent's window estimate and largest number of rounds used
    :rtype: float, int
    """
    scenario = generate_scenario(cfg, seed)
    network = drwt.DrwtNetwork(0, scenario.prior_means[0], scenario.prior_cov, scenario.dyn, cfg.window,
                               cfg.drwt_config(), cfg.nominal_sensor())
    oracle = central.RollingWindowEstimator(scenario.prior_means[0], scenario.prior_cov, scenario.dyn,
                                            cfg.window)
    worst = 0.0
    for t in range(scenario.n_steps):
        x_c = oracle.step(scenario.joint(t, 0)).mean
        posts = network.step(t, scenario.members(t, 0), scenario.own_joints(t, 0), scenario.graphs[t])
        x_star = saddle_point(network.agents)
        worst = max(worst, max(relative_error(p.mean, x_star) for p in posts.values()))
        if t <= cfg.window:
            worst = max(worst, max(relative_error(p.mean, x_c) for p in posts.values()))
    return worst, max(rounds for _, rounds, _ in network.iterations)


def check_admm_convergence(seed, n_seeds=100):
    cfg = ScenarioConfig.static_benchmark(n_steps=3)
    worst, rounds = 0.0, 0
    for s in np.random.SeedSequence(seed).spawn(n_seeds):
        error, used = run_to_convergence(cfg, s)
        worst, rounds = max(worst, error), max(rounds, used)
    logger.info('ADMM reached ' + str(worst) + ' relative error within ' + str(rounds) + ' rounds')

    large = dataclasses.replace(ScenarioConfig.static_benchmark(large=True, n_steps=1, max_iters=20),
                                residual_tol=None)
    smoke = episode.run_episode(generate_scenario(large, seed), 'drwt')
    return [CheckResult(4, 'admm_converges_to_centralized', worst <= 1.e-5, worst, 1.e-5),
            CheckResult(4, 'admm_rounds_within_budget', rounds < cfg.max_iters, rounds, cfg.max_iters),
            CheckResult(4, 'large_runs', len(smoke.rows) == large.n_sensors, len(smoke.rows),
                        large.n_sensors)]


def check_bits_vs_error(seed, n_seeds=100):
    cfg = ScenarioConfig.static_benchmark()
    passed = 0
    for s in np.random.SeedSequence(seed).spawn(n_seeds):
        comparison = benchmark.compare_sweep(benchmark.convergence_sweep(cfg, s), cfg.sweep_rounds)
        passed += comparison.passed
    fraction = passed / n_seeds
    return [CheckResult(5, 'drwt_below_ckf_per_bit_budget', fraction >= 0.95, fraction, 0.95)]


def check_monte_carlo(seed, n_runs=200, n_steps=5):
    cfg = ScenarioConfig.static_monte_carlo(n_steps=n_steps, seed=seed)
    result = benchmark.monte_carlo(cfg, n_runs, workers=1)
    errors = result.run_errors['drwt']
    sem = errors.std(axis=0, ddof=1) / math.sqrt(len(errors)) if len(errors) > 1 else np.zeros(errors.shape[1])
    ratio = float(np.linalg.norm(errors.mean(axis=0)) / max(np.linalg.norm(sem), 1.e-300))
    gap = float(np.min(result.conservativeness))
    traces = {m: result.mean_trace(m) for m in benchmark.MC_METHODS}
    ckf_ratio = traces['ckf'] / traces['drwt']
    drwt_ratio = traces['drwt'] / traces['centralized']
    local_ratio = result.mean_mse('local') / result.mean_mse('centralized')
    return [CheckResult(6, 'drwt_unbiased_in_sem', ratio < 3.0, ratio, 3.0),
            CheckResult(6, 'network_prior_conservative', gap >= -1.e-9, gap, -1.e-9),
            CheckResult(6, 'ckf_trace_at_least_drwt', ckf_ratio >= 1.0, ckf_ratio, 1.0),
            CheckResult(6, 'drwt_trace_at_least_centralized', drwt_ratio >= 1.0 - 1.e-9, drwt_ratio, 1.0),
            CheckResult(6, 'local_mse_at_least_centralized', local_ratio >= 1.0, local_ratio, 1.0)]


def churn_config(**overrides):
    """ Small moving scenario in which observer sets change every few steps"""
    cfg = ScenarioConfig(n_sensors=12, n_targets=3, n_steps=40, area_size=300.0, comm_radius=150.0,
                         sensing_radius=60.0, window_seconds=1.0, dropout=0.2, sensor_speed=15.0,
                         target_speed=5.0, max_iters=20)
    return cfg.replace(**overrides)


def check_handoff(seed):
    result = episode.run_episode(generate_scenario(churn_config(), seed), 'drwt')
    events = [e for e in result.handoffs if e.receiver is not None]
    conservation = max((e.conservation_error for e in events), default=0.0)
    excess = 0.0
    bands = {(b.t, b.target_id, b.band): b.info_trace for b in result.bands if b.band != 'sensor'}
    for (t, k, band), trace in bands.items():
        if band == 'sum':
            reference = bands[(t, k, 'centralized')]
            excess = max(excess, (trace - reference) / reference)
    return [CheckResult(7, 'handoff_events', len(events) > 0, len(events), 1),
            CheckResult(7, 'handoff_conserves_information', conservation <= 1.e-12, conservation, 1.e-12),
            CheckResult(7, 'band_sum_below_centralized', excess <= 1.e-9, excess, 1.e-9)]


def check_determinism(seed):
    cfg = churn_config(n_steps=10)
    digests = []
    with tempfile.TemporaryDirectory() as tmp:
        for k in range(2):
            path = os.path.join(tmp, 'metrics_' + str(k) + '.csv')
            episode.emit_csv(episode.run_episode(generate_scenario(cfg, seed), 'drwt').rows, path)
            digests.append(io.file_digest(path))
    return [CheckResult(8, 'identical_metrics_files', digests[0] == digests[1], None, None)]


def run_verify(out_dir, seed=0, quick=False):
    """ Run all checks and write ``verify.csv`` to ``out_dir``

    :param out_dir: Output directory, created if missing
    :type out_dir: str

    :param seed: Root seed of all checks
    :type seed: int

    :param quick: Use a few instances per check instead of the full counts
    :type quick: bool

    :returns: Results of all checks
    :rtype: list[ CheckResult ]
    """
    counts = COUNTS['quick' if quick else 'full']
    rngs = [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(3)]
    results = []
    results += check_oracle_equivalence(rngs[0], counts['oracle'])
    results += check_fixed_point(rngs[1], counts['fixed_point'])
    results += check_fast_primal_update(rngs[2], counts['fast'], counts['timing_repeats'])
    results += check_admm_convergence(seed, counts['convergence'])
    results += check_bits_vs_error(seed, counts['sweep'])
    results += check_monte_carlo(seed, counts['mc'], counts['mc_steps'])
    results += check_handoff(seed)
    results += check_determinism(seed)
    for r in results:
        log = logger.info if r.passed else logger.warning
        log('Check ' + str(r.check) + ' ' + r.name + ': ' + ('passed' if r.passed else 'FAILED'))

    write_results(out_dir, results)
    return results


def write_results(out_dir, results):
    """ Write ``verify.csv`` without the timed checks"""
    io.ensure_dir(out_dir)
    io.write_rows(os.path.join(out_dir, 'verify.csv'), CheckResult,
                  [r for r in results if r.name not in TIMED_CHECKS])
