""" Monte Carlo benchmarks and the bits-versus-error convergence sweep on static networks."""
import fractions
import logging
import math
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from distributed_tracking import ckf, drwt, netgraph
from distributed_tracking.central import RollingWindowEstimator
from distributed_tracking.harness.episode import run_episode
from distributed_tracking.harness.scenario import generate_scenario
from distributed_tracking.models import dynamics_at

logger = logging.getLogger(__name__)

MC_METHODS = ('centralized', 'ckf', 'drwt', 'local')

# Relative errors below this value count as converged
SWEEP_FLOOR = 1.e-10


@dataclass(frozen=True)
class AggregateRow:
    t: int
    method: str
    n_samples: int
    mse_to_truth: float
    mse_to_truth_sem: float
    mse_to_centralized: float
    mse_to_centralized_sem: float
    trace_cov: float
    cumulative_bits: float


@dataclass(frozen=True)
class SweepPoint:
    method: str
    rounds: int
    bits_per_node: float
    rel_error: float


@dataclass(frozen=True)
class CurveComparison:
    """ Result of :py:func:`compare_curves`

    :param passed: DRWT is at or below CKF at every budget and the budgets span enough decades
    :param n_budgets: Number of compared budgets
    :param decades: Decades spanned by the common budgets
    :param worst_ratio: Largest ratio of DRWT error to CKF error over the budgets
    """
    passed: bool
    n_budgets: int
    decades: float
    worst_ratio: float


@dataclass
class MonteCarloResult:
    """ Aggregated Monte Carlo output

    :param aggregates: Mean and standard error per (method, timestep)
    :param run_errors: Mean signed error to the truth per method, one row per run
    :param conservativeness: Smallest conservativeness eigenvalue per DRWT run
    :param n_runs: Number of runs
    """
    aggregates: list
    run_errors: dict
    conservativeness: np.ndarray
    n_runs: int

    def mean_trace(self, method):
        traces = [r.trace_cov for r in self.aggregates if r.method == method]
        return float(np.mean(traces)) if traces else float('nan')

    def mean_mse(self, method):
        """ Mean squared error to the truth over all timesteps of a method"""
        mse = [r.mse_to_truth for r in self.aggregates if r.method == method]
        return float(np.mean(mse)) if mse else float('nan')


def _sem(values):
    values = np.asarray(values, dtype=float)
    if values.size < 2:
        return 0.0
    return float(np.std(values, ddof=1) / math.sqrt(values.size))


def aggregate(rows):
    """ Mean and standard error of the metrics over all rows of the same method and timestep

    :param rows: Rows of any number of runs
    :type rows: Iterable[ MetricsRow ]

    :rtype: list[ AggregateRow ]
    """
    groups = defaultdict(list)
    for row in rows:
        groups[(row.method, row.t)].append(row)
    result = []
    for (method, t), group in sorted(groups.items()):
        truth = [r.mse_to_truth for r in group]
        cent = [r.mse_to_centralized for r in group]
        result.append(AggregateRow(t, method, len(group), float(np.mean(truth)), _sem(truth),
                                   float(np.mean(cent)), _sem(cent),
                                   float(np.mean([r.trace_cov for r in group])),
                                   float(np.mean([r.cumulative_bits for r in group]))))
    return result


def _single_run(job):
    cfg, seed, run, methods = job
    scenario = generate_scenario(cfg, seed)
    output = {}
    for method in methods:
        episode = run_episode(scenario, method, run, cfg)
        gaps = [g for _, _, g in episode.conservativeness]
        mean_error = episode.errors.mean(axis=0) if len(episode.errors) else np.zeros(scenario.n)
        output[method] = (episode.rows, mean_error, min(gaps) if gaps else float('inf'))
    return output


def monte_carlo(cfg, n_runs=None, workers=None, methods=MC_METHODS):
    """ Run independent episodes and aggregate their metrics. Every run draws its
    scenario from its own child of the configuration's seed; the result does not
    depend on the number of workers.

    :param cfg: Configuration, usually :py:meth:`ScenarioConfig.static_benchmark`
    :type cfg: ScenarioConfig

    :param n_runs: Number of runs, ``cfg.mc_runs`` if None
    :type n_runs: int

    :param workers: Number of processes, ``cfg.workers`` if None
    :type workers: int

    :param methods: Methods run on every scenario
    :type methods: Sequence[ str ]

    :rtype: MonteCarloResult
    """
    n_runs = cfg.mc_runs if n_runs is None else n_runs
    workers = cfg.workers if workers is None else workers
    if n_runs < 1:
        raise ValueError('n_runs must be at least 1, got ' + str(n_runs))
    seeds = np.random.SeedSequence(cfg.seed).spawn(n_runs)
    jobs = [(cfg, seeds[run], run, tuple(methods)) for run in range(n_runs)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outputs = list(pool.map(_single_run, jobs))
    else:
        outputs = [_single_run(job) for job in jobs]

    rows = [row for out in outputs for method in methods for row in out[method][0]]
    run_errors = {method: np.array([out[method][1] for out in outputs]) for method in methods}
    gaps = np.array([out['drwt'][2] for out in outputs]) if 'drwt' in methods else np.zeros(0)
    logger.info('Monte Carlo: ' + str(n_runs) + ' runs of ' + ', '.join(methods))
    return MonteCarloResult(aggregate(rows), run_errors, gaps, n_runs)


def relative_error(x, x_ref):
    return float(np.linalg.norm(x - x_ref) / max(np.linalg.norm(x_ref), 1.e-12))


def _mean_rel_error(estimates, x_ref):
    return float(np.mean([relative_error(x, x_ref) for x in estimates]))


def convergence_sweep(cfg, seed=None, rounds=None, floor=SWEEP_FLOOR):
    """ Error to the centralized estimate against bits sent per node at timestep 1
    of a static scenario, for 0 to ``rounds`` DRWT iterations and for as many CKF
    consensus rounds as cost the same number of bits. Both methods start from the
    exact posterior of timestep 0.

    :param cfg: Static network configuration
    :type cfg: ScenarioConfig

    :param seed: Scenario seed, ``cfg.seed`` if None
    :type seed: int

    :param rounds: Number of DRWT iterations, ``cfg.sweep_rounds`` if None
    :type rounds: int

    :param floor: A curve stops at its first error at or below this value; None runs all rounds
    :type floor: float, None

    :raises DisconnectedGraphError: If the relevant subgraph is disconnected

    :returns: Points of both curves
    :rtype: list[ SweepPoint ]
    """
    rounds = cfg.sweep_rounds if rounds is None else rounds
    floor = -1.0 if floor is None else floor
    scenario = generate_scenario(cfg.replace(n_steps=2), seed)
    oracle = RollingWindowEstimator(scenario.prior_means[0], scenario.prior_cov, scenario.dyn, cfg.window)
    oracle.step(scenario.joint(0, 0))
    prior = oracle.prior
    x_c = oracle.step(scenario.joint(1, 0)).mean

    members = sorted(scenario.members(1, 0))
    sub = netgraph.relevant_subgraph(scenario.graphs[1], members, 0).graph
    if not netgraph.is_connected(sub):
        raise netgraph.DisconnectedGraphError('Relevant subgraph of the sweep is disconnected')
    dyn = dynamics_at(scenario.dyn, 1)
    joints = scenario.own_joints(1, 0)
    n_nodes = len(members)
    points = []

    drwt_cfg = cfg.drwt_config()
    local_priors = drwt.split_prior(prior, members)
    metric = None
    if drwt_cfg.penalty == 'nominal':
        info, _ = drwt.nominal_information(local_priors[members[0]], dyn, cfg.nominal_sensor(), n_nodes, 1)
        metric = drwt.penalty_metric(info)
    ledger = netgraph.CommLedger(cfg.bits_per_scalar)
    ledger.use_graph(sub)
    agents = {}
    for i, p in local_priors.items():
        agents[i] = drwt.local_init(i, p, dyn, joints.get(i), n_nodes, 1, drwt_cfg.joiner_epsilon)
        drwt.factorize(agents[i], drwt_cfg.rho, sub.degree(i), drwt_cfg.primal_update, drwt_cfg.joiner_epsilon,
                       metric)
    points.append(SweepPoint('drwt', 0, 0.0, _mean_rel_error([a.x for a in agents.values()], x_c)))
    for k in range(1, rounds + 1):
        if points[-1].rel_error <= floor:
            break
        drwt.admm_round(agents, sub, drwt_cfg, ledger)
        points.append(SweepPoint('drwt', k, ledger.mean_bits_per_node(n_nodes),
                                 _mean_rel_error([a.x for a in agents.values()], x_c)))

    n = scenario.n
    num_steps = 1 - prior.span[0] + 1
    ckf_rounds = math.ceil(rounds * netgraph.iterate_scalars(n, num_steps) / netgraph.ckf_scalars(n))
    ledger = netgraph.CommLedger(cfg.bits_per_scalar)
    ledger.use_graph(sub)
    weights = netgraph.metropolis_weights(sub)
    obs = scenario.observations[1].get(0, {})
    values = {i: ckf.local_information(scenario.sensors[i], obs.get(i), num_steps) for i in members}
    for k in range(ckf_rounds + 1):
        if k > 0:
            if points[-1].rel_error <= floor:
                break
            values = ckf.consensus_round(values, weights, ledger)
        estimates = [ckf.fuse_local(prior, dyn, values[i], n_nodes, 1).mean for i in members]
        points.append(SweepPoint('ckf', k, ledger.mean_bits_per_node(n_nodes), _mean_rel_error(estimates, x_c)))
    return points


def _round_bits(points):
    """ Bits per node of one round, None if the curve has no round"""
    first = [p.bits_per_node for p in points if p.rounds == 1]
    return first[0] if first else None


def _error_after(errors, rounds, floor):
    """ Error after ``rounds`` rounds. A curve that stopped at or below ``floor`` keeps its
    last error; otherwise there is no error past its last round.
    """
    if rounds in errors:
        return errors[rounds]
    last = max(errors)
    if rounds > last and errors[last] <= floor:
        return errors[last]
    return None


def compare_curves(drwt_points, ckf_points, floor=SWEEP_FLOOR, min_decades=3.0, max_budget=None):
    """ Compare two bits-versus-error curves at the budgets both methods spend
    exactly: the multiples of the smallest bits per node that are a whole number of
    rounds of either method. Errors below ``floor`` count as equal.

    :param drwt_points: DRWT curve, one point per round count from 0
    :type drwt_points: list[ SweepPoint ]

    :param ckf_points: CKF curve, one point per round count from 0
    :type ckf_points: list[ SweepPoint ]

    :param floor: Error floor
    :type floor: float

    :param min_decades: Decades the compared budgets must span
    :type min_decades: float

    :param max_budget: Largest budget compared, the largest budget of either curve if None
    :type max_budget: float

    :rtype: CurveComparison
    """
    steps = [_round_bits(points) for points in (drwt_points, ckf_points)]
    if not all(steps):
        return CurveComparison(False, 0, 0.0, float('nan'))
    ratio = fractions.Fraction(steps[1] / steps[0]).limit_denominator(1000)
    drwt_rounds, ckf_rounds = ratio.numerator, ratio.denominator
    common = drwt_rounds * steps[0]
    if max_budget is None:
        max_budget = max(p.bits_per_node for p in list(drwt_points) + list(ckf_points))
    drwt_errors = {p.rounds: p.rel_error for p in drwt_points}
    ckf_errors = {p.rounds: p.rel_error for p in ckf_points}

    pairs = []
    while (len(pairs) + 1) * common <= max_budget * (1 + 1.e-12):
        m = len(pairs) + 1
        pair = (_error_after(drwt_errors, m * drwt_rounds, floor), _error_after(ckf_errors, m * ckf_rounds, floor))
        if None in pair:
            break
        pairs.append(pair)
    if not pairs:
        return CurveComparison(False, 0, 0.0, float('nan'))
    decades = math.log10(len(pairs))
    ratios = [max(e_drwt, floor) / max(e_ckf, floor) for e_drwt, e_ckf in pairs]
    passed = all(r <= 1 + 1.e-12 for r in ratios)
    return CurveComparison(passed and decades >= min_decades, len(pairs), decades, max(ratios))


def compare_sweep(points, rounds, floor=SWEEP_FLOOR, min_decades=3.0):
    """ :py:func:`compare_curves` on the output of :py:func:`convergence_sweep`, up to the
    bits of ``rounds`` DRWT rounds
    """
    drwt_points = [p for p in points if p.method == 'drwt']
    step = _round_bits(drwt_points)
    return compare_curves(drwt_points, [p for p in points if p.method == 'ckf'], floor, min_decades,
                          None if step is None else rounds * step)
