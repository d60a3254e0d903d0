""" Command line interface ``drwt-bench``.

Subcommands write csv tables and a ``manifest.json`` to the output directory:

* ``convergence`` - error to the centralized estimate against bits per node on a static network
* ``mc`` - Monte Carlo mean squared errors and covariance traces per timestep
* ``scenario`` - one episode of the moving multi-target scenario
* ``verify`` - the acceptance checks
"""
import argparse
import logging
import os
import sys

from distributed_tracking import io
from distributed_tracking.drwt import HandoffEvent
from distributed_tracking.harness import benchmark, episode, verify
from distributed_tracking.harness.config import METHODS, ScenarioConfig, load_config
from distributed_tracking.harness.scenario import generate_scenario, scenario_arrays, scenario_attrs

logger = logging.getLogger(__name__)

BIT_CONVENTION = ('64 bit scalars; a DRWT iterate is n(T+1) scalars per directed edge and round; '
                  'a CKF message is the n(n+1)/2 + n scalars of the newest information block per directed '
                  'edge and round; a hand-off is the N(N+1)/2 scalars of a symmetric window matrix')
ERROR_METRIC = 'relative L2 error of the window mean to the centralized estimate, averaged over nodes'


def _common_arguments():
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument('--config', default=None, help='Flat YAML configuration file')
    parser.add_argument('--seed', type=int, default=None, help='Root seed')
    parser.add_argument('--method', choices=METHODS, default=None, help='Estimation method')
    parser.add_argument('--iters', type=int, default=None, help='ADMM rounds per timestep')
    parser.add_argument('--rho', type=float, default=None, help='ADMM penalty parameter')
    parser.add_argument('--out', default='results', help='Output directory')
    parser.add_argument('--runs', type=int, default=None, help='Monte Carlo runs')
    parser.add_argument('--workers', type=int, default=None, help='Worker processes')
    parser.add_argument('-v', '--verbose', action='store_true', help='Debug logging')
    return parser


def build_parser():
    common = _common_arguments()
    parser = argparse.ArgumentParser(prog='drwt-bench',
                                     description='Distributed rolling window tracking benchmarks')
    sub = parser.add_subparsers(dest='command', required=True)
    sub.add_parser('convergence', parents=[common], help='Bits versus error sweep on a static network')
    mc = sub.add_parser('mc', parents=[common], help='Monte Carlo benchmark on a static network')
    mc.add_argument('--large', action='store_true', help='100 nodes and 400 edges')
    scenario = sub.add_parser('scenario', parents=[common], help='Episode of the multi-target scenario')
    scenario.add_argument('--archive', action='store_true', help='Also write the scenario to scenario.hdf5')
    verify_parser = sub.add_parser('verify', parents=[common], help='Run the acceptance checks')
    verify_parser.add_argument('--quick', action='store_true', help='Few instances per check')
    return parser


def make_config(args, base):
    """ Configuration from ``base``, the configuration file and the command line flags"""
    cfg = base if args.config is None else load_config(args.config, base)
    return cfg.replace(seed=args.seed, method=args.method, max_iters=args.iters, rho=args.rho,
                       mc_runs=args.runs, workers=args.workers)


def run_convergence(args):
    cfg = make_config(args, ScenarioConfig.static_benchmark())
    points = benchmark.convergence_sweep(cfg)
    comparison = benchmark.compare_sweep(points, cfg.sweep_rounds)
    io.write_rows(os.path.join(args.out, 'convergence.csv'), benchmark.SweepPoint, points)
    logger.info('DRWT at or below CKF at every bit budget: ' + str(comparison.passed)
                + ' (' + str(round(comparison.decades, 2)) + ' decades)')
    return cfg, {'bit_convention': BIT_CONVENTION, 'error_metric': ERROR_METRIC,
                 'comparison': {'passed': comparison.passed, 'decades': comparison.decades,
                                'worst_ratio': comparison.worst_ratio}}


def run_mc(args):
    cfg = make_config(args, ScenarioConfig.static_monte_carlo(large=args.large))
    result = benchmark.monte_carlo(cfg)
    io.write_rows(os.path.join(args.out, 'mc.csv'), benchmark.AggregateRow, result.aggregates)
    return cfg, {'mc_runs': result.n_runs, 'bit_convention': BIT_CONVENTION}


def run_scenario(args):
    cfg = make_config(args, ScenarioConfig())
    scenario = generate_scenario(cfg)
    result = episode.run_episode(scenario)
    episode.emit_csv(result.rows, os.path.join(args.out, 'metrics.csv'))
    result.ledger.write_csv(os.path.join(args.out, 'ledger.csv'))
    if result.method == 'drwt':
        episode.emit_csv(episode.emit_info_bands(result), os.path.join(args.out, 'info_bands.csv'),
                         episode.InfoBandRow)
        io.write_rows(os.path.join(args.out, 'handoffs.csv'), HandoffEvent, result.handoffs)
    if args.archive:
        with io.ScenarioArchive(os.path.join(args.out, 'scenario.hdf5'), 'w') as archive:
            archive.add_scenario('seed_' + str(cfg.seed), scenario_arrays(scenario), scenario_attrs(scenario))
    return cfg, {'method': result.method, 'bit_convention': BIT_CONVENTION,
                 'bits_by_kind': result.ledger.bits_by_kind()}


def run_verify(args):
    cfg = make_config(args, ScenarioConfig.static_benchmark())
    results = verify.run_verify(args.out, cfg.seed, args.quick)
    failed = [r.name for r in results if not r.passed]
    return cfg, {'failed_checks': failed}


COMMANDS = {'convergence': run_convergence, 'mc': run_mc, 'scenario': run_scenario, 'verify': run_verify}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format='%(asctime)s %(levelname)s %(name)s: %(message)s')
    try:
        io.ensure_dir(args.out)
        cfg, extra = COMMANDS[args.command](args)
    except (ValueError, OSError) as err:
        logger.error(str(err))
        return 2
    io.write_manifest(os.path.join(args.out, 'manifest.json'), cfg, cfg.seed, dict(extra, command=args.command))
    if extra.get('failed_checks'):
        logger.error('Failed checks: ' + ', '.join(extra['failed_checks']))
        return 1
    return 0


if __name__ == '__main__':
    sys.exit(main())
