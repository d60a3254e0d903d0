import json
import os
import shutil

from distributed_tracking.harness import cli
from distributed_tracking.harness.config import ScenarioConfig

out_dir = 'tmp_cli_results'


def write_config(fname, text):
    with open(fname, 'w') as fid:
        fid.write(text)


def read_lines(path):
    with open(path, 'r') as fid:
        return fid.read().splitlines()


def test_make_config():
    args = cli.build_parser().parse_args(['mc', '--seed', '3', '--rho', '0.5', '--runs', '4'])
    cfg = cli.make_config(args, ScenarioConfig.static_benchmark())
    assert (cfg.seed, cfg.rho, cfg.mc_runs) == (3, 0.5, 4)
    assert cfg.max_iters == ScenarioConfig.static_benchmark().max_iters


def test_scenario_command():
    fname = 'tmp_cli_config.yaml'
    write_config(fname, 'n_sensors: 6\nn_targets: 2\nn_steps: 4\narea_size: 100\nsensing_radius: inf\n'
                        'comm_radius: 80\nwindow_seconds: 0.5\nmax_iters: 5\n')
    try:
        code = cli.main(['scenario', '--config', fname, '--out', out_dir, '--seed', '2', '--archive'])
        assert code == 0
        for name in ('metrics.csv', 'ledger.csv', 'info_bands.csv', 'handoffs.csv', 'scenario.hdf5',
                     'manifest.json'):
            assert os.path.exists(os.path.join(out_dir, name))
        metrics = read_lines(os.path.join(out_dir, 'metrics.csv'))
        assert metrics[0].startswith('run,t,method,target_id,sensor_id')
        assert len(metrics) > 1
        assert read_lines(os.path.join(out_dir, 'handoffs.csv'))[0] == \
            't,target_id,leaver,receiver,info_trace,conservation_error'
        with open(os.path.join(out_dir, 'manifest.json'), 'r') as fid:
            manifest = json.load(fid)
        assert manifest['command'] == 'scenario'
        assert manifest['seed'] == 2
        assert manifest['config']['n_sensors'] == 6
        assert manifest['method'] == 'drwt'

        assert cli.main(['scenario', '--config', fname, '--out', out_dir, '--method', 'ckf']) == 0
    finally:
        os.remove(fname)
        shutil.rmtree(out_dir, ignore_errors=True)


def test_convergence_command():
    fname = 'tmp_cli_config.yaml'
    write_config(fname, 'n_sensors: 6\nn_edges: 8\nsweep_rounds: 10\n')
    try:
        assert cli.main(['convergence', '--config', fname, '--out', out_dir]) == 0
        lines = read_lines(os.path.join(out_dir, 'convergence.csv'))
        assert lines[0] == 'method,rounds,bits_per_node,rel_error'
        assert 2 <= sum(line.startswith('drwt,') for line in lines) <= 11
        with open(os.path.join(out_dir, 'manifest.json'), 'r') as fid:
            manifest = json.load(fid)
        assert manifest['bit_convention'] == cli.BIT_CONVENTION
        assert 'passed' in manifest['comparison']
    finally:
        os.remove(fname)
        shutil.rmtree(out_dir, ignore_errors=True)


def test_invalid_config():
    fname = 'tmp_cli_config.yaml'
    write_config(fname, 'n_sensor: 6\n')
    try:
        assert cli.main(['mc', '--config', fname, '--out', out_dir]) == 2
    finally:
        os.remove(fname)
        shutil.rmtree(out_dir, ignore_errors=True)
