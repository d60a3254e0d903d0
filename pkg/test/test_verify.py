import os
import shutil

import numpy as np

from distributed_tracking.harness import verify


def test_handoff_check():
    results = verify.check_handoff(0)
    assert [r.check for r in results] == [7, 7, 7]
    conservation, band = results[1:]
    assert conservation.passed
    assert band.passed


def test_determinism_check():
    assert all(r.passed for r in verify.check_determinism(1))


def test_random_instances():
    rng = np.random.default_rng(0)
    mat = verify.random_spd(rng, 5)
    assert np.min(np.linalg.eigvalsh(mat)) >= 1.0 - 1.e-12
    tri = verify.random_block_tridiagonal_spd(rng, 2, 4)
    assert np.allclose(tri[:2, 4:], 0.0)
    assert np.allclose(tri, tri.T)
    sensor = verify.random_sensor(rng, 3, 4, 2)
    meas, joint = verify.random_joint(rng, sensor, 5, target_id=1)
    assert (meas.sensor_id, meas.target_id, meas.t) == (3, 1, 5)
    assert joint.sensor_ids == (3,)


def test_write_results():
    out_dir = 'tmp_verify'
    results = [verify.CheckResult(1, 'a', True, 1.e-12, 1.e-9), verify.CheckResult(3, 'b', False, None, None)]
    verify.write_results(out_dir, results)
    with open(os.path.join(out_dir, 'verify.csv'), 'r') as fid:
        lines = fid.read().splitlines()
    shutil.rmtree(out_dir)
    assert lines == ['check,name,passed,value,threshold', '1,a,true,1e-12,1e-09', '3,b,false,,']


def test_monte_carlo_check():
    results = verify.check_monte_carlo(2, n_runs=3, n_steps=3)
    assert [r.name for r in results] == ['drwt_unbiased_in_sem', 'network_prior_conservative',
                                         'ckf_trace_at_least_drwt', 'drwt_trace_at_least_centralized',
                                         'local_mse_at_least_centralized']
    assert results[1].passed
    assert results[3].passed
    assert results[4].passed
