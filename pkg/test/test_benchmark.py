import math

import numpy as np
import pytest
from pytest import approx

from distributed_tracking import netgraph
from distributed_tracking.harness import benchmark
from distributed_tracking.harness.config import ScenarioConfig
from distributed_tracking.harness.episode import MetricsRow


def small_static(**overrides):
    settings = dict(n_steps=3, n_sensors=6, n_edges=8)
    settings.update(overrides)
    return ScenarioConfig.static_benchmark(**settings)


def test_aggregate():
    rows = [MetricsRow(0, 0, 'drwt', 0, 1, 1.0, 2.0, 3.0, 10.0),
            MetricsRow(0, 0, 'drwt', 0, 2, 3.0, 4.0, 5.0, 10.0),
            MetricsRow(1, 0, 'ckf', 0, 1, 0.5, 1.0, 1.0, 0.0)]
    aggregates = benchmark.aggregate(rows)
    assert [(a.method, a.t, a.n_samples) for a in aggregates] == [('ckf', 0, 1), ('drwt', 0, 2)]
    ckf, drwt = aggregates
    assert ckf.mse_to_truth_sem == 0.0
    assert drwt.mse_to_centralized == 2.0
    assert drwt.mse_to_truth == 3.0
    assert drwt.mse_to_truth_sem == approx(1.0)
    assert drwt.trace_cov == 4.0
    assert drwt.cumulative_bits == 10.0
    assert benchmark.aggregate([]) == []


def test_monte_carlo():
    cfg = small_static()
    result = benchmark.monte_carlo(cfg, n_runs=2)
    assert result.n_runs == 2
    assert {a.method for a in result.aggregates} == set(benchmark.MC_METHODS)
    assert len(result.aggregates) == 4 * 3
    for row in result.aggregates:
        if row.method == 'centralized':
            assert row.n_samples == 2
            assert row.mse_to_centralized == 0.0
        else:
            assert row.n_samples == 2 * 6
    assert result.run_errors['drwt'].shape == (2, 4)
    assert result.conservativeness.shape == (2,)
    assert np.all(result.conservativeness >= -1.e-9)
    assert result.mean_trace('drwt') >= result.mean_trace('centralized') * (1 - 1.e-9)
    assert result.mean_trace('local') >= result.mean_trace('centralized')
    assert math.isnan(result.mean_trace('particle'))

    again = benchmark.monte_carlo(cfg, n_runs=2, methods=('centralized',))
    assert again.aggregates == [a for a in result.aggregates if a.method == 'centralized']
    assert again.conservativeness.size == 0

    with pytest.raises(ValueError):
        benchmark.monte_carlo(cfg, n_runs=0)


def test_convergence_sweep():
    cfg = small_static()
    points = benchmark.convergence_sweep(cfg, seed=3, rounds=40, floor=None)
    drwt = [p for p in points if p.method == 'drwt']
    ckf = [p for p in points if p.method == 'ckf']
    assert [p.rounds for p in drwt] == list(range(41))
    assert drwt[0].bits_per_node == 0.0 and ckf[0].bits_per_node == 0.0
    ckf_rounds = math.ceil(40 * netgraph.iterate_scalars(4, 2) / netgraph.ckf_scalars(4))
    assert len(ckf) == ckf_rounds + 1
    # Both methods spend the same bits per round trip over an edge, up to rounding of the round count
    assert ckf[-1].bits_per_node >= drwt[-1].bits_per_node
    assert drwt[-1].bits_per_node == approx(40 * 2 * 8 / 6 * 64 * netgraph.iterate_scalars(4, 2))
    assert drwt[-1].rel_error < drwt[0].rel_error
    assert ckf[-1].rel_error < ckf[0].rel_error

    stopped = benchmark.convergence_sweep(cfg, seed=3, rounds=40, floor=math.inf)
    assert [(p.method, p.rounds) for p in stopped] == [('drwt', 0), ('ckf', 0)]


def test_convergence_sweep_disconnected():
    cfg = small_static(graph='disk', comm_radius=1.e-3, static_sensors=True)
    with pytest.raises(netgraph.DisconnectedGraphError):
        benchmark.convergence_sweep(cfg, seed=0, rounds=2)


def curve(method, errors, bits_per_round):
    return [benchmark.SweepPoint(method, k, k * bits_per_round, e) for k, e in enumerate(errors)]


def test_compare_curves():
    rounds = np.arange(2001)
    fast = curve('drwt', 0.9 ** rounds, 1.0)
    slow = curve('ckf', 0.99 ** rounds, 1.0)
    comparison = benchmark.compare_curves(fast, slow)
    assert comparison.passed
    assert comparison.decades == approx(math.log10(2000))
    assert comparison.worst_ratio <= 1.0

    comparison = benchmark.compare_curves(slow, fast)
    assert not comparison.passed
    assert comparison.worst_ratio > 1.0

    # Too few decades of common bit budgets
    short = benchmark.compare_curves(fast[:50], slow[:50])
    assert not short.passed
    assert short.decades < 3

    empty = benchmark.compare_curves(fast[:1], slow)
    assert not empty.passed and empty.n_budgets == 0


def test_compare_curves_at_common_budgets():
    rounds = np.arange(41)
    drwt = curve('drwt', 0.5 ** rounds, 8.0)
    ckf = curve('ckf', 0.5 ** rounds, 14.0)
    # 7 DRWT rounds cost as much as 4 CKF rounds; both curves end below the floor and stay there
    comparison = benchmark.compare_curves(drwt, ckf, min_decades=1.9, max_budget=5600.0)
    assert comparison.passed
    assert comparison.n_budgets == 100
    assert comparison.decades == approx(2.0)
    assert comparison.worst_ratio == 1.0
    assert benchmark.compare_sweep(drwt + ckf, 700, min_decades=1.9) == comparison

    reverse = benchmark.compare_curves(curve('drwt', 0.5 ** rounds, 14.0), curve('ckf', 0.5 ** rounds, 8.0),
                                       min_decades=0.0)
    assert not reverse.passed
    assert reverse.worst_ratio >= 8.0

    # A curve cut off above the floor has no error at larger budgets
    cut = benchmark.compare_curves(drwt[:21], ckf, min_decades=0.0, max_budget=5600.0)
    assert cut.n_budgets == 2


def test_centralized_mse_below_local():
    result = benchmark.monte_carlo(small_static(), n_runs=20, methods=('centralized', 'local'))
    assert result.mean_mse('centralized') <= result.mean_mse('local')
    assert math.isnan(result.mean_mse('drwt'))
