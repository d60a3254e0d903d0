import os

import numpy as np
import pytest
from pytest import approx

from distributed_tracking import netgraph
from test.utils_for_test import path_graph, complete_graph


def test_disk_graph():
    assert netgraph.disk_graph({0: [0, 0], 1: [150, 0]}, 200.0).edges == {(0, 1)}
    assert netgraph.disk_graph({0: [0, 0], 1: [250, 0]}, 200.0).edges == set()
    collinear = {i: [i * 200.001, 0.0] for i in range(5)}
    graph = netgraph.disk_graph(collinear, 200.0, t=3)
    assert graph.edges == set()
    assert len(graph) == 5
    assert graph.t == 3
    with pytest.raises(ValueError):
        netgraph.disk_graph({0: [0, 0]}, 0.0)


def test_comm_graph():
    graph = netgraph.CommGraph.from_edges([3, 1, 2], [(3, 1), (2, 1)])
    assert graph.edges == {(1, 3), (1, 2)}
    assert graph.neighbors(1) == [2, 3]
    assert graph.degree(1) == 2
    assert graph.has_edge(3, 1)
    assert graph.components() == [[1, 2, 3]]
    with pytest.raises(ValueError):
        netgraph.CommGraph.from_edges([1, 2], [(1, 5)])
    with pytest.raises(ValueError):
        netgraph.CommGraph.from_edges([1], [(1, 1)])


def test_relevant_subgraph():
    graph = path_graph(3)
    assert netgraph.relevant_subgraph(graph, {0, 1, 2}).edges == graph.edges
    single = netgraph.relevant_subgraph(graph, {1}, target_id=4)
    assert single.vertices == {1}
    assert single.edges == set()
    assert single.target_id == 4

    ends = netgraph.relevant_subgraph(graph, {0, 2})
    assert ends.vertices == {0, 2}
    assert ends.edges == set()
    assert not netgraph.is_connected(ends)
    with pytest.raises(ValueError):
        netgraph.relevant_subgraph(graph, {0, 7})


def test_is_connected():
    assert netgraph.is_connected(netgraph.CommGraph.from_edges([], []))
    assert netgraph.is_connected(netgraph.CommGraph.from_edges([0], []))
    assert netgraph.is_connected(path_graph(4))
    two_parts = netgraph.CommGraph.from_edges(range(4), [(0, 1), (2, 3)])
    assert not netgraph.is_connected(two_parts)
    assert two_parts.components() == [[0, 1], [2, 3]]


def test_metropolis_weights():
    weights = netgraph.metropolis_weights(path_graph(2))
    assert weights[(0, 1)] == approx(0.5)
    assert weights[(1, 0)] == approx(0.5)
    assert weights[(0, 0)] == approx(0.5)

    star = netgraph.CommGraph.from_edges(range(4), [(0, 1), (0, 2), (0, 3)])
    weights = netgraph.metropolis_weights(star)
    assert weights[(0, 2)] == approx(0.25)
    assert weights[(0, 0)] == approx(0.25)
    assert weights[(3, 3)] == approx(0.75)


def test_metropolis_matrix_doubly_stochastic():
    rng = np.random.default_rng(0)
    for _ in range(10):
        graph = netgraph.random_connected_graph(12, 20, rng)
        mat, order = netgraph.metropolis_matrix(graph)
        assert order == list(range(12))
        assert mat == approx(mat.T)
        assert mat.sum(axis=1) == approx(np.ones(12))
        assert np.all(mat >= 0)


def test_random_connected_graph():
    rng = np.random.default_rng(1)
    graph = netgraph.random_connected_graph(20, 80, rng)
    assert len(graph) == 20
    assert len(graph.edges) == 80
    assert netgraph.is_connected(graph)
    with pytest.raises(ValueError):
        netgraph.random_connected_graph(5, 3, rng)
    with pytest.raises(ValueError):
        netgraph.random_connected_graph(3, 4, rng)


def test_ledger():
    ledger = netgraph.CommLedger()
    assert ledger.total_bits() == 0
    assert ledger.bits_per_node() == {}
    with pytest.raises(ValueError):
        ledger.record_message(0, (0, 1), netgraph.DRWT_ITERATE, 4)

    ledger.use_graph(path_graph(3))
    first = ledger.new_round()
    entry = ledger.record_message(first, (0, 1), netgraph.DRWT_ITERATE, 8)
    assert entry.bits == 64 * 8
    ledger.record_message(first, (1, 0), netgraph.DRWT_ITERATE, 8)
    assert ledger.total_bits() == 2 * 64 * 8
    ledger.record_message(ledger.new_round(), (2, 1), netgraph.CKF_INFO, netgraph.ckf_scalars(4))
    assert ledger.current_round == 1
    assert ledger.total_bits(netgraph.CKF_INFO) == 64 * 14
    assert ledger.bits_by_kind() == {netgraph.DRWT_ITERATE: 1024, netgraph.CKF_INFO: 896}
    assert ledger.bits_per_node() == {0: 512, 1: 512, 2: 896}
    assert ledger.mean_bits_per_node(3) == approx(1920 / 3)
    with pytest.raises(ValueError):
        ledger.record_message(2, (0, 2), netgraph.DRWT_ITERATE, 1)
    with pytest.raises(ValueError):
        netgraph.CommLedger(0)


def test_message_sizes():
    assert netgraph.iterate_scalars(4, 2) == 8
    assert netgraph.symmetric_scalars(8) == 36
    assert netgraph.ckf_scalars(4) == 14
    assert netgraph.matched_ckf_rounds(4, 4, 2) == 2
    assert netgraph.matched_ckf_rounds(7, 4, 2) == 4
    assert netgraph.matched_ckf_rounds(1, 4, 2) == 0


def test_ledger_csv():
    fname = 'tmp_ledger.csv'
    ledger = netgraph.CommLedger(32)
    ledger.use_graph(complete_graph(3))
    ledger.record_message(ledger.new_round(), (2, 0), netgraph.HANDOFF_INFO, 3)
    ledger.write_csv(fname)
    with open(fname, 'r') as fid:
        lines = fid.read().splitlines()
    os.remove(fname)
    assert lines == ['round,edge_i,edge_j,kind,scalars,bits', '0,2,0,handoff_info,3,96']
