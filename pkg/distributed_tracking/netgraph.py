""" Communication network: undirected graph snapshots, the relevant subgraph of a
target, Metropolis consensus weights and a ledger accounting every bit sent.
"""
import logging
from dataclasses import dataclass

import networkx as nx
import numpy as np

from distributed_tracking import io

logger = logging.getLogger(__name__)

DRWT_ITERATE = 'drwt_iterate'
HANDOFF_INFO = 'handoff_info'
CKF_INFO = 'ckf_info'

LEDGER_COLUMNS = ('round', 'edge_i', 'edge_j', 'kind', 'scalars', 'bits')


class DisconnectedGraphError(RuntimeError):
    pass


class CommGraph:
    """ Immutable snapshot of the communication graph at timestep ``t``

    :param graph: Undirected graph with integer sensor ids as nodes
    :type graph: networkx.Graph

    :param t: Timestep
    :type t: int
    """

    def __init__(self, graph, t=0):
        if nx.number_of_selfloops(graph) > 0:
            raise ValueError('Communication graphs cannot contain self-loops')
        self.graph = nx.freeze(nx.Graph(graph))
        self.t = t

    @classmethod
    def from_edges(cls, vertices, edges, t=0):
        graph = nx.Graph()
        graph.add_nodes_from(vertices)
        for i, j in edges:
            if i not in graph or j not in graph:
                raise ValueError('Edge (' + str(i) + ', ' + str(j) + ') references an unknown vertex')
            graph.add_edge(i, j)
        return cls(graph, t)

    @property
    def vertices(self):
        return frozenset(self.graph.nodes)

    @property
    def edges(self):
        return {(min(i, j), max(i, j)) for i, j in self.graph.edges}

    def neighbors(self, i):
        return sorted(self.graph.neighbors(i))

    def degree(self, i):
        return self.graph.degree(i)

    def has_edge(self, i, j):
        return self.graph.has_edge(i, j)

    def subgraph(self, vertices):
        """ Induced subgraph on ``vertices``"""
        return CommGraph(self.graph.subgraph(vertices), self.t)

    def components(self):
        """ Connected components as sorted vertex lists, ordered by their smallest vertex"""
        return sorted((sorted(c) for c in nx.connected_components(self.graph)), key=lambda c: c[0])

    def __len__(self):
        return self.graph.number_of_nodes()


@dataclass(frozen=True)
class RelevantSubgraph:
    """ Sensors relevant to estimating a target and the links among them"""
    target_id: int
    graph: CommGraph

    @property
    def vertices(self):
        return self.graph.vertices

    @property
    def edges(self):
        return self.graph.edges


def disk_graph(positions, radius, t=0):
    """ Graph linking every pair of sensors within ``radius`` of each other

    :param positions: Planar position [m] per sensor id
    :type positions: dict[ int, np.ndarray ]

    :param radius: Communication radius [m]
    :type radius: float

    :param t: Timestep of the snapshot
    :type t: int

    :returns: The disk graph
    :rtype: CommGraph
    """
    if radius <= 0:
        raise ValueError('radius must be positive, got ' + str(radius))
    ids = sorted(positions)
    graph = nx.Graph()
    graph.add_nodes_from(ids)
    if len(ids) > 1:
        points = np.array([positions[i] for i in ids], dtype=float)
        dist = np.linalg.norm(points[:, None, :] - points[None, :, :], axis=-1)
        rows, cols = np.nonzero(np.triu(dist <= radius, k=1))
        graph.add_edges_from((ids[r], ids[c]) for r, c in zip(rows, cols))
    return CommGraph(graph, t)


def relevant_subgraph(g, observers, target_id=0):
    """ Induced subgraph of ``g`` on the sensors that observed the target within the window

    :param g: Communication graph
    :type g: CommGraph

    :param observers: Sensors having observed the target during the window
    :type observers: Iterable[ int ]

    :param target_id: The target
    :type target_id: int

    :returns: Relevant subgraph
    :rtype: RelevantSubgraph
    """
    observers = set(observers)
    unknown = observers - g.vertices
    if unknown:
        raise ValueError('Observers ' + str(sorted(unknown)) + ' are not vertices of the graph')
    return RelevantSubgraph(target_id, g.subgraph(observers))


def is_connected(g):
    """ True if every pair of vertices is joined by a path. Graphs with fewer than two
    vertices are connected.
    """
    graph = g.graph.graph if isinstance(g, RelevantSubgraph) else g.graph
    if graph.number_of_nodes() == 0:
        return True
    return nx.is_connected(graph)


def metropolis_weights(g):
    """ Metropolis consensus weights :math:`w_{ij} = 1 / (1 + \\max(d_i, d_j))` for
    every edge and :math:`w_{ii} = 1 - \\sum_j w_{ij}`.

    :param g: Communication graph
    :type g: CommGraph

    :returns: Weight per ordered pair, both directions of each edge and all self pairs
    :rtype: dict[ tuple[ int, int ], float ]
    """
    weights = {}
    for i, j in g.graph.edges:
        w = 1.0 / (1 + max(g.degree(i), g.degree(j)))
        weights[(i, j)] = w
        weights[(j, i)] = w
    for i in g.graph.nodes:
        weights[(i, i)] = 1.0 - sum(weights[(i, j)] for j in g.neighbors(i))
    return weights


def metropolis_matrix(g, order=None):
    """ Dense Metropolis weight matrix with rows and columns in ``order``
    (sorted vertices if not given)
    """
    order = sorted(g.vertices) if order is None else list(order)
    index = {v: k for k, v in enumerate(order)}
    mat = np.zeros((len(order), len(order)))
    for (i, j), w in metropolis_weights(g).items():
        mat[index[i], index[j]] = w
    return mat, order


def random_connected_graph(n_nodes, n_edges, rng, max_tries=100):
    """ Uniformly drawn graph with ``n_nodes`` vertices and ``n_edges`` edges,
    redrawn until connected.

    :param rng: Random stream the graph seed is drawn from
    :type rng: np.random.Generator

    :returns: Static communication graph
    :rtype: CommGraph
    """
    if not n_nodes - 1 <= n_edges <= n_nodes * (n_nodes - 1) // 2:
        raise ValueError('Cannot connect ' + str(n_nodes) + ' nodes with ' + str(n_edges) + ' edges')
    for _ in range(max_tries):
        graph = nx.gnm_random_graph(n_nodes, n_edges, seed=int(rng.integers(2 ** 32)))
        if n_nodes <= 1 or nx.is_connected(graph):
            return CommGraph(graph, 0)
    raise RuntimeError('No connected graph found in ' + str(max_tries) + ' draws')


def iterate_scalars(n, num_steps):
    """ Scalars in one window estimate vector"""
    return n * num_steps


def symmetric_scalars(size):
    """ Scalars in a symmetric matrix of the given size (upper triangle)"""
    return size * (size + 1) // 2


def ckf_scalars(n):
    """ Scalars in the nonzero timestep block of a CKF information pair"""
    return symmetric_scalars(n) + n


def matched_ckf_rounds(drwt_rounds, n, num_steps):
    """ Largest number of CKF rounds that sends no more than ``drwt_rounds`` DRWT rounds
    over the same graph
    """
    return drwt_rounds * iterate_scalars(n, num_steps) // ckf_scalars(n)


@dataclass(frozen=True)
class LedgerEntry:
    round: int
    edge_i: int
    edge_j: int
    kind: str
    scalars: int
    bits: int


class CommLedger:
    """ Append-only record of all messages, one entry per directed message.
    Messages are validated against the graph set by :py:meth:`use_graph`.

    :param bits_per_scalar: Width of a transmitted scalar
    :type bits_per_scalar: int
    """

    def __init__(self, bits_per_scalar=64):
        if bits_per_scalar < 1:
            raise ValueError('bits_per_scalar must be positive, got ' + str(bits_per_scalar))
        self.bits_per_scalar = bits_per_scalar
        self.entries = []
        self.graph = None
        self._round = -1
        self._totals = {}

    def use_graph(self, g):
        self.graph = g

    def new_round(self):
        """ Start a new communication round and return its index"""
        self._round += 1
        return self._round

    @property
    def current_round(self):
        return self._round

    def record_message(self, round_index, edge, kind, scalar_count):
        """ Record a message from ``edge[0]`` to ``edge[1]``

        :returns: The recorded entry
        :rtype: LedgerEntry
        """
        sender, receiver = edge
        if self.graph is None or not self.graph.has_edge(sender, receiver):
            raise ValueError('Message over unknown edge (' + str(sender) + ', ' + str(receiver) + ')')
        if scalar_count < 0:
            raise ValueError('Negative message size')
        entry = LedgerEntry(int(round_index), int(sender), int(receiver), kind, int(scalar_count),
                            int(scalar_count) * self.bits_per_scalar)
        self.entries.append(entry)
        self._totals[kind] = self._totals.get(kind, 0) + entry.bits
        return entry

    def bits_per_node(self):
        """ Bits sent per node"""
        totals = {}
        for e in self.entries:
            totals[e.edge_i] = totals.get(e.edge_i, 0) + e.bits
        return totals

    def total_bits(self, kind=None):
        if kind is None:
            return sum(self._totals.values())
        return self._totals.get(kind, 0)

    def bits_by_kind(self):
        return dict(self._totals)

    def mean_bits_per_node(self, num_nodes, kind=None):
        """ Total bits divided by the number of nodes in the network"""
        return self.total_bits(kind) / num_nodes if num_nodes > 0 else 0.0

    def write_csv(self, path):
        io.write_csv(path, LEDGER_COLUMNS, (io.row_values(e) for e in self.entries))
