# netsim/topology.py
"""
Random sensor placement and the breadth-first routing tree over it.

Sensors are dropped uniformly at random in a square whose side grows with the
sensor count so density stays fixed. Two sensors can talk when they are within
radio range of each other. Sensor 0 is the base station by default.
"""
import logging
import math
from dataclasses import dataclass, field

import networkx as nx
import numpy as np

from .exceptions import DisconnectedTopologyError, TopologyError

logger = logging.getLogger(__name__)

DEFAULT_MEAN_DEGREE = 12
DISTANCE_CHUNK = 256


def default_radio_range(density, mean_degree=DEFAULT_MEAN_DEGREE):
    """Range at which a sensor hears `mean_degree` others on average: pi R^2 density = mean degree."""
    return math.sqrt(mean_degree / (math.pi * density))


@dataclass(frozen=True, eq=False)
class Topology:
    node_count: int
    side: float
    radio_range: float
    positions: np.ndarray
    graph: nx.Graph
    seed: int = None
    regenerations: int = 0

    @classmethod
    def from_edges(cls, node_count, edges, positions=None):
        """A hand-made topology, for fixed shapes such as paths and stars."""
        graph = nx.Graph()
        graph.add_nodes_from(range(node_count))
        graph.add_edges_from(edges)
        if positions is None:
            positions = np.zeros((node_count, 2))
        return cls(node_count=node_count, side=1.0, radio_range=1.0,
                   positions=np.asarray(positions, dtype=float), graph=graph)


def _radio_graph(positions, radio_range):
    graph = nx.Graph()
    graph.add_nodes_from(range(len(positions)))
    reach = radio_range ** 2
    for start in range(0, len(positions), DISTANCE_CHUNK):
        block = positions[start:start + DISTANCE_CHUNK]
        squared = ((block[:, None, :] - positions[None, :, :]) ** 2).sum(axis=-1)
        rows, cols = np.nonzero(squared <= reach)
        rows += start
        upper = cols > rows
        graph.add_edges_from(zip(rows[upper].tolist(), cols[upper].tolist()))
    return graph


def generate_topology(node_count, density, radio_range=None, seed=0, max_regenerations=200,
                      mean_degree=DEFAULT_MEAN_DEGREE):
    """
    Place `node_count` sensors uniformly at random in a square of side
    sqrt(node_count / density) and connect every pair within `radio_range`.

    Disconnected placements are thrown away and redrawn from the next derived
    seed; the count of redraws is kept on the result. The same seed always gives
    the same topology.
    """
    if node_count < 1:
        raise TopologyError(f'need at least one sensor, got {node_count}')
    if density <= 0:
        raise TopologyError(f'density must be positive, got {density}')
    if radio_range is None:
        radio_range = default_radio_range(density, mean_degree)
    if radio_range <= 0:
        raise TopologyError(f'radio range must be positive, got {radio_range}')

    side = math.sqrt(node_count / density)
    for attempt in range(max_regenerations + 1):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(attempt,)))
        positions = rng.uniform(0.0, side, size=(node_count, 2))
        graph = _radio_graph(positions, radio_range)
        if nx.is_connected(graph):
            if attempt:
                logger.info('seed %s: connected placement after %d regenerations', seed, attempt)
            return Topology(node_count=node_count, side=side, radio_range=radio_range,
                            positions=positions, graph=graph, seed=seed, regenerations=attempt)
        logger.debug('seed %s attempt %d: %d components', seed, attempt, nx.number_connected_components(graph))
    raise TopologyError(
        f'no connected placement of {node_count} sensors at range {radio_range:.1f} '
        f'after {max_regenerations} regenerations'
    )


@dataclass(frozen=True)
class RoutingTree:
    root: int
    parents: tuple
    levels: tuple
    children: tuple = field(repr=False)

    @property
    def node_count(self):
        return len(self.parents)

    @property
    def depth(self):
        return max(self.levels)

    def bottom_up(self):
        """Nodes deepest level first, ascending id within a level: the order messages are sent."""
        return sorted(range(self.node_count), key=lambda node: (-self.levels[node], node))


def bfs_tree(topology, root=0):
    """
    Breadth-first routing tree: every sensor forwards to a neighbor one hop
    closer to the base station, the lowest-id one when several qualify.
    """
    graph = topology.graph
    if root not in graph:
        raise TopologyError(f'root {root} is not a sensor')
    hops = nx.single_source_shortest_path_length(graph, root)
    if len(hops) < topology.node_count:
        raise DisconnectedTopologyError(min(node for node in graph if node not in hops))

    parents = [None] * topology.node_count
    children = [[] for _ in range(topology.node_count)]
    for node, level in hops.items():
        if node == root:
            continue
        parent = min(neighbor for neighbor in graph.neighbors(node) if hops[neighbor] == level - 1)
        parents[node] = parent
        children[parent].append(node)

    levels = tuple(hops[node] for node in range(topology.node_count))
    return RoutingTree(root=root, parents=tuple(parents), levels=levels,
                       children=tuple(tuple(sorted(kids)) for kids in children))
