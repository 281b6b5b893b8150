"""
Graph-level views of a Network: incidence matrices and bridge detection.
"""

import logging
from collections import Counter
from typing import FrozenSet

import networkx as nx
import numpy as np

from app.network.schemas import Network

logger = logging.getLogger(__name__)


def incidence_matrix(network: Network) -> np.ndarray:
    """
    Bus-line incidence matrix K (buses x lines).

    K[i, l] is +1 where line l starts, -1 where it ends, 0 elsewhere, so every
    column holds exactly one +1 and one -1.
    """
    K = np.zeros((network.n_buses, network.n_lines))
    for l, line in enumerate(network.lines):
        K[network.bus_index[line.from_bus], l] = 1.0
        K[network.bus_index[line.to_bus], l] = -1.0
    return K


def generator_incidence(network: Network) -> np.ndarray:
    """Bus-generator incidence K^g (buses x generators) with 1 at the host bus"""
    Kg = np.zeros((network.n_buses, len(network.generators)))
    for s, gen in enumerate(network.generators):
        Kg[network.bus_index[gen.bus], s] = 1.0
    return Kg


def find_bridges(network: Network) -> FrozenSet[str]:
    """
    Lines whose removal disconnects the network.

    Parallel lines between the same pair of buses are never bridges, so the
    multigraph is collapsed to a simple graph and only single edges count.
    """
    multiplicity = Counter(frozenset((line.from_bus, line.to_bus)) for line in network.lines)
    simple = nx.Graph()
    simple.add_nodes_from(network.bus_ids)
    simple.add_edges_from(tuple(pair) for pair in multiplicity)

    bridge_pairs = {frozenset(edge) for edge in nx.bridges(simple)}
    bridges = frozenset(
        line.id
        for line in network.lines
        if frozenset((line.from_bus, line.to_bus)) in bridge_pairs
        and multiplicity[frozenset((line.from_bus, line.to_bus))] == 1
    )
    if bridges:
        logger.debug(f"Bridge lines: {sorted(bridges)}")
    return bridges
