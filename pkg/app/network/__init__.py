"""
Power-system data model, CSV I/O and topology helpers
"""

from app.network.loader import load_network, write_network
from app.network.schemas import Bus, Generator, Line, Load, Network, Snapshot
from app.network.topology import find_bridges, generator_incidence, incidence_matrix

__all__ = [
    "Bus",
    "Generator",
    "Line",
    "Load",
    "Network",
    "Snapshot",
    "find_bridges",
    "generator_incidence",
    "incidence_matrix",
    "load_network",
    "write_network",
]
