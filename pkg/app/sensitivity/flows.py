"""
Direct DC power-flow solve and LODF-based post-outage flows.

dc_flow solves the angle equations from scratch and serves as the oracle the
sensitivity-based formulas are checked against.
"""

import logging
from typing import Mapping, Optional, Union

import networkx as nx
import numpy as np
import scipy.linalg

from app.core.config import get_settings
from app.core.exceptions import BridgeContingencyError, DisconnectedNetworkError, UnbalancedInjectionError
from app.network.schemas import Network
from app.network.topology import incidence_matrix
from app.sensitivity.factors import reduced_laplacian

logger = logging.getLogger(__name__)

BALANCE_TOLERANCE = 1e-6  # MW

Injections = Union[np.ndarray, Mapping[str, float]]


def injection_vector(network: Network, injections: Injections) -> np.ndarray:
    """Dense injection vector in bus order from an array or a {bus: MW} mapping"""
    if isinstance(injections, Mapping):
        vector = np.zeros(network.n_buses)
        for bus_id, value in injections.items():
            vector[network.bus_index[bus_id]] += value
        return vector
    vector = np.asarray(injections, dtype=float)
    if vector.shape != (network.n_buses,):
        raise ValueError(f"expected {network.n_buses} injections, got shape {vector.shape}")
    return vector


def dc_angles(network: Network, injections: Injections, slack: Optional[str] = None,
              base_mva: Optional[float] = None) -> np.ndarray:
    """Voltage angles (radians) solving B theta = p / base with theta_slack = 0"""
    p = injection_vector(network, injections)
    imbalance = float(p.sum())
    if abs(imbalance) > BALANCE_TOLERANCE:
        raise UnbalancedInjectionError(f"injections sum to {imbalance:.6g} MW, expected 0")
    if not nx.is_connected(network.graph):
        raise DisconnectedNetworkError("network is disconnected")

    base_mva = base_mva or get_settings().base_mva
    slack_index = network.bus_index[slack] if slack else 0
    B_red, keep = reduced_laplacian(network, slack_index)

    theta = np.zeros(network.n_buses)
    theta[keep] = scipy.linalg.solve(B_red, p[keep] / base_mva, assume_a="sym")
    return theta


def dc_flow(network: Network, injections: Injections, slack: Optional[str] = None,
            base_mva: Optional[float] = None) -> np.ndarray:
    """
    Line flows of the linearized power flow.

    Args:
        network: Connected network
        injections: Net MW per bus (generation minus demand), summing to zero

    Returns:
        Flow per line in MW, positive in from_bus -> to_bus direction

    Raises:
        UnbalancedInjectionError: injections do not sum to 0 within 1e-6 MW
        DisconnectedNetworkError: the graph is not connected
    """
    base_mva = base_mva or get_settings().base_mva
    theta = dc_angles(network, injections, slack, base_mva)
    K = incidence_matrix(network)
    return base_mva * network.susceptance * (K.T @ theta)


def post_outage_flow(base_flows: np.ndarray, lodf: np.ndarray, k: int,
                     bridge_mask: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Flows on the surviving lines right after line k trips.

    Each survivor l carries base_flows[l] + LODF[l, k] * base_flows[k].

    Args:
        bridge_mask: Numerically flagged bridges (SensitivitySet.bridge_mask);
            without it a bridge is recognised by its NaN column

    Returns:
        Flows of all lines except k, in line order

    Raises:
        BridgeContingencyError: k is a bridge
    """
    base_flows = np.asarray(base_flows, dtype=float)
    column = lodf[:, k]
    survivors = np.delete(column, k)
    # a connected network with a single line is a tree, so that line is a bridge
    if (bridge_mask is not None and bridge_mask[k]) or survivors.size == 0 or np.isnan(survivors).any():
        raise BridgeContingencyError(f"#{k}")
    shifted = base_flows + column * base_flows[k]
    return np.delete(shifted, k)
