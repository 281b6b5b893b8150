"""
DC power-flow sensitivity factors.

PTDF (lines x buses): flow change on each line per MW injected at a bus and
withdrawn at the slack bus. LODF (lines x lines): share of the pre-outage flow
of line k that shifts onto line l when k trips; LODF[k, k] = -1 by convention.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import FrozenSet, Optional, Tuple

import numpy as np
import pandas as pd
import scipy.linalg

from app.core.config import get_settings
from app.core.exceptions import BridgeContingencyError, DisconnectedNetworkError, NetworkDataError
from app.network.schemas import Network
from app.network.topology import incidence_matrix

logger = logging.getLogger(__name__)


def reduced_laplacian(network: Network, slack_index: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Susceptance-weighted Laplacian B = K diag(b) K^T with the slack row and
    column removed, plus the retained bus positions.
    """
    K = incidence_matrix(network)
    laplacian = K @ np.diag(network.susceptance) @ K.T
    keep = np.delete(np.arange(network.n_buses), slack_index)
    return laplacian[np.ix_(keep, keep)], keep


def compute_ptdf(network: Network, slack: Optional[str] = None) -> np.ndarray:
    """
    Power transfer distribution factors.

    Args:
        network: Connected network
        slack: Bus absorbing the injected MW (first bus when omitted)

    Returns:
        PTDF matrix (lines x buses); the slack column is zero
    """
    slack_index = _slack_index(network, slack)
    B_red, keep = reduced_laplacian(network, slack_index)
    K = incidence_matrix(network)

    # PTDF_red = diag(b) K^T[:, keep] B_red^-1, via a dense solve on the symmetric system
    flows_per_angle = np.diag(network.susceptance) @ K[keep, :].T
    try:
        ptdf_red = scipy.linalg.solve(B_red, flows_per_angle.T, assume_a="sym").T
    except scipy.linalg.LinAlgError as e:
        raise DisconnectedNetworkError("reduced Laplacian is singular") from e

    ptdf = np.zeros((network.n_lines, network.n_buses))
    ptdf[:, keep] = ptdf_red
    return ptdf


def compute_lodf(ptdf: np.ndarray, K: np.ndarray, bridge_tol: Optional[float] = None
                 ) -> Tuple[np.ndarray, np.ndarray]:
    """
    Line outage distribution factors from PTDF and incidence.

    LODF[l, k] = [PTDF K]_{l,k} / (1 - [PTDF K]_{k,k}); columns whose
    denominator is below bridge_tol are bridges and hold NaN off the diagonal.

    Returns:
        (lodf, bridge_mask) where bridge_mask[k] flags an islanding outage
    """
    if bridge_tol is None:
        bridge_tol = get_settings().bridge_tol

    transfer = ptdf @ K
    denominator = 1.0 - np.diag(transfer)
    bridge_mask = np.abs(denominator) < bridge_tol

    safe = np.where(bridge_mask, 1.0, denominator)
    lodf = transfer / safe[np.newaxis, :]
    lodf[:, bridge_mask] = np.nan
    np.fill_diagonal(lodf, -1.0)
    return lodf, bridge_mask


@dataclass(frozen=True)
class SensitivitySet:
    """PTDF, LODF and the numerically flagged bridges of one network"""
    ptdf: np.ndarray
    lodf: np.ndarray
    bridge_mask: np.ndarray
    line_ids: Tuple[str, ...]
    bus_ids: Tuple[str, ...]
    slack_bus: str

    @classmethod
    def build(cls, network: Network, slack: Optional[str] = None,
              bridge_tol: Optional[float] = None) -> "SensitivitySet":
        slack = slack or get_settings().slack_bus or network.bus_ids[0]
        ptdf = compute_ptdf(network, slack)
        lodf, bridge_mask = compute_lodf(ptdf, incidence_matrix(network), bridge_tol)
        for array in (ptdf, lodf, bridge_mask):
            array.flags.writeable = False
        sens = cls(
            ptdf=ptdf,
            lodf=lodf,
            bridge_mask=bridge_mask,
            line_ids=network.line_ids,
            bus_ids=network.bus_ids,
            slack_bus=slack,
        )
        if sens.bridges:
            logger.warning(f"⚠️ Bridge lines have no LODF column: {sorted(sens.bridges)}")
        return sens

    @property
    def bridges(self) -> FrozenSet[str]:
        return frozenset(line_id for line_id, flag in zip(self.line_ids, self.bridge_mask) if flag)

    def line_position(self, line_id: str) -> int:
        try:
            return self.line_ids.index(line_id)
        except ValueError as e:
            raise NetworkDataError(f"unknown line '{line_id}'") from e

    def corrected_flow_coefficients(self, k: int) -> np.ndarray:
        """
        Sensitivity of post-outage flows to nodal booster injections for outage k.

        Row l is PTDF[l, :] + LODF[l, k] * PTDF[k, :]; the row of k itself is zero.
        """
        if self.bridge_mask[k]:
            raise BridgeContingencyError(self.line_ids[k])
        coefficients = self.ptdf + np.outer(self.lodf[:, k], self.ptdf[k, :])
        coefficients[k, :] = 0.0
        return coefficients


def dump_sensitivities(sens: SensitivitySet, out_dir: Path | str) -> None:
    """Write ptdf.csv and lodf.csv (line ids as rows) for debugging"""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(sens.ptdf, index=sens.line_ids, columns=sens.bus_ids).rename_axis("line").to_csv(
        out_dir / "ptdf.csv"
    )
    pd.DataFrame(sens.lodf, index=sens.line_ids, columns=sens.line_ids).rename_axis("line").to_csv(
        out_dir / "lodf.csv"
    )
    logger.info(f"🧮 Sensitivities written to {out_dir}")


def _slack_index(network: Network, slack: Optional[str]) -> int:
    if slack is None:
        return 0
    if slack not in network.bus_index:
        raise NetworkDataError(f"slack bus '{slack}' is not a bus of the network")
    return network.bus_index[slack]
