"""
DC sensitivity factors (PTDF/LODF) and the direct power-flow oracle
"""

from app.sensitivity.factors import SensitivitySet, compute_lodf, compute_ptdf, dump_sensitivities
from app.sensitivity.flows import dc_angles, dc_flow, injection_vector, post_outage_flow

__all__ = [
    "SensitivitySet",
    "compute_lodf",
    "compute_ptdf",
    "dc_angles",
    "dc_flow",
    "dump_sensitivities",
    "injection_vector",
    "post_outage_flow",
]
