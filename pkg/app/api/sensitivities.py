"""
Sensitivity API: PTDF, LODF and bridge lines of a network directory
"""

import logging
from typing import List, Optional

import numpy as np
from fastapi import APIRouter
from fastapi.concurrency import run_in_threadpool
from pydantic import BaseModel

from app.api.scenarios import check_network_dir, planning_error_to_http
from app.core.exceptions import PlanningError
from app.network.loader import load_network
from app.sensitivity.factors import SensitivitySet

logger = logging.getLogger(__name__)

router = APIRouter()


class SensitivityRequest(BaseModel):
    network_dir: str
    slack_bus: Optional[str] = None


class SensitivityResponse(BaseModel):
    slack_bus: str
    bus_ids: List[str]
    line_ids: List[str]
    ptdf: List[List[float]]
    lodf: List[List[Optional[float]]]  # null in bridge columns
    bridges: List[str]


def _compute(request: SensitivityRequest) -> SensitivityResponse:
    network = load_network(request.network_dir)
    sens = SensitivitySet.build(network, request.slack_bus)
    lodf = [[None if np.isnan(v) else float(v) for v in row] for row in sens.lodf]
    return SensitivityResponse(
        slack_bus=sens.slack_bus,
        bus_ids=list(sens.bus_ids),
        line_ids=list(sens.line_ids),
        ptdf=sens.ptdf.tolist(),
        lodf=lodf,
        bridges=sorted(sens.bridges),
    )


@router.post("", response_model=SensitivityResponse)
async def sensitivities(request: SensitivityRequest):
    """Compute PTDF/LODF for a network directory"""
    check_network_dir(request.network_dir)
    try:
        return await run_in_threadpool(_compute, request)
    except PlanningError as e:
        raise planning_error_to_http(e) from e
