"""
Scenario API
============
Runs planning scenarios, comparisons and sweeps over HTTP. Solves block, so
they are executed in the thread pool.
"""

import logging
from pathlib import Path
from typing import Dict, List, Optional

from fastapi import APIRouter, HTTPException, status
from fastapi.concurrency import run_in_threadpool
from pydantic import BaseModel

from app.core.config import PlanningModel, ScenarioConfig
from app.core.exceptions import ExitCode, PlanningError
from app.planning.schemas import CostReport, VerificationReport
from app.services.scenario_runner import ComparisonRow, SweepRow, SweepSpec, compare_strategies, run_scenario, run_sweep

logger = logging.getLogger(__name__)

router = APIRouter()


class RunRequest(BaseModel):
    network_dir: str
    config: ScenarioConfig = ScenarioConfig()
    out_dir: Optional[str] = None


class RunResponse(BaseModel):
    scenario: str
    model: PlanningModel
    costs: CostReport
    nb_capacity_up: Dict[str, float]
    nb_capacity_down: Dict[str, float]
    generator_capacity: Dict[str, float]
    verification: VerificationReport
    out_dir: Optional[str] = None


class CompareRequest(BaseModel):
    network_dir: str
    config: ScenarioConfig = ScenarioConfig()
    out_dir: Optional[str] = None


class SweepRequest(BaseModel):
    network_dir: str
    sweep: SweepSpec
    out_dir: Optional[str] = None


def planning_error_to_http(error: PlanningError) -> HTTPException:
    """Input errors map to 400; solver and verification outcomes to 422"""
    code = status.HTTP_400_BAD_REQUEST if error.exit_code == ExitCode.INPUT_ERROR else status.HTTP_422_UNPROCESSABLE_ENTITY
    return HTTPException(status_code=code, detail={"error": str(error), "exit_code": int(error.exit_code)})


def check_network_dir(network_dir: str) -> None:
    if not Path(network_dir).is_dir():
        raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=f"network directory not found: {network_dir}")


@router.post("/run", response_model=RunResponse)
async def run(request: RunRequest):
    """Solve, verify and (optionally) write one scenario"""
    check_network_dir(request.network_dir)
    logger.info(f"🚀 API run for scenario '{request.config.name}'")
    try:
        outcome = await run_in_threadpool(run_scenario, request.network_dir, request.config, request.out_dir)
    except PlanningError as e:
        logger.warning(f"⚠️ Scenario '{request.config.name}' failed: {e}")
        raise planning_error_to_http(e) from e

    plan = outcome.plan
    return RunResponse(
        scenario=plan.scenario,
        model=plan.model,
        costs=plan.cost_report,
        nb_capacity_up=dict(zip(plan.nb_bus_ids, plan.nb_capacity_up.tolist())),
        nb_capacity_down=dict(zip(plan.nb_bus_ids, plan.nb_capacity_down.tolist())),
        generator_capacity=dict(zip(plan.generator_ids, plan.generator_capacity.tolist())),
        verification=outcome.report,
        out_dir=str(outcome.out_dir) if outcome.out_dir else None,
    )


@router.post("/compare", response_model=List[ComparisonRow])
async def compare(request: CompareRequest):
    """Three-way cost comparison of preventive, sequential and simultaneous"""
    check_network_dir(request.network_dir)
    try:
        return await run_in_threadpool(compare_strategies, request.network_dir, request.config, request.out_dir)
    except PlanningError as e:
        raise planning_error_to_http(e) from e


@router.post("/sweep", response_model=List[SweepRow])
async def sweep(request: SweepRequest):
    """Parameter sweep; failed points are reported per row"""
    check_network_dir(request.network_dir)
    try:
        return await run_in_threadpool(run_sweep, request.network_dir, request.sweep, request.out_dir, 1)
    except PlanningError as e:
        raise planning_error_to_http(e) from e
