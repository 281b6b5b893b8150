"""
Planning models: LP builders, solution extraction, verification and output
"""

from app.planning.builders import (
    annualized_nb_cost,
    build_investment_lp,
    build_nb_placement_lp,
    build_simultaneous_lp,
    check_stage_one_flows,
    resolve_contingencies,
)
from app.planning.extraction import extract_plan, merge_stage_plans
from app.planning.models import ModelRunner, diagnose_infeasibility, solve_model, solve_sequential
from app.planning.results import write_plan
from app.planning.schemas import CostReport, NameMap, PlanResult, VerificationCheck, VerificationReport
from app.planning.verify import verify_plan

__all__ = [
    "CostReport",
    "ModelRunner",
    "NameMap",
    "PlanResult",
    "VerificationCheck",
    "VerificationReport",
    "annualized_nb_cost",
    "build_investment_lp",
    "build_nb_placement_lp",
    "build_simultaneous_lp",
    "check_stage_one_flows",
    "diagnose_infeasibility",
    "extract_plan",
    "merge_stage_plans",
    "resolve_contingencies",
    "solve_model",
    "solve_sequential",
    "verify_plan",
    "write_plan",
]
