"""
Planning strategies: preventive, sequential and simultaneous.

Each strategy builds its LP(s), solves them with the configured backend and
returns a PlanResult. Non-optimal solves raise ScenarioFailure carrying the
matching exit code and, for infeasible programs, the constraint family whose
removal restores feasibility.
"""

import logging
from pathlib import Path
from typing import Optional, Tuple

from app.core.config import PlanningModel, ScenarioConfig
from app.core.exceptions import ScenarioFailure
from app.lp.backends import LPBackend, solve
from app.lp.lp_format import write_lp_file
from app.lp.program import LinearProgram, Solution, SolveStatus
from app.network.schemas import Network
from app.performance import StageTimer
from app.planning.builders import build_investment_lp, build_nb_placement_lp, build_simultaneous_lp
from app.planning.extraction import exit_code_for, extract_plan, merge_stage_plans
from app.planning.schemas import NameMap, PlanResult
from app.sensitivity.factors import SensitivitySet

logger = logging.getLogger(__name__)

# removed in this order when looking for the cause of an infeasibility
DIAGNOSTIC_FAMILIES = ("co2", "tatl/", "corrected/", "patl/")


def diagnose_infeasibility(lp: LinearProgram, backend: Optional[str | LPBackend] = None) -> Optional[str]:
    """
    Name the constraint family responsible for an infeasible program.

    Families are dropped cumulatively (CO2 cap, then TATL rows, then corrected
    post-outage rows, then PATL rows) until the program solves.

    Returns:
        The last family removed before the program became feasible, or None
    """
    candidate = lp
    for family in DIAGNOSTIC_FAMILIES:
        if not candidate.constraints_with_prefix(family):
            continue
        candidate = candidate.without_constraints(family)
        solution = solve(candidate, backend)
        if solution.status != SolveStatus.INFEASIBLE:
            logger.info(f"🔍 {lp.name}: infeasibility caused by '{family.rstrip('/')}' constraints")
            return family.rstrip("/")
    return None


class ModelRunner:
    """Builds and solves the planning LPs of one scenario"""

    def __init__(self, network: Network, config: ScenarioConfig, sens: Optional[SensitivitySet] = None,
                 backend: Optional[str | LPBackend] = None, timer: Optional[StageTimer] = None,
                 dump_lp_dir: Optional[Path] = None):
        self.network = network
        self.config = config
        self.backend = backend
        self.timer = timer or StageTimer(config.name)
        self.dump_lp_dir = Path(dump_lp_dir) if dump_lp_dir else None
        if sens is None:
            with self.timer.stage("sensitivities"):
                sens = SensitivitySet.build(network, config.slack_bus)
        self.sens = sens

    def _solve(self, lp: LinearProgram, name_map: NameMap) -> PlanResult:
        if self.dump_lp_dir:
            write_lp_file(lp, self.dump_lp_dir / f"{lp.name}.lp")
        with self.timer.stage(f"solve:{name_map.stage}"):
            solution = solve(lp, self.backend)
        self._raise_unless_optimal(lp, solution)
        with self.timer.stage(f"extract:{name_map.stage}"):
            return extract_plan(solution, name_map, self.network, self.config)

    def _raise_unless_optimal(self, lp: LinearProgram, solution: Solution) -> None:
        if solution.is_optimal:
            return
        message = f"{lp.name} is {solution.status.value}"
        if solution.status == SolveStatus.INFEASIBLE:
            family = diagnose_infeasibility(lp, self.backend)
            if family:
                message += f"; removing the '{family}' constraints restores feasibility"
        elif solution.message:
            message += f": {solution.message}"
        raise ScenarioFailure(message, exit_code_for(solution.status))

    def preventive(self) -> PlanResult:
        """Investment LP with post-outage flows held within PATL (tatl_factor 1)"""
        with self.timer.stage("build:investment"):
            lp, name_map = build_investment_lp(
                self.network, self.config, self.sens, tatl_factor=1.0, model=PlanningModel.PREVENTIVE
            )
        return self._solve(lp, name_map)

    def investment(self) -> PlanResult:
        """Investment LP at the configured TATL factor (stage one of the sequential model)"""
        with self.timer.stage("build:investment"):
            lp, name_map = build_investment_lp(
                self.network, self.config, self.sens, model=PlanningModel.SEQUENTIAL
            )
        return self._solve(lp, name_map)

    def sequential(self) -> Tuple[PlanResult, PlanResult, PlanResult]:
        """
        Stage one: investment LP at the configured TATL factor.
        Stage two: booster placement against the stage-one flows.

        Returns:
            (merged plan, stage-one plan, stage-two plan)
        """
        stage_one = self.investment()

        with self.timer.stage("build:nb_placement"):
            lp, name_map = build_nb_placement_lp(self.network, stage_one.line_flow, self.config, self.sens)
        stage_two = self._solve(lp, name_map)
        return merge_stage_plans(stage_one, stage_two), stage_one, stage_two

    def simultaneous(self) -> PlanResult:
        """Generation and boosters co-optimized in one LP"""
        with self.timer.stage("build:simultaneous"):
            lp, name_map = build_simultaneous_lp(self.network, self.config, self.sens)
        return self._solve(lp, name_map)

    def run(self, model: Optional[PlanningModel] = None) -> PlanResult:
        model = model or self.config.model
        logger.info(f"🚀 [{self.config.name}] running {model.value} model")
        if model == PlanningModel.PREVENTIVE:
            return self.preventive()
        if model == PlanningModel.SEQUENTIAL:
            return self.sequential()[0]
        return self.simultaneous()


def solve_sequential(network: Network, config: ScenarioConfig, sens: Optional[SensitivitySet] = None,
                     backend: Optional[str | LPBackend] = None) -> PlanResult:
    """Sequential strategy; the cost report lists both stage objectives"""
    return ModelRunner(network, config, sens, backend).sequential()[0]


def solve_model(network: Network, config: ScenarioConfig, model: Optional[PlanningModel] = None,
                sens: Optional[SensitivitySet] = None, backend: Optional[str | LPBackend] = None) -> PlanResult:
    """Run one planning strategy (config.model by default)"""
    return ModelRunner(network, config, sens, backend).run(model)
