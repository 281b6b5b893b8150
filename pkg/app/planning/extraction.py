"""
Maps solver output back to PlanResult arrays and recomputes the costs.
"""

import logging
from dataclasses import replace
from typing import Callable, Dict

import numpy as np

from app.core.config import ScenarioConfig
from app.core.exceptions import CorruptedSolveError, ExitCode, ScenarioFailure
from app.lp.program import Solution, SolveStatus
from app.network.schemas import Network
from app.planning.schemas import (
    DOWN,
    UP,
    CostReport,
    NameMap,
    PlanResult,
    angle,
    flow,
    gen_capacity,
    gen_dispatch,
    nb_capacity,
    nb_dispatch,
)

logger = logging.getLogger(__name__)

_STATUS_EXIT = {
    SolveStatus.INFEASIBLE: ExitCode.INFEASIBLE,
    SolveStatus.UNBOUNDED: ExitCode.UNBOUNDED,
    SolveStatus.ERROR: ExitCode.SOLVER_ERROR,
}


def exit_code_for(status: SolveStatus) -> ExitCode:
    return _STATUS_EXIT.get(status, ExitCode.OK)


def _reader(solution: Solution) -> Callable[[str], float]:
    def value(name: str) -> float:
        try:
            return solution.primal[name]
        except KeyError as e:
            raise CorruptedSolveError(f"solution lacks variable '{name}'") from e
    return value


def extract_plan(solution: Solution, name_map: NameMap, network: Network, config: ScenarioConfig) -> PlanResult:
    """
    Build a PlanResult from an optimal solution.

    The cost report is recomputed from coefficients and primal values rather
    than taken from the solver objective.

    Raises:
        ScenarioFailure: the solution is not optimal
        CorruptedSolveError: a variable expected by the name map is missing
    """
    if not solution.is_optimal:
        raise ScenarioFailure(
            f"{name_map.stage} LP is {solution.status.value}: {solution.message}",
            exit_code_for(solution.status),
        )
    value = _reader(solution)
    T = name_map.n_snapshots
    weights = network.weights
    n_gen, n_lines, n_buses = len(name_map.generator_ids), len(name_map.line_ids), len(name_map.bus_ids)

    capacity = np.zeros(n_gen)
    dispatch = np.zeros((T, n_gen))
    flows = np.zeros((T, n_lines))
    angles = np.zeros((T, n_buses))
    capital_generation = operation_generation = 0.0

    if name_map.has_generation:
        for s, gen in enumerate(network.generators):
            capacity[s] = value(gen_capacity(gen.id))
            for t in range(T):
                dispatch[t, s] = value(gen_dispatch(gen.id, t))
        for l, line_id in enumerate(name_map.line_ids):
            for t in range(T):
                flows[t, l] = value(flow(line_id, t))
        for i, bus_id in enumerate(name_map.bus_ids):
            for t in range(T):
                angles[t, i] = value(angle(bus_id, t))
        capital_costs = np.array([gen.capital_cost for gen in network.generators])
        marginal_costs = np.array([gen.marginal_cost for gen in network.generators])
        capital_generation = float(capital_costs @ capacity)
        operation_generation = float(weights @ (dispatch @ marginal_costs)) if n_gen else 0.0
    elif name_map.fixed_flows is not None:
        flows = np.array(name_map.fixed_flows, dtype=float)

    nb_bus_ids = name_map.bus_ids if name_map.has_boosters else ()
    K, B = len(name_map.contingencies), len(nb_bus_ids)
    nb_up, nb_down = np.zeros(B), np.zeros(B)
    p_up = np.zeros((T, K if B else 0, B))
    p_down = np.zeros_like(p_up)
    nb_capital = nb_operation = 0.0

    if name_map.has_boosters:
        for i, bus_id in enumerate(nb_bus_ids):
            nb_up[i] = value(nb_capacity(UP, bus_id))
            nb_down[i] = value(nb_capacity(DOWN, bus_id))
            for t in range(T):
                for k, outage in enumerate(name_map.contingencies):
                    p_up[t, k, i] = value(nb_dispatch(UP, bus_id, t, outage))
                    p_down[t, k, i] = value(nb_dispatch(DOWN, bus_id, t, outage))
        nb_capital = config.nb_capital_cost_up * nb_up.sum() + config.nb_capital_cost_down * nb_down.sum()
        nb_operation = float(
            weights @ (config.nb_dispatch_cost_up * p_up.sum(axis=(1, 2))
                       + config.nb_dispatch_cost_down * p_down.sum(axis=(1, 2)))
        )

    report = CostReport.from_components(
        capital_generation=capital_generation,
        operation_generation=operation_generation,
        nb_capital=float(nb_capital),
        nb_operation=nb_operation,
        stage_objectives={name_map.stage: float(solution.objective)},
    )
    gap = abs(report.total - solution.objective)
    if gap > 1e-6 * max(1.0, abs(solution.objective)):
        logger.warning(f"⚠️ Recomputed cost {report.total:.6f} differs from solver objective {solution.objective:.6f}")

    return PlanResult(
        scenario=config.name,
        model=name_map.model,
        generator_ids=name_map.generator_ids,
        line_ids=name_map.line_ids,
        bus_ids=name_map.bus_ids,
        tatl_factor=name_map.tatl_factor,
        contingencies=name_map.contingencies,
        generator_capacity=capacity,
        dispatch=dispatch,
        line_flow=flows,
        angles=angles,
        nb_bus_ids=nb_bus_ids,
        nb_capacity_up=nb_up,
        nb_capacity_down=nb_down,
        nb_dispatch_up=p_up,
        nb_dispatch_down=p_down,
        cost_report=report,
        co2_cap=name_map.co2_cap,
        solver_objective=float(solution.objective),
        solve_times={name_map.stage: solution.solve_time},
    )


def merge_stage_plans(stage_one: PlanResult, stage_two: PlanResult) -> PlanResult:
    """
    Combine the generation plan of stage one with the boosters of stage two.

    The merged cost report keeps both stage objectives; its total is their sum.
    """
    one, two = stage_one.cost_report, stage_two.cost_report
    stage_objectives: Dict[str, float] = {**one.stage_objectives, **two.stage_objectives}
    report = CostReport.from_components(
        capital_generation=one.capital_generation,
        operation_generation=one.operation_generation,
        nb_capital=two.nb_capital,
        nb_operation=two.nb_operation,
        stage_objectives=stage_objectives,
    )
    return replace(
        stage_one,
        model=stage_two.model,
        nb_bus_ids=stage_two.nb_bus_ids,
        nb_capacity_up=stage_two.nb_capacity_up,
        nb_capacity_down=stage_two.nb_capacity_down,
        nb_dispatch_up=stage_two.nb_dispatch_up,
        nb_dispatch_down=stage_two.nb_dispatch_down,
        cost_report=report,
        solver_objective=sum(stage_objectives.values()),
        solve_times={**stage_one.solve_times, **stage_two.solve_times},
    )
