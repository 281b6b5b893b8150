"""
LP builders for generation investment, booster placement and their co-optimization.

All three problems share two blocks:

- the generation block: capacities G, dispatch g, flows f and angles theta
  with nodal balance, angle-based DC flow, availability limits, PATL limits,
  the weighted CO2 cap and the uncorrected post-outage TATL limits;
- the booster block: booster capacities P+/P- and post-outage dispatch p+/p-
  with the booster balance and the corrected post-outage PATL limits.

Stage two of the sequential model uses only the booster block, with the
stage-one flows entering as constants.
"""

import logging
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from app.core.config import PlanningModel, ScenarioConfig, get_settings
from app.core.exceptions import BridgeContingencyError, ConfigurationError, StageOneFlowError
from app.lp.program import INF, LinearProgram, Sense
from app.network.schemas import Network
from app.sensitivity.factors import SensitivitySet
from app.planning.schemas import (
    DOWN,
    UP,
    NameMap,
    angle,
    flow,
    gen_capacity,
    gen_dispatch,
    nb_capacity,
    nb_dispatch,
)

logger = logging.getLogger(__name__)

COEFFICIENT_EPS = 1e-12
STAGE_INVESTMENT = "investment"
STAGE_NB_PLACEMENT = "nb_placement"
STAGE_SIMULTANEOUS = "simultaneous"


def annualized_nb_cost(power_cost: float, energy_cost: float, hours: float = 0.5,
                       rate: float = 0.07, lifetime: float = 18.0) -> float:
    """
    Annualized booster capacity cost in €/MW/a.

    Args:
        power_cost: Overnight power capacity cost in €/MW
        energy_cost: Overnight energy capacity cost in €/MWh
        hours: Energy sized as this many hours at full power
        rate: Discount rate
        lifetime: Asset lifetime in years

    Returns:
        annuity(rate, lifetime) * (power_cost + hours * energy_cost)
    """
    if lifetime <= 0:
        raise ConfigurationError("lifetime must be positive")
    annuity = 1.0 / lifetime if rate == 0 else rate / (1.0 - (1.0 + rate) ** -lifetime)
    return annuity * (power_cost + hours * energy_cost)


def resolve_contingencies(network: Network, sens: SensitivitySet, config: ScenarioConfig) -> Tuple[str, ...]:
    """
    Outaged lines considered by the security constraints.

    Defaults to every non-bridge line. An explicitly listed bridge is an error.
    """
    if config.contingencies is None:
        skipped = [line_id for line_id in network.line_ids if line_id in sens.bridges]
        if skipped:
            logger.warning(f"⚠️ Skipping bridge contingencies {skipped}")
        return tuple(line_id for line_id in network.line_ids if line_id not in sens.bridges)

    for line_id in config.contingencies:
        if line_id not in network.line_index:
            raise ConfigurationError(f"contingency '{line_id}' is not a line of the network")
        if line_id in sens.bridges:
            raise BridgeContingencyError(line_id)
    return tuple(dict.fromkeys(config.contingencies))


def _sensitivities(network: Network, config: ScenarioConfig, sens: Optional[SensitivitySet]) -> SensitivitySet:
    return sens if sens is not None else SensitivitySet.build(network, config.slack_bus)


def _add_generation_block(lp: LinearProgram, network: Network, sens: SensitivitySet,
                          config: ScenarioConfig) -> Optional[float]:
    base_mva = get_settings().base_mva
    weights = network.weights
    availability = network.availability
    demand = network.demand
    T = network.n_snapshots

    for gen in network.generators:
        lb = 0.0 if gen.extendable else gen.max_capacity
        lp.add_variable(gen_capacity(gen.id), lb=lb, ub=gen.max_capacity, obj=gen.capital_cost)
        for t in range(T):
            lp.add_variable(gen_dispatch(gen.id, t), obj=weights[t] * gen.marginal_cost)

    for line in network.lines:
        for t in range(T):
            lp.add_variable(flow(line.id, t), lb=-INF, ub=INF)

    for bus_id in network.bus_ids:
        for t in range(T):
            if bus_id == sens.slack_bus:
                lp.add_variable(angle(bus_id, t), lb=0.0, ub=0.0)
            else:
                lp.add_variable(angle(bus_id, t), lb=-INF, ub=INF)

    for s, gen in enumerate(network.generators):
        for t in range(T):
            lp.add_constraint(
                f"cap/{gen.id}/{t}",
                [(gen_dispatch(gen.id, t), 1.0), (gen_capacity(gen.id), -availability[t, s])],
                Sense.LE,
                0.0,
            )

    # nodal balance: generation - outgoing + incoming = demand
    for t in range(T):
        terms: Dict[str, list] = {bus_id: [] for bus_id in network.bus_ids}
        for gen in network.generators:
            terms[gen.bus].append((gen_dispatch(gen.id, t), 1.0))
        for line in network.lines:
            terms[line.from_bus].append((flow(line.id, t), -1.0))
            terms[line.to_bus].append((flow(line.id, t), 1.0))
        for i, bus_id in enumerate(network.bus_ids):
            lp.add_constraint(f"balance/{bus_id}/{t}", terms[bus_id], Sense.EQ, demand[t, i])

    for l, line in enumerate(network.lines):
        coupling = base_mva * network.susceptance[l]
        for t in range(T):
            lp.add_constraint(
                f"kvl/{line.id}/{t}",
                [
                    (flow(line.id, t), 1.0),
                    (angle(line.from_bus, t), -coupling),
                    (angle(line.to_bus, t), coupling),
                ],
                Sense.EQ,
                0.0,
            )
            lp.add_range(f"patl/{line.id}/{t}", [(flow(line.id, t), 1.0)], -line.patl, line.patl)

    co2_cap = config.resolved_co2_cap()
    if co2_cap is not None:
        lp.add_constraint(
            "co2",
            [
                (gen_dispatch(gen.id, t), weights[t] * gen.emission_intensity)
                for gen in network.generators
                for t in range(T)
                if gen.emission_intensity > 0
            ],
            Sense.LE,
            co2_cap,
        )
    return co2_cap


def _add_tatl_rows(lp: LinearProgram, network: Network, sens: SensitivitySet,
                   contingencies: Sequence[str], tatl_factor: float) -> None:
    for t in range(network.n_snapshots):
        for outage in contingencies:
            k = network.line_index[outage]
            for l, line in enumerate(network.lines):
                if l == k:
                    continue
                limit = tatl_factor * line.patl
                terms = [(flow(line.id, t), 1.0)]
                if abs(sens.lodf[l, k]) > COEFFICIENT_EPS:
                    terms.append((flow(outage, t), sens.lodf[l, k]))
                lp.add_range(f"tatl/{t}/{outage}/{line.id}", terms, -limit, limit)


def _add_booster_block(lp: LinearProgram, network: Network, sens: SensitivitySet,
                       config: ScenarioConfig, contingencies: Sequence[str],
                       fixed_flows: Optional[np.ndarray] = None) -> None:
    weights = network.weights
    T = network.n_snapshots

    for bus_id in network.bus_ids:
        lp.add_variable(nb_capacity(UP, bus_id), obj=config.nb_capital_cost_up)
        lp.add_variable(nb_capacity(DOWN, bus_id), obj=config.nb_capital_cost_down)

    for t in range(T):
        for outage in contingencies:
            for bus_id in network.bus_ids:
                up = lp.add_variable(nb_dispatch(UP, bus_id, t, outage), obj=weights[t] * config.nb_dispatch_cost_up)
                down = lp.add_variable(
                    nb_dispatch(DOWN, bus_id, t, outage), obj=weights[t] * config.nb_dispatch_cost_down
                )
                lp.add_constraint(f"nb_up/{bus_id}/{t}/{outage}",
                                  [(up, 1.0), (nb_capacity(UP, bus_id), -1.0)], Sense.LE, 0.0)
                lp.add_constraint(f"nb_down/{bus_id}/{t}/{outage}",
                                  [(down, 1.0), (nb_capacity(DOWN, bus_id), -1.0)], Sense.LE, 0.0)

            lp.add_constraint(
                f"nb_balance/{t}/{outage}",
                [(nb_dispatch(UP, bus_id, t, outage), 1.0) for bus_id in network.bus_ids]
                + [(nb_dispatch(DOWN, bus_id, t, outage), -1.0) for bus_id in network.bus_ids],
                Sense.EQ,
                0.0,
            )

    for outage in contingencies:
        k = network.line_index[outage]
        coefficients = sens.corrected_flow_coefficients(k)
        for t in range(T):
            for l, line in enumerate(network.lines):
                if l == k:
                    continue
                terms = []
                for i, bus_id in enumerate(network.bus_ids):
                    c = coefficients[l, i]
                    if abs(c) > COEFFICIENT_EPS:
                        terms.append((nb_dispatch(UP, bus_id, t, outage), c))
                        terms.append((nb_dispatch(DOWN, bus_id, t, outage), -c))
                if fixed_flows is None:
                    terms.append((flow(line.id, t), 1.0))
                    if abs(sens.lodf[l, k]) > COEFFICIENT_EPS:
                        terms.append((flow(outage, t), sens.lodf[l, k]))
                    offset = 0.0
                else:
                    offset = fixed_flows[t, l] + sens.lodf[l, k] * fixed_flows[t, k]
                lp.add_range(f"corrected/{t}/{outage}/{line.id}", terms, -line.patl - offset, line.patl - offset)


def build_investment_lp(network: Network, config: ScenarioConfig, sens: Optional[SensitivitySet] = None,
                        tatl_factor: Optional[float] = None, model: Optional[PlanningModel] = None
                        ) -> Tuple[LinearProgram, NameMap]:
    """
    Generation investment LP with post-outage TATL limits.

    Args:
        network: Validated network
        config: Scenario configuration
        sens: Precomputed sensitivities (built on demand)
        tatl_factor: Overrides config.tatl_factor; 1.0 gives the preventive problem
        model: Model label of the result (preventive when tatl_factor is 1)

    Returns:
        (program, name map)
    """
    sens = _sensitivities(network, config, sens)
    tatl = config.tatl_factor if tatl_factor is None else tatl_factor
    if tatl < 1.0:
        raise ConfigurationError(f"tatl_factor must be >= 1, got {tatl}")
    contingencies = resolve_contingencies(network, sens, config)
    if model is None:
        model = PlanningModel.PREVENTIVE if tatl == 1.0 else PlanningModel.SEQUENTIAL

    lp = LinearProgram(f"{config.name}-{STAGE_INVESTMENT}")
    co2_cap = _add_generation_block(lp, network, sens, config)
    _add_tatl_rows(lp, network, sens, contingencies, tatl)

    logger.info(f"🏗️ Built {lp!r} (tatl={tatl:g}, {len(contingencies)} contingencies)")
    return lp, NameMap(
        model=model,
        stage=STAGE_INVESTMENT,
        generator_ids=network.generator_ids,
        line_ids=network.line_ids,
        bus_ids=network.bus_ids,
        n_snapshots=network.n_snapshots,
        contingencies=contingencies,
        tatl_factor=tatl,
        co2_cap=co2_cap,
        has_generation=True,
        has_boosters=False,
    )


def check_stage_one_flows(network: Network, sens: SensitivitySet, fixed_flows: np.ndarray,
                          contingencies: Sequence[str], tatl_factor: float,
                          tol: Optional[float] = None) -> None:
    """
    Reject fixed flows whose uncorrected post-outage flows exceed the TATL.

    Raises:
        StageOneFlowError: with the first violating (snapshot, outage, line)
    """
    tol = get_settings().verify_tol if tol is None else tol
    limits = tatl_factor * network.patl
    for outage in contingencies:
        k = network.line_index[outage]
        # (T x L): f_l + LODF_lk f_k
        post = fixed_flows + fixed_flows[:, [k]] * sens.lodf[:, k][np.newaxis, :]
        excess = np.abs(post) - limits[np.newaxis, :]
        excess[:, k] = -INF
        t, l = np.unravel_index(int(np.argmax(excess)), excess.shape)
        if excess[t, l] > tol * max(1.0, limits[l]):
            raise StageOneFlowError(int(t), outage, network.line_ids[l], float(post[t, l]), float(limits[l]))


def build_nb_placement_lp(network: Network, fixed_flows: np.ndarray, config: ScenarioConfig,
                          sens: Optional[SensitivitySet] = None) -> Tuple[LinearProgram, NameMap]:
    """
    Booster placement LP against fixed stage-one flows.

    Args:
        network: Validated network
        fixed_flows: Stage-one flows as (snapshots x lines) in MW
        config: Scenario configuration; its tatl_factor is checked against the flows

    Raises:
        StageOneFlowError: the flows violate the uncorrected TATL limit
    """
    sens = _sensitivities(network, config, sens)
    fixed_flows = np.asarray(fixed_flows, dtype=float)
    if fixed_flows.shape != (network.n_snapshots, network.n_lines):
        raise ConfigurationError(
            f"fixed flows must have shape {(network.n_snapshots, network.n_lines)}, got {fixed_flows.shape}"
        )
    contingencies = resolve_contingencies(network, sens, config)
    check_stage_one_flows(network, sens, fixed_flows, contingencies, config.tatl_factor)

    lp = LinearProgram(f"{config.name}-{STAGE_NB_PLACEMENT}")
    _add_booster_block(lp, network, sens, config, contingencies, fixed_flows=fixed_flows)

    logger.info(f"🏗️ Built {lp!r} ({len(contingencies)} contingencies)")
    return lp, NameMap(
        model=PlanningModel.SEQUENTIAL,
        stage=STAGE_NB_PLACEMENT,
        generator_ids=network.generator_ids,
        line_ids=network.line_ids,
        bus_ids=network.bus_ids,
        n_snapshots=network.n_snapshots,
        contingencies=contingencies,
        tatl_factor=config.tatl_factor,
        co2_cap=config.resolved_co2_cap(),
        has_generation=False,
        has_boosters=True,
        fixed_flows=fixed_flows,
    )


def build_simultaneous_lp(network: Network, config: ScenarioConfig,
                          sens: Optional[SensitivitySet] = None) -> Tuple[LinearProgram, NameMap]:
    """Co-optimized generation and booster investment in one LP"""
    sens = _sensitivities(network, config, sens)
    contingencies = resolve_contingencies(network, sens, config)

    lp = LinearProgram(f"{config.name}-{STAGE_SIMULTANEOUS}")
    co2_cap = _add_generation_block(lp, network, sens, config)
    _add_tatl_rows(lp, network, sens, contingencies, config.tatl_factor)
    _add_booster_block(lp, network, sens, config, contingencies)

    logger.info(f"🏗️ Built {lp!r} (tatl={config.tatl_factor:g}, {len(contingencies)} contingencies)")
    return lp, NameMap(
        model=PlanningModel.SIMULTANEOUS,
        stage=STAGE_SIMULTANEOUS,
        generator_ids=network.generator_ids,
        line_ids=network.line_ids,
        bus_ids=network.bus_ids,
        n_snapshots=network.n_snapshots,
        contingencies=contingencies,
        tatl_factor=config.tatl_factor,
        co2_cap=co2_cap,
        has_generation=True,
        has_boosters=True,
    )
