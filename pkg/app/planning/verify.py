"""
Independent audit of a solved plan.

Every constraint family is re-evaluated from the plan arrays and the network
data, without looking at the LP that produced the plan. Each check reports its
largest violation and where it occurs.
"""

import logging
from dataclasses import replace
from typing import List, Optional, Tuple

import numpy as np

from app.core.config import ScenarioConfig, get_settings
from app.network.schemas import Network
from app.network.topology import generator_incidence, incidence_matrix
from app.planning.schemas import PlanResult, VerificationCheck, VerificationReport
from app.sensitivity.factors import SensitivitySet
from app.sensitivity.flows import dc_flow

logger = logging.getLogger(__name__)


def nodal_injections(plan: PlanResult, network: Network) -> np.ndarray:
    """Net injections (snapshots x buses): generation minus demand"""
    Kg = generator_incidence(network)
    return plan.dispatch @ Kg.T - network.demand


def booster_injections(plan: PlanResult, network: Network, t: int, k: int) -> np.ndarray:
    """Net booster injection per bus for snapshot t and contingency position k"""
    injection = np.zeros(network.n_buses)
    if plan.has_boosters:
        for i, bus_id in enumerate(plan.nb_bus_ids):
            injection[network.bus_index[bus_id]] = (
                plan.nb_dispatch_up[t, k, i] - plan.nb_dispatch_down[t, k, i]
            )
    return injection


def corrected_post_outage_flows(plan: PlanResult, network: Network, sens: SensitivitySet,
                                t: int, outage: str) -> np.ndarray:
    """
    Post-outage flows of all lines after booster action, from sensitivities.

    The entry of the outaged line itself is zero.
    """
    k = network.line_index[outage]
    base = plan.line_flow[t]
    post = base + sens.lodf[:, k] * base[k]
    post[k] = 0.0
    if plan.has_boosters:
        position = plan.contingencies.index(outage)
        post = post + sens.corrected_flow_coefficients(k) @ booster_injections(plan, network, t, position)
    return post


def resolved_post_outage_flows(plan: PlanResult, network: Network, t: int, outage: str,
                               slack: Optional[str] = None) -> np.ndarray:
    """
    The same flows recomputed by solving the outaged network directly.

    Injections are the plan's generation minus demand plus the booster
    injections for this outage; any residual imbalance is taken by the slack,
    as in the PTDF. The outaged line's entry is zero.
    """
    injections = nodal_injections(plan, network)[t]
    if plan.has_boosters:
        injections = injections + booster_injections(plan, network, t, plan.contingencies.index(outage))
    injections = injections.copy()
    injections[network.bus_index[slack] if slack else 0] -= injections.sum()
    outaged = network.drop_line(outage)
    survivors = dc_flow(outaged, injections, slack=slack)
    flows = np.zeros(network.n_lines)
    for position, line in enumerate(outaged.lines):
        flows[network.line_index[line.id]] = survivors[position]
    return flows


def _worst(values: np.ndarray, describe) -> Tuple[float, Optional[str]]:
    if values.size == 0:
        return 0.0, None
    index = np.unravel_index(int(np.argmax(values)), values.shape)
    worst = float(values[index])
    if worst <= 0.0:
        return 0.0, None
    return worst, describe(*index)


def verify_plan(plan: PlanResult, network: Network, config: ScenarioConfig,
                sens: Optional[SensitivitySet] = None, tol: Optional[float] = None) -> VerificationReport:
    """
    Audit a plan against every modeled constraint.

    Returns:
        VerificationReport; a check fails when its violation exceeds tol
    """
    settings = get_settings()
    tol = settings.verify_tol if tol is None else tol
    sens = sens if sens is not None else SensitivitySet.build(network, config.slack_bus)
    K = incidence_matrix(network)
    lines, buses, gens = network.line_ids, network.bus_ids, network.generator_ids
    T = network.n_snapshots
    checks: List[VerificationCheck] = []

    def add(name: str, violation: float, location: Optional[str]) -> None:
        checks.append(VerificationCheck(
            name=name, max_violation=violation, location=location, passed=violation <= tol,
        ))

    injections = nodal_injections(plan, network)
    flows = plan.line_flow

    # generation - outgoing + incoming - demand
    residual = np.abs(injections - flows @ K.T)
    add("nodal_balance", *_worst(residual, lambda t, i: f"(bus={buses[i]}, t={t})"))

    angle_flows = settings.base_mva * network.susceptance[np.newaxis, :] * (plan.angles @ K)
    add("dc_flow_angles", *_worst(np.abs(flows - angle_flows), lambda t, l: f"(line={lines[l]}, t={t})"))

    ptdf_flows = injections @ sens.ptdf.T
    add("dc_flow_ptdf", *_worst(np.abs(flows - ptdf_flows), lambda t, l: f"(line={lines[l]}, t={t})"))

    patl = network.patl[np.newaxis, :]
    add("patl_base", *_worst(np.abs(flows) - patl, lambda t, l: f"(line={lines[l]}, t={t})"))

    tatl_excess = np.full((T, len(plan.contingencies), network.n_lines), -np.inf)
    corrected_excess = np.full_like(tatl_excess, -np.inf)
    nb_balance = np.zeros((T, len(plan.contingencies)))
    for position, outage in enumerate(plan.contingencies):
        k = network.line_index[outage]
        uncorrected = flows + flows[:, [k]] * sens.lodf[:, k][np.newaxis, :]
        excess = np.abs(uncorrected) - plan.tatl_factor * patl
        excess[:, k] = -np.inf
        tatl_excess[:, position, :] = excess
        if plan.has_boosters:
            for t in range(T):
                corrected = corrected_post_outage_flows(plan, network, sens, t, outage)
                over = np.abs(corrected) - network.patl
                over[k] = -np.inf
                corrected_excess[t, position, :] = over
                nb_balance[t, position] = abs(booster_injections(plan, network, t, position).sum())

    def post_outage_location(t, k, l):
        return f"(t={t}, outage={plan.contingencies[k]}, line={lines[l]})"

    add("tatl_post_outage", *_worst(tatl_excess, post_outage_location))
    if plan.has_boosters:
        add("patl_corrected", *_worst(corrected_excess, post_outage_location))
        add("nb_balance", *_worst(nb_balance, lambda t, k: f"(t={t}, outage={plan.contingencies[k]})"))

    add("corrected_vs_resolved", *_resolution_gap(plan, network, sens, ptdf_flows))
    add("bounds", *_bound_violation(plan, network))

    if plan.co2_cap is not None:
        intensity = np.array([gen.emission_intensity for gen in network.generators])
        emissions = float(network.weights @ (plan.dispatch @ intensity)) if len(gens) else 0.0
        violation = max(0.0, emissions - plan.co2_cap)
        add("co2", violation, "co2" if violation > 0 else None)

    report = VerificationReport(scenario=plan.scenario, model=plan.model, tolerance=tol, checks=checks)
    if report.passed:
        logger.info(f"✅ [{plan.scenario}] {plan.model.value} plan passed {len(checks)} checks")
    else:
        logger.warning(f"⚠️ [{plan.scenario}] verification failed: {report.describe_failures()}")
    return report


def _resolution_gap(plan: PlanResult, network: Network, sens: SensitivitySet,
                    ptdf_flows: np.ndarray) -> Tuple[float, Optional[str]]:
    """
    Largest gap between sensitivity-based post-outage flows and a direct
    solve of each outaged network.

    Base flows are taken from the PTDF so that only the outage and booster
    terms are compared; the LP flows are audited by dc_flow_ptdf.
    """
    exact = replace(plan, line_flow=ptdf_flows)
    gap = np.zeros((network.n_snapshots, len(plan.contingencies), network.n_lines))
    for position, outage in enumerate(plan.contingencies):
        for t in range(network.n_snapshots):
            corrected = corrected_post_outage_flows(exact, network, sens, t, outage)
            resolved = resolved_post_outage_flows(exact, network, t, outage, slack=sens.slack_bus)
            gap[t, position, :] = np.abs(corrected - resolved)
    lines = network.line_ids
    return _worst(gap, lambda t, k, l: f"(t={t}, outage={plan.contingencies[k]}, line={lines[l]})")


def _bound_violation(plan: PlanResult, network: Network) -> Tuple[float, Optional[str]]:
    candidates: List[Tuple[float, Optional[str]]] = []
    gens = network.generator_ids

    lower = np.array([0.0 if g.extendable else g.max_capacity for g in network.generators])
    upper = np.array([g.max_capacity for g in network.generators])
    capacity = plan.generator_capacity
    candidates.append(_worst(np.maximum(lower - capacity, capacity - upper), lambda s: f"G/{gens[s]}"))
    candidates.append(_worst(-plan.dispatch, lambda t, s: f"g/{gens[s]}/{t}"))
    available = network.availability * capacity[np.newaxis, :]
    candidates.append(_worst(plan.dispatch - available, lambda t, s: f"cap/{gens[s]}/{t}"))

    if plan.has_boosters:
        nb_buses, outages = plan.nb_bus_ids, plan.contingencies
        candidates.append(_worst(-plan.nb_capacity_up, lambda i: f"P_plus/{nb_buses[i]}"))
        candidates.append(_worst(-plan.nb_capacity_down, lambda i: f"P_minus/{nb_buses[i]}"))
        for label, dispatch, capacity_nb in (
            ("plus", plan.nb_dispatch_up, plan.nb_capacity_up),
            ("minus", plan.nb_dispatch_down, plan.nb_capacity_down),
        ):
            candidates.append(_worst(-dispatch, lambda t, k, i, label=label: f"p_{label}/{nb_buses[i]}/{t}/{outages[k]}"))
            excess = dispatch - capacity_nb[np.newaxis, np.newaxis, :]
            candidates.append(_worst(excess, lambda t, k, i, label=label: f"nb_{label}/{nb_buses[i]}/{t}/{outages[k]}"))

    return max(candidates, key=lambda item: item[0], default=(0.0, None))
