"""
Tests for the planning LPs, the three strategies and the post-solve audit
"""

import json
import shutil
from dataclasses import replace

import numpy as np
import pandas as pd
import pytest

from app.core.config import PlanningModel, ScenarioConfig
from app.core.exceptions import BridgeContingencyError, ConfigurationError, ExitCode, ScenarioFailure, StageOneFlowError
from app.lp import LPBackend, solve
from app.lp.backends import ScipyHighsBackend
from app.network import load_network
from app.planning import (
    ModelRunner,
    annualized_nb_cost,
    build_investment_lp,
    build_nb_placement_lp,
    build_simultaneous_lp,
    diagnose_infeasibility,
    extract_plan,
    resolve_contingencies,
    verify_plan,
    write_plan,
)
from app.planning.verify import corrected_post_outage_flows, nodal_injections, resolved_post_outage_flows
from app.sensitivity import SensitivitySet, dc_flow
from tests.conftest import TRIANGLE_DIR, make_network

REL = 1e-6


@pytest.fixture
def runner(two_zone, two_zone_config):
    return ModelRunner(two_zone, two_zone_config)


@pytest.fixture
def sequential(runner):
    return runner.sequential()


class TestCosts:
    def test_annualized_nb_cost(self):
        # 160 €/kW power plus half an hour of 142 €/kWh storage
        assert annualized_nb_cost(160000.0, 142000.0) == pytest.approx(22966.0, rel=1e-3)

    def test_zero_rate_is_straight_line(self):
        assert annualized_nb_cost(1000.0, 0.0, rate=0.0, lifetime=10.0) == pytest.approx(100.0)

    def test_lifetime_must_be_positive(self):
        with pytest.raises(ConfigurationError):
            annualized_nb_cost(1.0, 1.0, lifetime=0.0)


class TestContingencies:
    def test_default_skips_bridges(self):
        network = make_network(
            ["A", "B", "C", "D"],
            [("AB", "A", "B", 0.1), ("BC", "B", "C", 0.1), ("AC", "A", "C", 0.1), ("CD", "C", "D", 0.1)],
        )
        sens = SensitivitySet.build(network)
        assert resolve_contingencies(network, sens, ScenarioConfig()) == ("AB", "BC", "AC")

    def test_explicit_bridge_rejected(self):
        network = make_network(["A", "B"], [("AB", "A", "B", 0.1)])
        sens = SensitivitySet.build(network)
        with pytest.raises(BridgeContingencyError):
            resolve_contingencies(network, sens, ScenarioConfig(contingencies=["AB"]))

    def test_unknown_line_rejected(self, triangle):
        sens = SensitivitySet.build(triangle)
        with pytest.raises(ConfigurationError, match="'XY'"):
            resolve_contingencies(triangle, sens, ScenarioConfig(contingencies=["XY"]))


class TestBuilders:
    def test_investment_lp_size(self, triangle, triangle_config):
        lp, name_map = build_investment_lp(triangle, triangle_config)
        # G, g for two generators; f, theta for three lines and buses
        assert lp.n_variables == 10
        # cap 2 + balance 3 + kvl 3 + patl 6 + tatl 3 outages x 2 lines x 2 sides
        assert lp.n_constraints == 26
        assert len(lp.constraints_with_prefix("tatl/")) == 12
        assert name_map.contingencies == ("AB", "BC", "AC")

    def test_slack_angle_is_fixed(self, triangle, triangle_config):
        lp, _ = build_investment_lp(triangle, triangle_config)
        slack = lp.variable("theta/A/0")
        assert (slack.lb, slack.ub) == (0.0, 0.0)

    def test_co2_row_only_with_a_cap(self, triangle, triangle_config):
        lp, _ = build_investment_lp(triangle, triangle_config)
        assert not lp.constraints_with_prefix("co2")
        capped, name_map = build_investment_lp(triangle, triangle_config.with_overrides(co2_cap=1000.0))
        assert capped.constraint("co2").rhs == 1000.0
        assert name_map.co2_cap == 1000.0

    def test_tatl_below_one_rejected(self, triangle, triangle_config):
        with pytest.raises(ConfigurationError):
            build_investment_lp(triangle, triangle_config, tatl_factor=0.9)

    def test_nb_placement_lp_size(self, triangle):
        config = ScenarioConfig(contingencies=["AB"])
        lp, _ = build_nb_placement_lp(triangle, np.array([[80.0, -40.0, 40.0]]), config)
        assert lp.n_variables == 12
        # nb_up 3 + nb_down 3 + nb_balance 1 + corrected 2 lines x 2 sides
        assert lp.n_constraints == 11

    def test_simultaneous_lp_size(self, triangle, triangle_config):
        lp, name_map = build_simultaneous_lp(triangle, triangle_config)
        assert lp.n_variables == 10 + 6 + 18
        assert lp.n_constraints == 26 + 18 + 3 + 12
        assert name_map.has_generation and name_map.has_boosters

    def test_fixed_flow_shape_checked(self, triangle):
        with pytest.raises(ConfigurationError, match="shape"):
            build_nb_placement_lp(triangle, np.zeros((2, 3)), ScenarioConfig())


class TestBoosterPlacement:
    """AB trips while 80 MW flow A->B; the rerouted flow overloads BC and AC by 20 MW"""

    config = ScenarioConfig(name="hand", contingencies=["AB"], tatl_factor=1.3)

    def place(self, network, flows):
        lp, name_map = build_nb_placement_lp(network, np.array([flows]), self.config)
        solution = solve(lp)
        return solution, extract_plan(solution, name_map, network, self.config)

    def test_overload_is_relieved_by_a_to_b_shift(self, triangle):
        solution, plan = self.place(triangle, [80.0, -40.0, 40.0])
        a, b = plan.nb_bus_ids.index("A"), plan.nb_bus_ids.index("B")
        assert plan.nb_capacity_down[a] == pytest.approx(20.0, abs=1e-6)
        assert plan.nb_capacity_up[b] == pytest.approx(20.0, abs=1e-6)
        assert plan.total_nb_capacity == pytest.approx(40.0, abs=1e-6)
        # 40 MW at 23000 €/MW/a plus 40 MW dispatched all year at 0.01 €/MWh
        assert solution.objective == pytest.approx(923504.0, rel=REL)
        assert plan.cost_report.nb_capital == pytest.approx(920000.0, rel=REL)
        assert plan.cost_report.nb_operation == pytest.approx(3504.0, rel=REL)

    def test_no_overload_needs_no_boosters(self, triangle):
        _, plan = self.place(triangle, [40.0, -20.0, 20.0])
        assert plan.total_nb_capacity == pytest.approx(0.0, abs=1e-9)

    def test_stage_one_flows_above_tatl_rejected(self, triangle):
        with pytest.raises(StageOneFlowError) as info:
            self.place(triangle, [100.0, -50.0, 50.0])
        assert info.value.exit_code == ExitCode.INPUT_ERROR
        assert info.value.triple[:2] == (0, "AB")
        assert info.value.limit == pytest.approx(130.0)

    def test_boosters_balance_per_outage(self, triangle):
        _, plan = self.place(triangle, [80.0, -40.0, 40.0])
        net = plan.nb_dispatch_up - plan.nb_dispatch_down
        assert np.abs(net.sum(axis=2)).max() <= 1e-8


class TestTriangle:
    """Uncongested: wind at C covers the 80 MW load at B in every strategy"""

    def test_preventive_optimum(self, triangle, triangle_config):
        plan = ModelRunner(triangle, triangle_config).preventive()
        wind = plan.generator_ids.index("wind_C")
        assert plan.generator_capacity[wind] == pytest.approx(160.0, rel=REL)
        assert plan.dispatch[0, wind] == pytest.approx(80.0, rel=REL)
        assert plan.cost_report.total == pytest.approx(19.2e6, rel=REL)
        assert not plan.has_boosters

    @pytest.mark.parametrize("model", list(PlanningModel))
    def test_all_strategies_coincide(self, triangle, triangle_config, model):
        plan = ModelRunner(triangle, triangle_config.with_overrides(tatl_factor=1.3)).run(model)
        assert plan.cost_report.total == pytest.approx(19.2e6, rel=REL)
        if plan.has_boosters:
            assert plan.total_nb_capacity == pytest.approx(0.0, abs=1e-6)


class TestTwoZone:
    def test_preventive_caps_the_corridor(self, runner):
        plan = runner.preventive()
        wind = plan.generator_ids.index("wind_N1")
        assert plan.dispatch[0, wind] == pytest.approx(100.0, rel=REL)
        assert plan.cost_report.total == pytest.approx(49.028e6, rel=REL)

    def test_sequential_places_boosters_at_both_ends(self, sequential):
        merged, stage_one, stage_two = sequential
        wind = merged.generator_ids.index("wind_N1")
        n1, s1 = merged.nb_bus_ids.index("N1"), merged.nb_bus_ids.index("S1")

        assert stage_one.dispatch[0, wind] == pytest.approx(130.0, rel=REL)
        assert merged.nb_capacity_down[n1] == pytest.approx(30.0, rel=REL)
        assert merged.nb_capacity_up[s1] == pytest.approx(30.0, rel=REL)
        assert merged.total_nb_capacity == pytest.approx(60.0, rel=REL)

        report = merged.cost_report
        assert report.generation_total == pytest.approx(45.428e6, rel=REL)
        assert report.nb_capital == pytest.approx(1.38e6, rel=REL)
        assert report.nb_operation == pytest.approx(26280.0, rel=REL)
        assert report.total == pytest.approx(46.83428e6, rel=REL)

    def test_merged_report_keeps_both_stages(self, sequential):
        merged, stage_one, stage_two = sequential
        objectives = merged.cost_report.stage_objectives
        assert set(objectives) == {"investment", "nb_placement"}
        assert merged.solver_objective == pytest.approx(
            stage_one.solver_objective + stage_two.solver_objective
        )
        np.testing.assert_array_equal(merged.line_flow, stage_one.line_flow)

    def test_dominance(self, runner, sequential):
        preventive = runner.preventive().cost_report.total
        simultaneous = runner.simultaneous().cost_report.total
        merged = sequential[0].cost_report.total
        assert simultaneous <= preventive * (1 + REL)
        assert simultaneous <= merged * (1 + REL)
        assert simultaneous == pytest.approx(merged, rel=1e-4)

    @pytest.mark.parametrize("model", [PlanningModel.SEQUENTIAL, PlanningModel.SIMULTANEOUS])
    def test_tatl_of_one_collapses_to_preventive(self, two_zone, two_zone_config, model):
        runner = ModelRunner(two_zone, two_zone_config.with_overrides(tatl_factor=1.0))
        plan = runner.run(model)
        assert plan.total_nb_capacity <= 1e-6
        assert plan.cost_report.total == pytest.approx(runner.preventive().cost_report.total, rel=REL)
        assert plan.cost_report.total == pytest.approx(49.028e6, rel=REL)

    @pytest.mark.parametrize("fixture", ["two_zone", "triangle"])
    def test_stage_one_cost_falls_with_tatl(self, request, two_zone_config, fixture):
        network = request.getfixturevalue(fixture)
        config = two_zone_config if fixture == "two_zone" else ScenarioConfig(name=fixture)
        costs = [
            ModelRunner(network, config.with_overrides(tatl_factor=tatl)).investment().cost_report.total
            for tatl in (1.0, 1.1, 1.2, 1.3, 1.5)
        ]
        assert all(b <= a * (1 + REL) for a, b in zip(costs, costs[1:]))

    def test_tighter_co2_cap_costs_more(self, two_zone, two_zone_config):
        costs = [
            ModelRunner(two_zone, two_zone_config.with_overrides(co2_reduction=r)).preventive().cost_report.total
            for r in (0.3, 0.6, 0.9)
        ]
        assert costs[0] <= costs[1] <= costs[2]

    @pytest.mark.parametrize("reduction, expected_up", [(0.3, 0.0), (0.6, 20.0), (0.9, 30.0)])
    def test_boosters_grow_with_co2_target(self, two_zone, two_zone_config, reduction, expected_up):
        merged, _, _ = ModelRunner(two_zone, two_zone_config.with_overrides(co2_reduction=reduction)).sequential()
        assert merged.total_nb_up == pytest.approx(expected_up, abs=1e-5)

    def test_prohibitive_booster_cost_reproduces_preventive(self, runner, two_zone, two_zone_config):
        expensive = two_zone_config.with_overrides(nb_capital_cost_up=1e9, nb_capital_cost_down=1e9)
        plan = ModelRunner(two_zone, expensive).simultaneous()
        assert plan.total_nb_capacity == pytest.approx(0.0, abs=1e-6)
        assert plan.cost_report.total == pytest.approx(runner.preventive().cost_report.total, rel=REL)

    def test_doubling_every_cost_doubles_the_objective(self, runner, two_zone, two_zone_config):
        doubled_network = replace(
            two_zone,
            generators=tuple(
                g.model_copy(update={"capital_cost": 2 * g.capital_cost, "marginal_cost": 2 * g.marginal_cost})
                for g in two_zone.generators
            ),
        )
        doubled_config = two_zone_config.with_overrides(
            nb_capital_cost_up=2 * two_zone_config.nb_capital_cost_up,
            nb_capital_cost_down=2 * two_zone_config.nb_capital_cost_down,
            nb_dispatch_cost_up=2 * two_zone_config.nb_dispatch_cost_up,
            nb_dispatch_cost_down=2 * two_zone_config.nb_dispatch_cost_down,
        )
        base = runner.simultaneous()
        doubled = ModelRunner(doubled_network, doubled_config).simultaneous()
        assert doubled.cost_report.total == pytest.approx(2 * base.cost_report.total, rel=REL)
        assert doubled.total_nb_capacity == pytest.approx(base.total_nb_capacity, abs=1e-5)

    def test_no_simultaneous_charge_and_discharge(self, runner, sequential):
        assert sequential[0].simultaneous_charge_discharge() <= 1e-6
        assert runner.simultaneous().simultaneous_charge_discharge() <= 1e-6

    def test_mixed_booster_buses(self, sequential):
        merged = sequential[0]
        assert merged.mixed_nb_buses() == []
        both = replace(merged, nb_capacity_up=merged.nb_capacity_down + 1.0)
        assert "N1" in both.mixed_nb_buses()


class TestInfeasibility:
    def test_zero_co2_cap_without_clean_generation(self, gas_only):
        config = ScenarioConfig(name="gas_only", model=PlanningModel.PREVENTIVE, co2_cap=0.0)
        with pytest.raises(ScenarioFailure, match="'co2'") as info:
            ModelRunner(gas_only, config).preventive()
        assert info.value.exit_code == ExitCode.INFEASIBLE

    def test_diagnosis_names_co2_family(self, gas_only):
        config = ScenarioConfig(co2_cap=0.0)
        lp, _ = build_investment_lp(gas_only, config, tatl_factor=1.0)
        assert diagnose_infeasibility(lp) == "co2"

    def test_diagnosis_without_responsible_family(self, triangle, triangle_config):
        lp, _ = build_investment_lp(triangle, triangle_config)
        lp.add_constraint("impossible", {"G/gas_A": 1.0}, ">=", 2000.0)
        assert diagnose_infeasibility(lp) is None


class TestVerification:
    @pytest.mark.parametrize("model", list(PlanningModel))
    def test_solved_plans_pass(self, runner, two_zone, two_zone_config, model):
        report = verify_plan(runner.run(model), two_zone, two_zone_config)
        assert report.passed, report.describe_failures()
        names = {check.name for check in report.checks}
        assert {"nodal_balance", "dc_flow_angles", "dc_flow_ptdf", "patl_base",
                "tatl_post_outage", "corrected_vs_resolved", "bounds", "co2"} <= names

    def test_booster_checks_only_with_boosters(self, runner, two_zone, two_zone_config, sequential):
        preventive = verify_plan(runner.preventive(), two_zone, two_zone_config)
        names = {check.name for check in preventive.checks}
        assert "patl_corrected" not in names
        merged = verify_plan(sequential[0], two_zone, two_zone_config)
        assert merged.check("patl_corrected").passed
        assert merged.check("nb_balance").passed

    def test_wrong_outage_factors_are_caught(self, sequential, two_zone, two_zone_config):
        sens = SensitivitySet.build(two_zone, two_zone_config.slack_bus)
        skewed = replace(sens, lodf=sens.lodf * 1.1)
        report = verify_plan(sequential[0], two_zone, two_zone_config, sens=skewed)
        check = report.check("corrected_vs_resolved")
        assert not check.passed
        assert check.location.startswith("(t=0, outage=")

    def test_corrupted_flow_is_located(self, sequential, two_zone, two_zone_config):
        merged = sequential[0]
        flows = merged.line_flow.copy()
        flows[0, two_zone.line_index["N1-N2"]] = 150.0
        report = verify_plan(replace(merged, line_flow=flows), two_zone, two_zone_config)
        assert not report.passed
        check = report.check("patl_base")
        assert not check.passed
        assert check.max_violation == pytest.approx(50.0)
        assert check.location == "(line=N1-N2, t=0)"

    def test_corrected_flows_match_outaged_network(self, sequential, two_zone, two_zone_config):
        merged = sequential[0]
        sens = SensitivitySet.build(two_zone, two_zone_config.slack_bus)
        injections = nodal_injections(merged, two_zone)
        exact = np.vstack([dc_flow(two_zone, injections[t]) for t in range(two_zone.n_snapshots)])
        plan = replace(merged, line_flow=exact)
        for outage in plan.contingencies:
            for t in range(two_zone.n_snapshots):
                corrected = corrected_post_outage_flows(plan, two_zone, sens, t, outage)
                resolved = resolved_post_outage_flows(plan, two_zone, t, outage)
                assert np.max(np.abs(corrected - resolved)) <= 1e-8, outage
                assert np.abs(resolved).max() <= 100.0 + 1e-5


class TestWritePlan:
    def test_files(self, sequential, two_zone, two_zone_config, tmp_path):
        merged = sequential[0]
        report = verify_plan(merged, two_zone, two_zone_config)
        out = write_plan(merged, tmp_path / "two_zone", two_zone.snapshot_labels, report)

        capacities = pd.read_csv(out / "capacities.csv")
        assert list(capacities.columns) == ["generator", "capacity_mw"]
        assert list(capacities["generator"]) == list(two_zone.generator_ids)

        boosters = pd.read_csv(out / "nb_capacities.csv").set_index("bus")
        assert boosters.loc["N1", "p_minus_mw"] == pytest.approx(30.0, abs=1e-5)

        flows = pd.read_csv(out / "flows.csv")
        assert list(flows.columns) == ["line", "snapshot", "flow_mw"]
        assert len(flows) == two_zone.n_lines * two_zone.n_snapshots

        dispatch = pd.read_csv(out / "nb_dispatch.csv")
        assert len(dispatch) == two_zone.n_buses * len(merged.contingencies)

        costs = json.loads((out / "costs.json").read_text())
        assert costs["model"] == "sequential"
        assert costs["total"] == pytest.approx(merged.cost_report.total)
        assert set(costs["stage_objectives"]) == {"investment", "nb_placement"}
        assert costs["warnings"] == {"mixed_nb_buses": []}

        verification = json.loads((out / "verification.json").read_text())
        assert all(check["passed"] for check in verification["checks"])

    def test_mixed_booster_buses_are_reported(self, sequential, tmp_path):
        merged = sequential[0]
        both = replace(merged, nb_capacity_up=merged.nb_capacity_down + 1.0)
        out = write_plan(both, tmp_path / "mixed")
        costs = json.loads((out / "costs.json").read_text())
        assert "N1" in costs["warnings"]["mixed_nb_buses"]

    def test_plan_without_boosters(self, triangle, triangle_config, tmp_path):
        plan = ModelRunner(triangle, triangle_config).preventive()
        out = write_plan(plan, tmp_path / "triangle")
        assert pd.read_csv(out / "nb_capacities.csv").empty
        assert pd.read_csv(out / "nb_dispatch.csv").empty


@pytest.fixture
def three_hour_triangle(tmp_path):
    """Triangle with three weighted hours; no line can carry more than the 100 MW load"""
    directory = tmp_path / "triangle_3h"
    shutil.copytree(TRIANGLE_DIR, directory)
    (directory / "loads.csv").write_text("snapshot,B\nh0,80\nh1,100\nh2,40\n")
    (directory / "availability.csv").write_text("snapshot,wind_C\nh0,0.5\nh1,0.8\nh2,0.1\n")
    (directory / "snapshots.csv").write_text("snapshot,weight_hours\nh0,4000\nh1,2760\nh2,2000\n")
    return load_network(directory)


class TestWeightedSnapshots:
    """
    Wind pays for itself until it covers h0 (160 MW); gas then only serves
    h2 with 40 - 0.1 * 160 = 24 MW for 2000 h at 60 €/MWh.
    """

    @pytest.mark.parametrize("model", list(PlanningModel))
    def test_every_strategy_finds_the_weighted_optimum(self, three_hour_triangle, model):
        config = ScenarioConfig(name="triangle_3h", tatl_factor=1.3)
        plan = ModelRunner(three_hour_triangle, config).run(model)
        wind, gas = plan.generator_ids.index("wind_C"), plan.generator_ids.index("gas_A")

        assert plan.generator_capacity[wind] == pytest.approx(160.0, rel=REL)
        assert plan.generator_capacity[gas] == pytest.approx(24.0, rel=REL)
        np.testing.assert_allclose(plan.dispatch[:, gas], [0.0, 0.0, 24.0], atol=1e-6)
        assert plan.cost_report.capital_generation == pytest.approx(20.4e6, rel=REL)
        assert plan.cost_report.operation_generation == pytest.approx(2.88e6, rel=REL)
        assert plan.cost_report.total == pytest.approx(23.28e6, rel=REL)
        assert plan.total_nb_capacity <= 1e-6

        report = verify_plan(plan, three_hour_triangle, config)
        assert report.passed, report.describe_failures()

    def test_flows_are_indexed_by_hour(self, three_hour_triangle):
        plan = ModelRunner(three_hour_triangle, ScenarioConfig(name="triangle_3h")).simultaneous()
        assert plan.line_flow.shape == (3, 3)
        assert plan.nb_dispatch_up.shape[0] == 3
        injections = nodal_injections(plan, three_hour_triangle)
        for t in range(3):
            np.testing.assert_allclose(plan.line_flow[t], dc_flow(three_hour_triangle, injections[t]), atol=1e-6)


class ShiftedFlowBackend(LPBackend):
    """HiGHS answer with one flow moved off its solved value"""

    name = "shifted"

    def solve(self, lp, tolerances, with_duals=False):
        solution = ScipyHighsBackend().solve(lp, tolerances, with_duals)
        primal = dict(solution.primal)
        primal["f/AB/0"] += 50.0
        return replace(solution, primal=primal)


def test_unaudited_solution_is_a_solver_error(triangle, triangle_config):
    with pytest.raises(ScenarioFailure, match="violates") as info:
        ModelRunner(triangle, triangle_config, backend=ShiftedFlowBackend()).preventive()
    assert info.value.exit_code == ExitCode.SOLVER_ERROR
