"""
Tests for the LP model, the HiGHS backends and LP text export
"""

import pytest

from app.core.exceptions import LPModelError
from app.lp import (
    INF,
    LinearProgram,
    LPBackend,
    Sense,
    Solution,
    SolveStatus,
    backend_factory,
    read_lp,
    read_lp_file,
    solve,
    write_lp,
    write_lp_file,
)


def small_lp() -> LinearProgram:
    """min x + 2y  s.t.  x + y >= 4, x <= 3, y free above 0"""
    lp = LinearProgram("small")
    lp.add_variable("x", obj=1.0)
    lp.add_variable("y", obj=2.0)
    lp.add_constraint("demand", {"x": 1.0, "y": 1.0}, Sense.GE, 4.0)
    lp.add_constraint("cap/x", {"x": 1.0}, Sense.LE, 3.0)
    return lp


class TestLinearProgram:
    def test_minimum_of_single_variable(self):
        lp = LinearProgram()
        lp.add_variable("x", obj=1.0)
        lp.add_constraint("floor", {"x": 1.0}, ">=", 3.0)
        solution = solve(lp)
        assert solution.status == SolveStatus.OPTIMAL
        assert solution.value("x") == pytest.approx(3.0)
        assert solution.objective == pytest.approx(3.0)

    def test_small_lp_optimum(self):
        solution = solve(small_lp())
        assert solution.value("x") == pytest.approx(3.0)
        assert solution.value("y") == pytest.approx(1.0)
        assert solution.objective == pytest.approx(5.0)

    def test_infeasible(self):
        lp = LinearProgram()
        lp.add_variable("x", ub=1.0)
        lp.add_constraint("floor", {"x": 1.0}, Sense.GE, 2.0)
        solution = solve(lp)
        assert solution.status == SolveStatus.INFEASIBLE
        assert solution.primal == {}

    def test_unbounded(self):
        lp = LinearProgram()
        lp.add_variable("x", lb=-INF, obj=1.0)
        lp.add_constraint("ceiling", {"x": 1.0}, Sense.LE, 10.0)
        assert solve(lp).status == SolveStatus.UNBOUNDED

    def test_duplicate_variable(self):
        lp = LinearProgram()
        lp.add_variable("x")
        with pytest.raises(LPModelError, match="duplicate variable"):
            lp.add_variable("x")

    def test_duplicate_constraint(self):
        lp = small_lp()
        with pytest.raises(LPModelError, match="duplicate constraint"):
            lp.add_constraint("demand", {"x": 1.0}, Sense.LE, 1.0)

    def test_inverted_bounds(self):
        with pytest.raises(LPModelError, match="inverted bounds"):
            LinearProgram().add_variable("x", lb=2.0, ub=1.0)

    def test_unknown_variable_in_row(self):
        with pytest.raises(LPModelError, match="unknown variable 'z'"):
            small_lp().add_constraint("bad", {"z": 1.0}, Sense.LE, 0.0)

    def test_repeated_terms_are_merged(self):
        lp = LinearProgram()
        lp.add_variable("x")
        row = lp.add_constraint("r", [("x", 1.0), ("x", 2.0)], Sense.LE, 6.0)
        assert list(row.coefficients) == [3.0]

    def test_empty_row_is_accepted(self):
        lp = small_lp()
        lp.add_constraint("empty", {}, Sense.LE, 0.0)
        assert solve(lp).status == SolveStatus.OPTIMAL

    def test_add_range_creates_two_rows(self):
        lp = LinearProgram()
        lp.add_variable("x", lb=-INF, obj=-1.0)
        lower, upper = lp.add_range("band", {"x": 1.0}, -2.0, 5.0)
        assert (lower.name, upper.name) == ("band/lower", "band/upper")
        assert solve(lp).value("x") == pytest.approx(5.0)

    def test_range_with_lower_above_upper(self):
        lp = LinearProgram()
        lp.add_variable("x")
        with pytest.raises(LPModelError):
            lp.add_range("band", {"x": 1.0}, 3.0, 1.0)

    def test_without_constraints_drops_family(self):
        lp = small_lp()
        reduced = lp.without_constraints("cap/")
        assert reduced.n_constraints == 1
        assert reduced.n_variables == 2
        assert lp.n_constraints == 2
        assert solve(reduced).value("x") == pytest.approx(4.0)

    def test_check_solution_reports_worst_row(self):
        lp = small_lp()
        bad = Solution(status=SolveStatus.OPTIMAL, objective=0.0, primal={"x": 1.0, "y": 0.0})
        violation, where = lp.check_solution(bad)
        assert violation == pytest.approx(3.0)
        assert where == "demand"

    def test_check_solution_of_optimum_is_clean(self):
        lp = small_lp()
        violation, _ = lp.check_solution(solve(lp))
        assert violation <= 1e-6

    def test_optimal_solution_needs_primal_values(self):
        with pytest.raises(ValueError):
            Solution(status=SolveStatus.OPTIMAL, objective=1.0)


class TestBackends:
    def test_registered_backends(self):
        assert {"highs", "highs-ds", "highs-ipm"} <= set(backend_factory.available())

    def test_unknown_backend_falls_back(self):
        assert backend_factory.create_backend("cplex-not-installed").name == "highs"

    @pytest.mark.parametrize("name", ["highs-ds", "highs-ipm"])
    def test_variants_agree(self, name):
        assert solve(small_lp(), backend=name).objective == pytest.approx(5.0, rel=1e-7)

    def test_duals_on_request(self):
        solution = solve(small_lp(), with_duals=True)
        # one more MW of demand is served by y at cost 2
        assert solution.duals["demand"] == pytest.approx(2.0)


class TestLPFormat:
    def test_sections(self):
        text = write_lp(small_lp())
        for section in ("Minimize", "Subject To", "Bounds", "End"):
            assert section in text

    def test_names_are_sanitized(self):
        lp = LinearProgram()
        lp.add_variable("p plus[1]", obj=1.0)
        lp.add_variable("2x", obj=1.0)
        lp.add_constraint("e row", {"p plus[1]": 1.0, "2x": 1.0}, Sense.GE, 1.0)
        text = write_lp(lp)
        assert "p_plus_1_" in text
        assert " 2x" not in text
        assert "e row" not in text

    def test_round_trip_keeps_optimum(self, tmp_path):
        lp = LinearProgram("bounded")
        lp.add_variable("x", obj=1.0)
        lp.add_variable("y", lb=-INF, ub=INF, obj=-1.0)
        lp.add_variable("z", lb=2.0, ub=2.0, obj=3.0)
        lp.add_constraint("sum", {"x": 1.0, "y": 1.0, "z": 1.0}, Sense.EQ, 10.0)
        lp.add_range("band", {"y": 1.0}, -5.0, 4.0)

        path = write_lp_file(lp, tmp_path / "bounded.lp")
        reread = read_lp_file(path)

        assert reread.n_variables == lp.n_variables
        assert reread.n_constraints == lp.n_constraints
        assert solve(reread).objective == pytest.approx(solve(lp).objective, abs=1e-9)

    def test_many_terms_wrap(self):
        lp = LinearProgram()
        for i in range(20):
            lp.add_variable(f"v{i}", obj=1.0)
        lp.add_constraint("all", {f"v{i}": 1.0 for i in range(20)}, Sense.GE, 1.0)
        reread = read_lp(write_lp(lp))
        assert reread.constraint("all").coefficients.size == 20

    def test_text_outside_sections(self):
        with pytest.raises(LPModelError, match="outside of any section"):
            read_lp("x + y >= 1\nEnd\n")

    def test_row_without_sense(self):
        with pytest.raises(LPModelError, match="has no sense"):
            read_lp("Minimize\n obj: + 1.0 x\nSubject To\n r: + 1.0 x\nEnd\n")


class FixedAnswerBackend(LPBackend):
    """Reports a given primal and objective as optimal without solving"""

    name = "fixed"

    def __init__(self, primal, objective):
        self.primal = primal
        self.objective = objective

    def solve(self, lp, tolerances, with_duals=False):
        return Solution(status=SolveStatus.OPTIMAL, objective=self.objective, primal=dict(self.primal),
                        backend=self.name)


class TestSolutionAudit:
    def test_consistent_answer_is_kept(self):
        solution = solve(small_lp(), backend=FixedAnswerBackend({"x": 3.0, "y": 1.0}, 5.0))
        assert solution.is_optimal
        assert solution.objective == 5.0

    def test_violating_primal_becomes_error(self):
        # x + y = 2 misses the demand row by 2
        solution = solve(small_lp(), backend=FixedAnswerBackend({"x": 1.0, "y": 1.0}, 3.0))
        assert solution.status == SolveStatus.ERROR
        assert "demand" in solution.message
        assert solution.primal == {}

    def test_wrong_objective_becomes_error(self):
        solution = solve(small_lp(), backend=FixedAnswerBackend({"x": 3.0, "y": 1.0}, 4.0))
        assert solution.status == SolveStatus.ERROR
        assert "objective" in solution.message
